// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "sdr/alignment.hpp"
#include "sdr/catalog.hpp"
#include "sdr/policy.hpp"
#include "sdr/textgen.hpp"

namespace sdr {

enum class ScorerChoice { StyleWorld, Remote };
enum class TextGenChoice { None, Echo, Remote };

struct SftSection {
    int epochs = 3;
    double lr = 0.1;
    int batch_size = 16;
};

struct EvalSection {
    int n_images = 3;
};

// One experiment = one config file. The seed is mandatory and every command
// derives all randomness from it, so reruns are byte-identical.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string raw_records; // ingest input
    std::string world;       // synthetic world description
    std::string out_dir = "runs";

    ScorerChoice scorer = ScorerChoice::StyleWorld;
    RemoteEndpoint scorer_endpoint;
    TextGenChoice textgen = TextGenChoice::None;
    RemoteEndpoint textgen_endpoint;

    QualityThresholds quality;
    SftSection sft;
    RRHFConfig rrhf; // rrhf.seed/jobs are filled from the globals below
    EvalSection eval;
    int jobs = 1;

    // Optional explicit artifact locations; anything not listed lands under
    // run_dir() with its default name.
    std::map<std::string, std::string> paths;

    static RunConfig from_json(const nlohmann::json& j); // throws ConfigError
    static RunConfig load(const std::string& path);
    nlohmann::json to_json() const;

    // Hash of the canonical serialized form (seed overrides included).
    std::string config_hash() const;
    std::filesystem::path run_dir() const;

    // Known artifact names: registry.json, train.jsonl, align.jsonl,
    // eval.jsonl, ingest_summary.json, sft.ckpt, sft_log.jsonl, rrhf.ckpt,
    // align_log.jsonl, report.json, report.txt.
    std::filesystem::path artifact(const std::string& name) const;
};

} // namespace sdr
