// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdr/registry.hpp"
#include "sdr/schema.hpp"
#include "sdr/textgen.hpp"

namespace sdr {

struct RawImageRecord {
    std::string prompt;
    std::string negative_prompt;
    // Partial generation parameters as uploaded; missing pieces are filled
    // from the architecture defaults when pairs are built.
    std::optional<int> width;
    std::optional<int> height;
    std::optional<std::string> sampling_method;
    std::optional<int> sampling_steps;
    std::optional<double> cfg_scale;
    std::optional<std::string> base_model_hash;
    bool nsfw = false;
};

struct RawModelRecord {
    std::string id;
    std::string name;
    std::string kind_str;
    std::string arch_str;
    bool nsfw = false;
    bool file_available = true;
    // image-index (as decimal string) -> base model hash; fallback source for
    // LoRA images that carry no per-image hash.
    std::map<std::string, std::string> base_model_hash_map;
    std::vector<std::string> file_hashes;
    long download_count = 0;
    long rating_count = 0;
    double rating = 0.0;
    std::string description;
    bool baseline = false;
    std::vector<RawImageRecord> sample_images;
};

RawModelRecord parse_raw_record(const nlohmann::json& j);
nlohmann::json serialize_raw_record(const RawModelRecord& r);

struct QualityThresholds {
    long min_downloads = 100;
    long min_rating_count = 5;
    double min_rating = 3.5;
};

struct LoraTag {
    std::string name;
    // Absent weight marks a malformed tag that was left in the text.
    std::optional<double> weight;
};

struct StripResult {
    std::string clean;
    std::vector<LoraTag> tags;
};

// Removes every well-formed `<lora:NAME:WEIGHT>` tag, normalizing whitespace
// at the removal sites only. Malformed tags stay in the text and are reported
// with weight absent. Idempotent.
StripResult strip_lora_tags(const std::string& prompt);

struct AvailabilityStats {
    long input = 0;
    long dropped_unavailable = 0;
    long dropped_nsfw = 0;
    long dropped_bad_kind = 0;
    long dropped_bad_arch = 0;
    long dropped_lora_no_base = 0;
    long images_dropped_nsfw = 0;
    long images_dropped_unresolved = 0;
    long retained = 0;
};

// Availability filter: keeps records that are downloadable, safe, and within
// the supported kind/architecture scope. LoRA sample images must resolve
// their base model hash against the checkpoints present in `records`;
// LoRA records with no resolvable image are dropped. NSFW-flagged sample
// images are dropped from retained records.
std::vector<RawModelRecord> filter_availability(const std::vector<RawModelRecord>& records,
                                                AvailabilityStats* stats = nullptr);

// Threshold quality filter (>= on all three criteria).
std::vector<RawModelRecord> filter_quality(const std::vector<RawModelRecord>& records,
                                           const QualityThresholds& th);

// Asks the client to rewrite a model description from its sample prompts.
// Client failure degrades to the original description.
std::string reconstruct_description(const RawModelRecord& record, TextGenClient& client,
                                    long* degraded_count = nullptr);

// Few-shot expansion of a terse prompt; degrades to the input.
std::string expand_prompt(const std::string& short_prompt, TextGenClient& client,
                          long* degraded_count = nullptr);

// Registry entry construction: canonical parameters are the per-field mode
// over the record's sample images (values snapped to the emission grids,
// missing values filled from architecture defaults, ties broken toward the
// defaults).
RegistryEntry make_registry_entry(const RawModelRecord& record);
Registry build_registry(const std::vector<RawModelRecord>& records,
                        SamplingMethods methods = default_sampling_methods());

struct BuildPairsStats {
    long images = 0;
    long pairs = 0;
    long dropped_invalid = 0;
};

// One pair per retained sample image; instructions are LoRA-stripped, missing
// parameters filled from the architecture defaults. Images whose filled
// parameters fail validation are dropped and counted.
std::vector<InstructionApiPair> build_pairs(const std::vector<RawModelRecord>& records,
                                            const Registry& registry,
                                            BuildPairsStats* stats = nullptr);

struct TooFewPairs : Error {
    using Error::Error;
};

struct DatasetSplits {
    std::vector<InstructionApiPair> train;
    std::vector<InstructionApiPair> align;
    std::vector<InstructionApiPair> eval;
};

// Seeded shuffle then an exact 8:1:1 partition (floor for the small splits,
// remainder to train). Throws TooFewPairs below 10 pairs.
DatasetSplits split_dataset(std::vector<InstructionApiPair> pairs, std::uint64_t seed);

} // namespace sdr
