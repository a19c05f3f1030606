// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdr/policy.hpp"
#include "sdr/registry.hpp"
#include "sdr/scoring.hpp"

namespace sdr {

enum class Variant { Baseline, BaselineStar, DiffAgentSharp, SFT, RRHF };
constexpr std::array<Variant, 5> kAllVariants = {Variant::Baseline, Variant::BaselineStar,
                                                 Variant::DiffAgentSharp, Variant::SFT,
                                                 Variant::RRHF};
std::string to_string(Variant v);
std::optional<Variant> parse_variant(const std::string& s);

struct VariantStats {
    double clip_mean = 0.0;
    double image_reward_mean = 0.0;
    double hps_mean = 0.0;
    double unified_mean = 0.0;
};

struct EvalReport {
    std::map<Variant, VariantStats> variants;
    std::map<Variant, double> hallucination_rate; // policy-decoding variants only
    int n_prompts = 0;
    int n_images_per_api = 0;
    std::optional<double> wall_time_per_response; // filled only when timed
    bool partial = false;                         // a backend failure cut the run short
};

// The registry entry playing the role of the vanilla comparison model: the
// most-downloaded entry flagged `baseline` (ties toward the smaller name).
const RegistryEntry& global_baseline(const Registry& registry);

// Greedy decode -> strict grammar parse -> registry reconstruction; empty on
// either failure. This is the deployment path of a trained policy.
std::optional<T2IApi> decode_response(const Policy& policy, const Instruction& t,
                                      const Registry& registry);

// Fraction of prompts whose greedy decode fails strict parsing or registry
// reconstruction.
double hallucination_error(const Policy& policy, const std::vector<Instruction>& prompts,
                           const Registry& registry);

// Total by fallback: hallucinating variants degrade toward the baseline.
T2IApi resolve_variant_response(Variant variant, const Instruction& t, const Policy& sft,
                                const Policy& rrhf, const Registry& registry);

EvalReport evaluate(const std::vector<InstructionApiPair>& split,
                    const std::vector<Variant>& variants, const GenerationBackend& gen,
                    const MetricScorer& scorer, const Policy& sft, const Policy& rrhf,
                    const Registry& registry, int n_images, std::uint64_t seed, int jobs = 1);

// Warm wall-clock mean of greedy decode + reconstruction, single-threaded.
// Requires at least 10 prompts.
double timing_probe(const Policy& policy, const std::vector<Instruction>& prompts,
                    const Registry& registry);

// Directional gates for --check mode; returns one message per failed gate.
std::vector<std::string> check_directions(const EvalReport& report);

nlohmann::json report_to_json(const EvalReport& report);
std::string report_to_table(const EvalReport& report);

} // namespace sdr
