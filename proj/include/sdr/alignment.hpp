// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdr/policy.hpp"
#include "sdr/registry.hpp"
#include "sdr/scoring.hpp"

namespace sdr {

// Fallback marks the emergency pair of most-downloaded models used when no
// sampled candidate survives reconstruction twice in a row.
enum class CandidateOrigin { Multinomial, DiverseBeam, Default, Fallback };
std::string to_string(CandidateOrigin o);

// The n validated responses for one prompt, jointly scored and ranked. Every
// response is registry-reconstructed (hallucinations never enter). Token
// renderings are cached so the losses need no vocabulary access.
struct CandidateSet {
    Instruction prompt;
    std::vector<T2IApi> responses;
    std::vector<CandidateOrigin> origins;
    std::vector<double> scores;   // s_i, filled by score_candidates
    std::vector<double> logprobs; // p_i, filled by the losses

    TokenSequence prompt_tokens;
    std::vector<TokenSequence> response_tokens;

    bool scored = false;
    int size() const { return static_cast<int>(responses.size()); }
};

struct RRHFConfig {
    int m = 4;              // diverse beam groups
    int n_multinomial = 2;  // multinomial samples per prompt
    double lambda = 0.5;    // diversity penalty
    double temperature = 1.0;
    int k = 10;             // reward seeds per candidate
    double lr = 0.02;
    int epochs = 3;
    std::uint64_t seed = 0;
    bool cache_candidates = false; // reuse epoch-0 candidates and scores
    int jobs = 1;
};

struct BuildStats {
    long sampled = 0; // sequences drawn (multinomial + beams, incl. re-sample)
    long dropped = 0; // failed extraction or reconstruction (raw hallucinations)
    bool fallback = false;
};

// Draws n_multinomial samples and m diverse beams, keeps the model
// information of each, reconstructs against the registry, deduplicates by
// model, then appends the default response (most-downloaded model + default
// parameters). When nothing survives: one re-sample, then the two
// most-downloaded models.
CandidateSet build_candidates(const Policy& policy, const Instruction& t,
                              const Registry& registry, const RRHFConfig& cfg, std::uint64_t seed,
                              BuildStats* stats = nullptr);

// Unified score per candidate with k shared seeds and one shared
// normalization population spanning every (candidate, image) raw score.
void score_candidates(CandidateSet& set, const GenerationBackend& gen, const MetricScorer& scorer,
                      const RRHFConfig& cfg);

// L_rank = sum over pairs with s_i < s_j of max(0, p_i - p_j); p from
// length-normalized conditional logprobs of the canonical renderings.
std::pair<double, std::vector<double>> rank_loss(const PolicyParams& params, CandidateSet& set);

// Cross-entropy on the best-scored candidate (ties toward the lowest index).
std::pair<double, std::vector<double>> best_response_ce_loss(const PolicyParams& params,
                                                             CandidateSet& set);

// L = L_rank + L_ce, unweighted; gradient is the coordinate-wise sum.
std::pair<double, std::vector<double>> rrhf_total_loss(const PolicyParams& params,
                                                       CandidateSet& set);

struct AlignEpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double mean_rank_loss = 0.0;
    double mean_ce_loss = 0.0;
    double raw_hallucination_rate = 0.0;
    double mean_best_score = 0.0;
};

// One gradient step per prompt, prompts visited in seeded-shuffle order,
// candidates rebuilt (and rescored) every epoch unless cache_candidates.
Policy train_rrhf(const Policy& sft_policy, const std::vector<InstructionApiPair>& align_split,
                  const Registry& registry, const GenerationBackend& gen,
                  const MetricScorer& scorer, const RRHFConfig& cfg,
                  std::vector<AlignEpochLog>* log = nullptr);

} // namespace sdr
