// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdr/schema.hpp"
#include "sdr/vocab.hpp"

namespace sdr {

// Feature space of the log-linear policy:
//   [0, V)                       previous response token (BOS before step 0)
//   [V, V + 11)                  position bucket min(step, 10)
//   [V + 11, V + 11 + 512)       prompt bag-of-words hash buckets (counts)
constexpr int kPositionBuckets = 11;
constexpr int kPromptBuckets = 512;
// The canonical response grammar needs at most 17 tokens (8 marker/value
// pairs plus EOS); 24 leaves room for degenerate samples.
constexpr int kMaxResponseLen = 24;

int prompt_bucket(TokenId token);

// Log-linear autoregressive policy: next-token logits are sums of per-feature
// weight rows, so the SFT objective is convex and gradients are exact.
struct PolicyParams {
    int n_tokens = 0;
    std::vector<double> w; // row-major [feature][token]

    static PolicyParams zeros(int n_tokens);
    int feature_dim() const { return n_tokens + kPositionBuckets + kPromptBuckets; }

    double at(int feature, int token) const {
        return w[static_cast<size_t>(feature) * static_cast<size_t>(n_tokens) +
                 static_cast<size_t>(token)];
    }
    double& at(int feature, int token) {
        return w[static_cast<size_t>(feature) * static_cast<size_t>(n_tokens) +
                 static_cast<size_t>(token)];
    }

    bool operator==(const PolicyParams&) const = default;
};

// One (t, r) pair in token space.
struct TokenPair {
    TokenSequence prompt;
    TokenSequence response;

    bool operator==(const TokenPair&) const = default;
};

struct Trajectory {
    TokenSequence prompt_tokens;
    TokenSequence response_tokens;
    std::vector<double> token_logprobs; // one per response token, each <= 0
};

// Prompt-side encoding: prompt words, then SEP + negative-prompt words when a
// negative prompt is present. Out-of-vocabulary words map to UNK.
TokenSequence encode_prompt(const Vocab& vocab, const Instruction& instruction);
TokenPair encode_pair(const Vocab& vocab, const InstructionApiPair& pair);

// Next-token logits for one step; exposed for decoding and tests.
std::vector<double> step_logits(const PolicyParams& params, const TokenSequence& prompt,
                                TokenId prev_token, int step);

// total = sum_t log P(r_t | t, r_<t); per-token values returned alongside.
// Throws UnknownTokenError when a token id is outside the vocabulary.
std::pair<double, std::vector<double>> conditional_logprob(const PolicyParams& params,
                                                           const TokenSequence& t,
                                                           const TokenSequence& r);

Trajectory make_trajectory(const PolicyParams& params, const TokenSequence& t,
                           const TokenSequence& r);

// p_i of the ranking stage: conditional logprob divided by |r|.
// Throws EmptyResponse when r is empty.
double length_normalized_logprob(const PolicyParams& params, const TokenSequence& t,
                                 const TokenSequence& r);

// Adds coef * d(-log P(r|t))/dW into *grad (when grad is non-null) and
// returns -log P(r|t). The shared primitive under every training loss.
double neg_logprob_accumulate(const PolicyParams& params, const TokenSequence& t,
                              const TokenSequence& r, double coef, std::vector<double>* grad);

// loss = -(1/|batch|) sum conditional_logprob; grad is exact.
std::pair<double, std::vector<double>> sft_loss_and_grad(const PolicyParams& params,
                                                         const std::vector<TokenPair>& batch);

// Ancestral sampling from the temperature-scaled softmax until EOS or
// max_len. Deterministic given seed.
TokenSequence sample_multinomial(const PolicyParams& params, const TokenSequence& t,
                                 double temperature, std::uint64_t seed,
                                 int max_len = kMaxResponseLen);

TokenSequence greedy_decode(const PolicyParams& params, const TokenSequence& t,
                            int max_len = kMaxResponseLen);

// m groups of width 1 decoded sequentially; group g's step-t logits are
// penalized by lambda times the number of earlier groups that chose each
// token at step t.
std::vector<TokenSequence> diverse_beam_search(const PolicyParams& params, const TokenSequence& t,
                                               int m, double lambda,
                                               int max_len = kMaxResponseLen);

struct SftConfig {
    int epochs = 1;
    double lr = 0.05;
    int batch_size = 16; // <= 0 means full batch
    std::uint64_t seed = 0;
};

struct SftEpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
};

// Minibatch gradient descent with per-epoch seeded shuffling. Throws
// DivergenceDetected when the loss stops being finite.
PolicyParams train_sft(PolicyParams params, const std::vector<TokenPair>& dataset,
                       const SftConfig& cfg, std::vector<SftEpochLog>* log = nullptr);

// A policy checkpoint couples weights with the vocabulary they index.
struct Policy {
    Vocab vocab;
    PolicyParams params;
};

void save_policy(std::ostream& os, const Policy& policy);
Policy load_policy(std::istream& is); // throws IoError on malformed input
void save_policy_file(const std::string& path, const Policy& policy);
Policy load_policy_file(const std::string& path);

} // namespace sdr
