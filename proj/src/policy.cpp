// SPDX-License-Identifier: Apache-2.0
#include "sdr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "sdr/errors.hpp"
#include "sdr/hash.hpp"
#include "sdr/jsonl.hpp"
#include "sdr/token_codec.hpp"

namespace sdr {
namespace {

void check_token(const PolicyParams& params, TokenId id, const char* where) {
    if (id < 0 || id >= params.n_tokens) {
        std::ostringstream oss;
        oss << where << ": token id " << id << " outside vocabulary of size " << params.n_tokens;
        throw UnknownTokenError(oss.str());
    }
}

int position_bucket(int step) { return std::min(step, kPositionBuckets - 1); }

// (bucket, count) pairs for the prompt's bag of words, sorted by bucket.
std::vector<std::pair<int, double>> prompt_feature_counts(const PolicyParams& params,
                                                          const TokenSequence& prompt) {
    std::vector<std::pair<int, double>> counts;
    if (prompt.empty()) return counts;
    std::vector<int> buckets;
    buckets.reserve(prompt.size());
    for (TokenId id : prompt) {
        check_token(params, id, "prompt");
        buckets.push_back(prompt_bucket(id));
    }
    std::sort(buckets.begin(), buckets.end());
    for (size_t i = 0; i < buckets.size();) {
        size_t k = i;
        while (k < buckets.size() && buckets[k] == buckets[i]) ++k;
        counts.emplace_back(buckets[i], static_cast<double>(k - i));
        i = k;
    }
    return counts;
}

// Active feature rows (index, value) for one decoding step.
std::vector<std::pair<int, double>> active_features(
    const PolicyParams& params, const std::vector<std::pair<int, double>>& prompt_counts,
    TokenId prev_token, int step) {
    std::vector<std::pair<int, double>> rows;
    rows.reserve(prompt_counts.size() + 2);
    rows.emplace_back(prev_token, 1.0);
    rows.emplace_back(params.n_tokens + position_bucket(step), 1.0);
    for (const auto& [bucket, count] : prompt_counts)
        rows.emplace_back(params.n_tokens + kPositionBuckets + bucket, count);
    return rows;
}

std::vector<double> logits_for(const PolicyParams& params,
                               const std::vector<std::pair<int, double>>& rows) {
    std::vector<double> logits(static_cast<size_t>(params.n_tokens), 0.0);
    for (const auto& [feature, value] : rows) {
        const double* row = params.w.data() +
                            static_cast<size_t>(feature) * static_cast<size_t>(params.n_tokens);
        for (int j = 0; j < params.n_tokens; ++j) logits[static_cast<size_t>(j)] += value * row[j];
    }
    return logits;
}

// In-place softmax; returns log of the normalizer offset so that
// log p_j = logits_in[j] - max - log_z.
void softmax_inplace(std::vector<double>& logits, double* max_out, double* log_z_out) {
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double& l : logits) {
        l = std::exp(l - mx);
        z += l;
    }
    for (double& l : logits) l /= z;
    if (max_out) *max_out = mx;
    if (log_z_out) *log_z_out = std::log(z);
}

TokenId argmax_lowest(const std::vector<double>& v) {
    TokenId best = 0;
    for (size_t j = 1; j < v.size(); ++j)
        if (v[j] > v[static_cast<size_t>(best)]) best = static_cast<TokenId>(j);
    return best;
}

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

} // namespace

int prompt_bucket(TokenId token) {
    return static_cast<int>(fnv1a_u64(static_cast<std::uint64_t>(token)) %
                            static_cast<std::uint64_t>(kPromptBuckets));
}

PolicyParams PolicyParams::zeros(int n_tokens) {
    PolicyParams p;
    p.n_tokens = n_tokens;
    p.w.assign(static_cast<size_t>(p.feature_dim()) * static_cast<size_t>(n_tokens), 0.0);
    return p;
}

TokenSequence encode_prompt(const Vocab& vocab, const Instruction& instruction) {
    TokenSequence t = vocab.tokenize_prompt(instruction.prompt);
    if (!instruction.negative_prompt.empty()) {
        t.push_back(Vocab::kSep);
        TokenSequence neg = vocab.tokenize_prompt(instruction.negative_prompt);
        t.insert(t.end(), neg.begin(), neg.end());
    }
    return t;
}

TokenPair encode_pair(const Vocab& vocab, const InstructionApiPair& pair) {
    TokenPair tp;
    tp.prompt = encode_prompt(vocab, pair.instruction);
    T2IApi api = pair.api;
    api.params = snap_params(api.params);
    tp.response = render_response_tokens(api, vocab);
    return tp;
}

std::vector<double> step_logits(const PolicyParams& params, const TokenSequence& prompt,
                                TokenId prev_token, int step) {
    check_token(params, prev_token, "previous token");
    auto counts = prompt_feature_counts(params, prompt);
    return logits_for(params, active_features(params, counts, prev_token, step));
}

std::pair<double, std::vector<double>> conditional_logprob(const PolicyParams& params,
                                                           const TokenSequence& t,
                                                           const TokenSequence& r) {
    for (TokenId id : r) check_token(params, id, "response");
    auto counts = prompt_feature_counts(params, t);
    double total = 0.0;
    std::vector<double> per_token;
    per_token.reserve(r.size());
    TokenId prev = Vocab::kBos;
    for (size_t step = 0; step < r.size(); ++step) {
        auto logits = logits_for(params, active_features(params, counts, prev, static_cast<int>(step)));
        double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double l : logits) z += std::exp(l - mx);
        double lp = logits[static_cast<size_t>(r[step])] - mx - std::log(z);
        lp = std::min(lp, 0.0);
        per_token.push_back(lp);
        total += lp;
        prev = r[step];
    }
    return {total, per_token};
}

Trajectory make_trajectory(const PolicyParams& params, const TokenSequence& t,
                           const TokenSequence& r) {
    Trajectory traj;
    traj.prompt_tokens = t;
    traj.response_tokens = r;
    traj.token_logprobs = conditional_logprob(params, t, r).second;
    return traj;
}

double length_normalized_logprob(const PolicyParams& params, const TokenSequence& t,
                                 const TokenSequence& r) {
    if (r.empty()) throw EmptyResponse("length-normalized logprob of an empty response");
    return conditional_logprob(params, t, r).first / static_cast<double>(r.size());
}

double neg_logprob_accumulate(const PolicyParams& params, const TokenSequence& t,
                              const TokenSequence& r, double coef, std::vector<double>* grad) {
    for (TokenId id : r) check_token(params, id, "response");
    if (grad && grad->size() != params.w.size())
        throw DimensionMismatch("gradient buffer size does not match parameter count");
    auto counts = prompt_feature_counts(params, t);
    double total = 0.0;
    TokenId prev = Vocab::kBos;
    for (size_t step = 0; step < r.size(); ++step) {
        auto rows = active_features(params, counts, prev, static_cast<int>(step));
        auto probs = logits_for(params, rows);
        double mx, log_z;
        softmax_inplace(probs, &mx, &log_z);
        const TokenId y = r[step];
        double p_y = probs[static_cast<size_t>(y)];
        total += -(std::log(std::max(p_y, 1e-300)));
        if (grad) {
            for (const auto& [feature, value] : rows) {
                double* row = grad->data() +
                              static_cast<size_t>(feature) * static_cast<size_t>(params.n_tokens);
                const double cv = coef * value;
                for (int j = 0; j < params.n_tokens; ++j)
                    row[j] += cv * probs[static_cast<size_t>(j)];
                row[y] -= cv;
            }
        }
        prev = y;
    }
    return total;
}

std::pair<double, std::vector<double>> sft_loss_and_grad(const PolicyParams& params,
                                                         const std::vector<TokenPair>& batch) {
    if (batch.empty()) throw Error("sft_loss_and_grad: empty batch");
    std::vector<double> grad(params.w.size(), 0.0);
    const double coef = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (const auto& pair : batch)
        loss += coef * neg_logprob_accumulate(params, pair.prompt, pair.response, coef, &grad);
    return {loss, std::move(grad)};
}

TokenSequence sample_multinomial(const PolicyParams& params, const TokenSequence& t,
                                 double temperature, std::uint64_t seed, int max_len) {
    if (!(temperature > 0.0)) throw Error("temperature must be positive");
    std::mt19937_64 rng(seed);
    auto counts = prompt_feature_counts(params, t);
    TokenSequence out;
    TokenId prev = Vocab::kBos;
    for (int step = 0; step < max_len; ++step) {
        auto logits = logits_for(params, active_features(params, counts, prev, step));
        for (double& l : logits) l /= temperature;
        softmax_inplace(logits, nullptr, nullptr);
        const double u = unit_draw(rng);
        double cum = 0.0;
        TokenId pick = static_cast<TokenId>(params.n_tokens - 1);
        for (int j = 0; j < params.n_tokens; ++j) {
            cum += logits[static_cast<size_t>(j)];
            if (u < cum) {
                pick = static_cast<TokenId>(j);
                break;
            }
        }
        out.push_back(pick);
        if (pick == Vocab::kEos) break;
        prev = pick;
    }
    return out;
}

TokenSequence greedy_decode(const PolicyParams& params, const TokenSequence& t, int max_len) {
    auto counts = prompt_feature_counts(params, t);
    TokenSequence out;
    TokenId prev = Vocab::kBos;
    for (int step = 0; step < max_len; ++step) {
        auto logits = logits_for(params, active_features(params, counts, prev, step));
        TokenId pick = argmax_lowest(logits);
        out.push_back(pick);
        if (pick == Vocab::kEos) break;
        prev = pick;
    }
    return out;
}

std::vector<TokenSequence> diverse_beam_search(const PolicyParams& params, const TokenSequence& t,
                                               int m, double lambda, int max_len) {
    if (m < 1) throw Error("diverse_beam_search: m must be >= 1");
    auto counts = prompt_feature_counts(params, t);
    // chosen_counts[step][token] = how many earlier groups picked `token` at `step`.
    std::vector<std::vector<int>> chosen_counts(
        static_cast<size_t>(max_len), std::vector<int>(static_cast<size_t>(params.n_tokens), 0));

    std::vector<TokenSequence> groups;
    groups.reserve(static_cast<size_t>(m));
    for (int g = 0; g < m; ++g) {
        TokenSequence out;
        TokenId prev = Vocab::kBos;
        for (int step = 0; step < max_len; ++step) {
            auto logits = logits_for(params, active_features(params, counts, prev, step));
            if (lambda != 0.0) {
                const auto& cnt = chosen_counts[static_cast<size_t>(step)];
                for (int j = 0; j < params.n_tokens; ++j)
                    logits[static_cast<size_t>(j)] -= lambda * static_cast<double>(cnt[static_cast<size_t>(j)]);
            }
            TokenId pick = argmax_lowest(logits);
            out.push_back(pick);
            ++chosen_counts[static_cast<size_t>(step)][static_cast<size_t>(pick)];
            if (pick == Vocab::kEos) break;
            prev = pick;
        }
        groups.push_back(std::move(out));
    }
    return groups;
}

PolicyParams train_sft(PolicyParams params, const std::vector<TokenPair>& dataset,
                       const SftConfig& cfg, std::vector<SftEpochLog>* log) {
    if (dataset.empty()) throw Error("train_sft: empty dataset");
    std::mt19937_64 rng(cfg.seed);
    std::vector<size_t> order(dataset.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    const size_t batch_size = cfg.batch_size <= 0 ? dataset.size()
                                                  : static_cast<size_t>(cfg.batch_size);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += batch_size) {
            const size_t end = std::min(order.size(), start + batch_size);
            std::vector<TokenPair> batch;
            batch.reserve(end - start);
            for (size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);
            auto [loss, grad] = sft_loss_and_grad(params, batch);
            if (!std::isfinite(loss)) {
                std::ostringstream oss;
                oss << "training loss became non-finite at epoch " << epoch;
                throw DivergenceDetected(oss.str());
            }
            for (size_t i = 0; i < params.w.size(); ++i) params.w[i] -= cfg.lr * grad[i];
            epoch_loss += loss * static_cast<double>(end - start);
        }
        if (log)
            log->push_back(SftEpochLog{epoch, epoch_loss / static_cast<double>(dataset.size())});
    }
    return params;
}

void save_policy(std::ostream& os, const Policy& policy) {
    os << "sdrouter-policy 1\n";
    policy.vocab.save(os);
    os << "weights " << policy.params.feature_dim() << ' ' << policy.params.n_tokens << '\n';
    char buf[40];
    const int V = policy.params.n_tokens;
    for (int f = 0; f < policy.params.feature_dim(); ++f) {
        for (int j = 0; j < V; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", policy.params.at(f, j));
            os << buf << (j + 1 == V ? '\n' : ' ');
        }
    }
    os << "end\n";
}

Policy load_policy(std::istream& is) {
    std::string header;
    std::getline(is, header);
    if (header != "sdrouter-policy 1") throw IoError("unrecognized policy checkpoint header");
    Policy policy;
    policy.vocab = Vocab::load(is);
    std::string tag;
    int feature_dim = 0, n_tokens = 0;
    is >> tag >> feature_dim >> n_tokens;
    if (!is || tag != "weights") throw IoError("policy checkpoint missing weights section");
    if (n_tokens != policy.vocab.size())
        throw IoError("policy checkpoint weight dimensions do not match its vocabulary");
    policy.params = PolicyParams::zeros(n_tokens);
    if (feature_dim != policy.params.feature_dim())
        throw IoError("policy checkpoint has an unexpected feature dimension");
    for (double& v : policy.params.w) {
        if (!(is >> v)) throw IoError("policy checkpoint weight matrix truncated");
    }
    is >> tag;
    if (!is || tag != "end") throw IoError("policy checkpoint missing end marker");
    return policy;
}

void save_policy_file(const std::string& path, const Policy& policy) {
    std::ostringstream os;
    save_policy(os, policy);
    write_file(path, os.str());
}

Policy load_policy_file(const std::string& path) {
    std::istringstream is(read_file(path));
    return load_policy(is);
}

} // namespace sdr
