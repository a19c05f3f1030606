// SPDX-License-Identifier: Apache-2.0
#include "sdr/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "sdr/hash.hpp"
#include "sdr/parallel.hpp"
#include "sdr/token_codec.hpp"

namespace sdr {

std::string to_string(CandidateOrigin o) {
    switch (o) {
        case CandidateOrigin::Multinomial: return "multinomial";
        case CandidateOrigin::DiverseBeam: return "diverse_beam";
        case CandidateOrigin::Default: return "default";
        case CandidateOrigin::Fallback: return "fallback";
    }
    return "?";
}

CandidateSet build_candidates(const Policy& policy, const Instruction& t,
                              const Registry& registry, const RRHFConfig& cfg, std::uint64_t seed,
                              BuildStats* stats) {
    if (registry.empty()) throw RegistryError("cannot build candidates from an empty registry");
    BuildStats local;
    CandidateSet set;
    set.prompt = t;
    set.prompt_tokens = encode_prompt(policy.vocab, t);

    // One sampling round: multinomial draws (fresh seeds per round) plus, in
    // the first round only, the deterministic diverse beams.
    auto draw_round = [&](int round) {
        std::vector<std::pair<T2IApi, CandidateOrigin>> out;
        std::vector<std::pair<TokenSequence, CandidateOrigin>> seqs;
        for (int i = 0; i < cfg.n_multinomial; ++i) {
            const std::uint64_t draw_seed =
                fnv1a_u64(static_cast<std::uint64_t>(round * cfg.n_multinomial + i), seed);
            seqs.emplace_back(
                sample_multinomial(policy.params, set.prompt_tokens, cfg.temperature, draw_seed),
                CandidateOrigin::Multinomial);
        }
        if (round == 0) {
            for (auto& s : diverse_beam_search(policy.params, set.prompt_tokens, cfg.m, cfg.lambda))
                seqs.emplace_back(std::move(s), CandidateOrigin::DiverseBeam);
        }
        for (auto& [tokens, origin] : seqs) {
            ++local.sampled;
            auto info = extract_model_info(tokens, policy.vocab);
            if (!info) {
                ++local.dropped;
                continue;
            }
            ReconstructResult rec = reconstruct_full_response(*info, registry);
            if (std::holds_alternative<Hallucination>(rec)) {
                ++local.dropped;
                continue;
            }
            out.emplace_back(std::get<T2IApi>(std::move(rec)), origin);
        }
        return out;
    };

    auto candidates = draw_round(0);
    if (candidates.empty()) candidates = draw_round(1);

    // Deduplicate by model identifier; first occurrence wins.
    std::vector<std::pair<T2IApi, CandidateOrigin>> unique;
    for (auto& c : candidates) {
        bool seen = false;
        for (const auto& u : unique) {
            if (u.first.info.model == c.first.info.model) {
                seen = true;
                break;
            }
        }
        if (!seen) unique.push_back(std::move(c));
    }

    if (!unique.empty()) {
        for (auto& [api, origin] : unique) {
            set.responses.push_back(std::move(api));
            set.origins.push_back(origin);
        }
        const RegistryEntry& top = registry.most_downloaded();
        set.responses.push_back(T2IApi{top.info, default_params(top.info.base_model)});
        set.origins.push_back(CandidateOrigin::Default);
    } else {
        local.fallback = true;
        auto ranked = registry.by_downloads();
        const RegistryEntry* first = ranked.front();
        const RegistryEntry* second = ranked.size() > 1 ? ranked[1] : ranked.front();
        set.responses.push_back(T2IApi{first->info, default_params(first->info.base_model)});
        set.origins.push_back(CandidateOrigin::Default);
        set.responses.push_back(T2IApi{second->info, second->canonical_params});
        set.origins.push_back(CandidateOrigin::Fallback);
    }

    set.response_tokens.reserve(set.responses.size());
    for (const auto& api : set.responses)
        set.response_tokens.push_back(render_response_tokens(api, policy.vocab));
    set.scores.assign(set.responses.size(), 0.0);
    set.logprobs.assign(set.responses.size(), 0.0);
    if (stats) *stats = local;
    return set;
}

void score_candidates(CandidateSet& set, const GenerationBackend& gen, const MetricScorer& scorer,
                      const RRHFConfig& cfg) {
    if (set.responses.empty()) throw Error("score_candidates: empty candidate set");
    if (cfg.k < 1) throw Error("score_candidates: k must be >= 1");
    const int n = set.size();
    const int k = cfg.k;

    std::uint64_t h = fnv1a_u64(cfg.seed);
    h = fnv1a(set.prompt.prompt, h);
    h = fnv1a("\x1f", h);
    h = fnv1a(set.prompt.negative_prompt, h);
    std::vector<std::uint64_t> seeds(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) seeds[static_cast<size_t>(j)] = fnv1a_u64(static_cast<std::uint64_t>(j), h);

    // Raw grid first; the normalization population spans every
    // (candidate, image) score of the set.
    std::vector<ScoreTriple> triples(static_cast<size_t>(n * k));
    parallel_for(static_cast<size_t>(n * k), cfg.jobs, [&](size_t idx) {
        const int i = static_cast<int>(idx) / k;
        const int j = static_cast<int>(idx) % k;
        ImageFeatures x = gen.generate(set.responses[static_cast<size_t>(i)], set.prompt,
                                       seeds[static_cast<size_t>(j)]);
        triples[idx] = raw_score_triple(set.prompt, x, scorer);
    });
    NormalizationContext ctx;
    for (const auto& tr : triples) ctx.add(tr);

    for (int i = 0; i < n; ++i) {
        UnifiedScore u = unified_score(set.prompt, set.responses[static_cast<size_t>(i)], k, seeds,
                                       gen, scorer, ctx);
        set.scores[static_cast<size_t>(i)] = u.value;
    }
    set.scored = true;
}

std::pair<double, std::vector<double>> rank_loss(const PolicyParams& params, CandidateSet& set) {
    if (!set.scored) throw Error("rank_loss: candidate set is unscored");
    const int n = set.size();
    std::vector<double> p(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        p[static_cast<size_t>(i)] = length_normalized_logprob(params, set.prompt_tokens,
                                                              set.response_tokens[static_cast<size_t>(i)]);
    set.logprobs = p;

    double loss = 0.0;
    std::vector<double> coef(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (set.scores[static_cast<size_t>(i)] < set.scores[static_cast<size_t>(j)]) {
                const double d = p[static_cast<size_t>(i)] - p[static_cast<size_t>(j)];
                if (d > 0.0) {
                    loss += d;
                    coef[static_cast<size_t>(i)] += 1.0;
                    coef[static_cast<size_t>(j)] -= 1.0;
                }
            }
        }
    }

    std::vector<double> grad(params.w.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        const double c = coef[static_cast<size_t>(i)];
        if (c == 0.0) continue;
        // dp_i/dW = -(1/|r_i|) * d(-log P)/dW
        const double len = static_cast<double>(set.response_tokens[static_cast<size_t>(i)].size());
        neg_logprob_accumulate(params, set.prompt_tokens, set.response_tokens[static_cast<size_t>(i)],
                               -c / len, &grad);
    }
    return {loss, std::move(grad)};
}

std::pair<double, std::vector<double>> best_response_ce_loss(const PolicyParams& params,
                                                             CandidateSet& set) {
    if (!set.scored) throw Error("best_response_ce_loss: candidate set is unscored");
    int best = 0;
    for (int i = 1; i < set.size(); ++i)
        if (set.scores[static_cast<size_t>(i)] > set.scores[static_cast<size_t>(best)]) best = i;
    std::vector<double> grad(params.w.size(), 0.0);
    const double loss = neg_logprob_accumulate(params, set.prompt_tokens,
                                               set.response_tokens[static_cast<size_t>(best)], 1.0,
                                               &grad);
    return {loss, std::move(grad)};
}

std::pair<double, std::vector<double>> rrhf_total_loss(const PolicyParams& params,
                                                       CandidateSet& set) {
    auto [rank, rank_grad] = rank_loss(params, set);
    auto [ce, ce_grad] = best_response_ce_loss(params, set);
    for (size_t i = 0; i < rank_grad.size(); ++i) rank_grad[i] += ce_grad[i];
    return {rank + ce, std::move(rank_grad)};
}

Policy train_rrhf(const Policy& sft_policy, const std::vector<InstructionApiPair>& align_split,
                  const Registry& registry, const GenerationBackend& gen,
                  const MetricScorer& scorer, const RRHFConfig& cfg,
                  std::vector<AlignEpochLog>* log) {
    if (align_split.empty()) throw Error("train_rrhf: empty alignment split");
    Policy policy = sft_policy;
    std::mt19937_64 rng(cfg.seed);
    std::vector<size_t> order(align_split.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::vector<std::optional<CandidateSet>> cache(align_split.size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double sum_loss = 0.0, sum_rank = 0.0, sum_ce = 0.0, sum_best = 0.0;
        long sampled = 0, dropped = 0;
        for (size_t idx : order) {
            CandidateSet set;
            if (cfg.cache_candidates && cache[idx]) {
                set = *cache[idx];
            } else {
                BuildStats stats;
                const std::uint64_t prompt_seed =
                    fnv1a_u64(idx, fnv1a_u64(static_cast<std::uint64_t>(epoch), cfg.seed));
                set = build_candidates(policy, align_split[idx].instruction, registry, cfg,
                                       prompt_seed, &stats);
                sampled += stats.sampled;
                dropped += stats.dropped;
                score_candidates(set, gen, scorer, cfg);
                if (cfg.cache_candidates) cache[idx] = set;
            }

            auto [rank, rank_grad] = rank_loss(policy.params, set);
            auto [ce, ce_grad] = best_response_ce_loss(policy.params, set);
            const double loss = rank + ce;
            if (!std::isfinite(loss)) {
                std::ostringstream oss;
                oss << "alignment loss became non-finite at epoch " << epoch;
                throw DivergenceDetected(oss.str());
            }
            for (size_t i = 0; i < policy.params.w.size(); ++i)
                policy.params.w[i] -= cfg.lr * (rank_grad[i] + ce_grad[i]);

            sum_loss += loss;
            sum_rank += rank;
            sum_ce += ce;
            sum_best += *std::max_element(set.scores.begin(), set.scores.end());
        }
        if (log) {
            const double n = static_cast<double>(align_split.size());
            AlignEpochLog entry;
            entry.epoch = epoch;
            entry.mean_loss = sum_loss / n;
            entry.mean_rank_loss = sum_rank / n;
            entry.mean_ce_loss = sum_ce / n;
            entry.raw_hallucination_rate =
                sampled > 0 ? static_cast<double>(dropped) / static_cast<double>(sampled) : 0.0;
            entry.mean_best_score = sum_best / n;
            log->push_back(entry);
        }
    }
    return policy;
}

} // namespace sdr
