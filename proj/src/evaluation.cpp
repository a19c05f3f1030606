// SPDX-License-Identifier: Apache-2.0
#include "sdr/evaluation.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "sdr/parallel.hpp"
#include "sdr/token_codec.hpp"

namespace sdr {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Baseline: return "baseline";
        case Variant::BaselineStar: return "baseline_star";
        case Variant::DiffAgentSharp: return "agent_sharp";
        case Variant::SFT: return "sft";
        case Variant::RRHF: return "rrhf";
    }
    return "?";
}

std::optional<Variant> parse_variant(const std::string& s) {
    for (Variant v : kAllVariants)
        if (to_string(v) == s) return v;
    return std::nullopt;
}

const RegistryEntry& global_baseline(const Registry& registry) {
    const RegistryEntry* best = nullptr;
    for (const auto& [name, entry] : registry.entries()) {
        if (!entry.baseline) continue;
        if (!best || entry.download_count > best->download_count) best = &entry;
    }
    if (!best) throw RegistryError("registry has no entry flagged as baseline");
    return *best;
}

std::optional<T2IApi> decode_response(const Policy& policy, const Instruction& t,
                                      const Registry& registry) {
    TokenSequence prompt = encode_prompt(policy.vocab, t);
    TokenSequence response = greedy_decode(policy.params, prompt);
    ParsedResponse parsed = parse_response_tokens(response, policy.vocab);
    if (std::holds_alternative<StructureError>(parsed)) return std::nullopt;
    ReconstructResult rec = reconstruct_full_response(std::get<T2IApi>(parsed).info, registry);
    if (std::holds_alternative<Hallucination>(rec)) return std::nullopt;
    return std::get<T2IApi>(std::move(rec));
}

double hallucination_error(const Policy& policy, const std::vector<Instruction>& prompts,
                           const Registry& registry) {
    if (prompts.empty()) return 0.0;
    long failures = 0;
    for (const auto& t : prompts)
        if (!decode_response(policy, t, registry)) ++failures;
    return static_cast<double>(failures) / static_cast<double>(prompts.size());
}

namespace {

T2IApi baseline_response(const Registry& registry) {
    const RegistryEntry& b = global_baseline(registry);
    return T2IApi{b.info, default_params(b.info.base_model)};
}

} // namespace

T2IApi resolve_variant_response(Variant variant, const Instruction& t, const Policy& sft,
                                const Policy& rrhf, const Registry& registry) {
    switch (variant) {
        case Variant::Baseline: return baseline_response(registry);
        case Variant::SFT: {
            auto api = decode_response(sft, t, registry);
            return api ? *api : baseline_response(registry);
        }
        case Variant::RRHF: {
            auto api = decode_response(rrhf, t, registry);
            return api ? *api : baseline_response(registry);
        }
        case Variant::BaselineStar: {
            T2IApi api = baseline_response(registry);
            if (auto r = decode_response(rrhf, t, registry)) api.params = r->params;
            return api;
        }
        case Variant::DiffAgentSharp: {
            if (auto r = decode_response(rrhf, t, registry))
                return T2IApi{r->info, default_params(r->info.base_model)};
            return baseline_response(registry);
        }
    }
    throw Error("unknown variant");
}

EvalReport evaluate(const std::vector<InstructionApiPair>& split,
                    const std::vector<Variant>& variants, const GenerationBackend& gen,
                    const MetricScorer& scorer, const Policy& sft, const Policy& rrhf,
                    const Registry& registry, int n_images, std::uint64_t seed, int jobs) {
    if (split.empty()) throw Error("evaluate: empty split");
    if (variants.empty()) throw Error("evaluate: no variants selected");
    if (n_images < 1) throw Error("evaluate: n_images must be >= 1");

    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> image_seeds(static_cast<size_t>(n_images));
    for (auto& s : image_seeds) s = rng();

    const size_t nv = variants.size();
    struct PromptResult {
        std::vector<VariantStats> stats;    // per variant: raw means + unified
        std::vector<char> hallucinated;     // per variant (policy variants only meaningful)
        bool failed = false;
    };
    std::vector<PromptResult> results(split.size());

    parallel_for(split.size(), jobs, [&](size_t pi) {
        const Instruction& t = split[pi].instruction;
        PromptResult& res = results[pi];
        res.stats.assign(nv, VariantStats{});
        res.hallucinated.assign(nv, 0);
        try {
            std::vector<T2IApi> responses(nv);
            for (size_t vi = 0; vi < nv; ++vi) {
                const Variant v = variants[vi];
                if (v == Variant::SFT) res.hallucinated[vi] = !decode_response(sft, t, registry);
                if (v == Variant::RRHF) res.hallucinated[vi] = !decode_response(rrhf, t, registry);
                responses[vi] = resolve_variant_response(v, t, sft, rrhf, registry);
            }

            // Paired comparison: one normalization population per prompt,
            // spanning every (variant, image) raw score.
            std::vector<std::vector<ScoreTriple>> raw(nv);
            NormalizationContext ctx;
            for (size_t vi = 0; vi < nv; ++vi) {
                raw[vi].reserve(static_cast<size_t>(n_images));
                for (int i = 0; i < n_images; ++i) {
                    ImageFeatures x =
                        gen.generate(responses[vi], t, image_seeds[static_cast<size_t>(i)]);
                    ScoreTriple tr = raw_score_triple(t, x, scorer);
                    ctx.add(tr);
                    raw[vi].push_back(tr);
                }
            }
            for (size_t vi = 0; vi < nv; ++vi) {
                VariantStats& s = res.stats[vi];
                for (const ScoreTriple& tr : raw[vi]) {
                    s.clip_mean += tr.clip;
                    s.image_reward_mean += tr.image_reward;
                    s.hps_mean += tr.hps;
                    s.unified_mean += (ctx.normalize(Metric::Clip, tr.clip) +
                                       ctx.normalize(Metric::ImageReward, tr.image_reward) +
                                       ctx.normalize(Metric::Hps, tr.hps)) /
                                      3.0;
                }
                const double k = static_cast<double>(n_images);
                s.clip_mean /= k;
                s.image_reward_mean /= k;
                s.hps_mean /= k;
                s.unified_mean /= k;
            }
        } catch (const Error&) {
            res.failed = true;
        }
    });

    EvalReport report;
    report.n_images_per_api = n_images;

    size_t completed = 0;
    while (completed < results.size() && !results[completed].failed) ++completed;
    report.partial = completed < results.size();
    report.n_prompts = static_cast<int>(completed);

    for (size_t vi = 0; vi < nv; ++vi) {
        VariantStats total;
        long halluc = 0;
        for (size_t pi = 0; pi < completed; ++pi) {
            const VariantStats& s = results[pi].stats[vi];
            total.clip_mean += s.clip_mean;
            total.image_reward_mean += s.image_reward_mean;
            total.hps_mean += s.hps_mean;
            total.unified_mean += s.unified_mean;
            halluc += results[pi].hallucinated[vi];
        }
        if (completed > 0) {
            const double n = static_cast<double>(completed);
            total.clip_mean /= n;
            total.image_reward_mean /= n;
            total.hps_mean /= n;
            total.unified_mean /= n;
        }
        report.variants[variants[vi]] = total;
        if (variants[vi] == Variant::SFT || variants[vi] == Variant::RRHF) {
            report.hallucination_rate[variants[vi]] =
                completed > 0 ? static_cast<double>(halluc) / static_cast<double>(completed) : 0.0;
        }
    }
    return report;
}

double timing_probe(const Policy& policy, const std::vector<Instruction>& prompts,
                    const Registry& registry) {
    if (prompts.size() < 10) throw Error("timing_probe: need at least 10 prompts");
    // Warm pass so allocator and cache effects do not bias the first samples.
    for (size_t i = 0; i < std::min<size_t>(prompts.size(), 3); ++i)
        (void)decode_response(policy, prompts[i], registry);

    const auto start = std::chrono::steady_clock::now();
    for (const auto& t : prompts) (void)decode_response(policy, t, registry);
    const auto stop = std::chrono::steady_clock::now();
    const double total = std::chrono::duration<double>(stop - start).count();
    return total / static_cast<double>(prompts.size());
}

std::vector<std::string> check_directions(const EvalReport& report) {
    std::vector<std::string> failures;
    auto unified = [&](Variant v) -> std::optional<double> {
        auto it = report.variants.find(v);
        if (it == report.variants.end()) return std::nullopt;
        return it->second.unified_mean;
    };
    auto require = [&](bool ok, const std::string& msg) {
        if (!ok) failures.push_back(msg);
    };

    auto base = unified(Variant::Baseline);
    auto sft = unified(Variant::SFT);
    auto rrhf = unified(Variant::RRHF);
    auto star = unified(Variant::BaselineStar);
    auto sharp = unified(Variant::DiffAgentSharp);

    if (rrhf && sft) require(*rrhf > *sft, "unified mean: rrhf must exceed sft");
    if (sft && base) require(*sft > *base, "unified mean: sft must exceed baseline");
    if (star && base) require(*star >= *base, "unified mean: baseline_star must not trail baseline");
    if (sharp && base) require(*sharp >= *base, "unified mean: agent_sharp must not trail baseline");

    auto hr = report.hallucination_rate;
    if (hr.count(Variant::RRHF) && hr.count(Variant::SFT)) {
        require(hr.at(Variant::RRHF) <= hr.at(Variant::SFT),
                "hallucination rate: rrhf must not exceed sft");
    }
    if (report.partial) failures.push_back("report is partial: a backend failure cut the run short");
    return failures;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j;
    nlohmann::json variants = nlohmann::json::object();
    for (const auto& [v, s] : report.variants) {
        nlohmann::json sv;
        sv["clip_mean"] = s.clip_mean;
        sv["image_reward_mean"] = s.image_reward_mean;
        sv["hps_mean"] = s.hps_mean;
        sv["unified_mean"] = s.unified_mean;
        variants[to_string(v)] = sv;
    }
    j["variants"] = variants;
    nlohmann::json rates = nlohmann::json::object();
    for (const auto& [v, r] : report.hallucination_rate) rates[to_string(v)] = r;
    j["hallucination_rate"] = rates;
    j["n_prompts"] = report.n_prompts;
    j["n_images_per_api"] = report.n_images_per_api;
    if (report.wall_time_per_response) j["wall_time_per_response"] = *report.wall_time_per_response;
    j["partial"] = report.partial;
    return j;
}

std::string report_to_table(const EvalReport& report) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %10s %14s %10s %10s %10s\n", "variant", "clip",
                  "image_reward", "hps", "unified", "halluc");
    os << line;
    for (Variant v : kAllVariants) {
        auto it = report.variants.find(v);
        if (it == report.variants.end()) continue;
        const VariantStats& s = it->second;
        std::string halluc = "-";
        if (auto hit = report.hallucination_rate.find(v); hit != report.hallucination_rate.end()) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.4f", hit->second);
            halluc = buf;
        }
        std::snprintf(line, sizeof line, "%-14s %10.4f %14.4f %10.4f %10.4f %10s\n",
                      to_string(v).c_str(), s.clip_mean, s.image_reward_mean, s.hps_mean,
                      s.unified_mean, halluc.c_str());
        os << line;
    }
    std::snprintf(line, sizeof line, "prompts %d, images per api %d%s\n", report.n_prompts,
                  report.n_images_per_api, report.partial ? ", PARTIAL" : "");
    os << line;
    if (report.wall_time_per_response) {
        std::snprintf(line, sizeof line, "wall time per response: %.6f s\n",
                      *report.wall_time_per_response);
        os << line;
    }
    return os.str();
}

} // namespace sdr
