// SPDX-License-Identifier: Apache-2.0
#include "sdr/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sdr {

std::string to_string(Metric m) {
    switch (m) {
        case Metric::Clip: return "clip";
        case Metric::ImageReward: return "image_reward";
        case Metric::Hps: return "hps";
    }
    return "?";
}

std::optional<Metric> parse_metric(const std::string& s) {
    if (s == "clip") return Metric::Clip;
    if (s == "image_reward") return Metric::ImageReward;
    if (s == "hps") return Metric::Hps;
    return std::nullopt;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        std::ostringstream oss;
        oss << "vector dimensions differ: " << a.size() << " vs " << b.size();
        throw DimensionMismatch(oss.str());
    }
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    double num = dot(a, b);
    double na = std::sqrt(dot(a, a));
    double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return num / (na * nb);
}

double ScorerBackend::hps_similarity(const std::string& prompt, const ImageFeatures& image) const {
    return dot(embed_text(prompt), embed_image(image));
}

double clip_score(const Instruction& t, const ImageFeatures& x, const ScorerBackend& b) {
    double c = cosine_similarity(b.embed_text(t.prompt), b.embed_image(x));
    return 2.5 * std::max(c, 0.0);
}

double image_reward_score(const Instruction& t, const ImageFeatures& x, const ScorerBackend& b) {
    return b.reward_scalar(t.prompt, x);
}

double hps_score(const Instruction& t, const ImageFeatures& x, const ScorerBackend& b) {
    if (!(b.tau() > 0.0)) {
        std::ostringstream oss;
        oss << "tau must be positive, got " << b.tau();
        throw NonpositiveTau(oss.str());
    }
    return b.hps_similarity(t.prompt, x) / b.tau();
}

ScoreTriple raw_score_triple(const Instruction& t, const ImageFeatures& x, const ScorerBackend& b) {
    ScoreTriple triple;
    triple.clip = clip_score(t, x, b);
    triple.image_reward = image_reward_score(t, x, b);
    triple.hps = hps_score(t, x, b);
    return triple;
}

ScoreTriple raw_score_triple(const Instruction& t, const ImageFeatures& x, const MetricScorer& s) {
    ScoreTriple triple;
    triple.clip = s.score(Metric::Clip, t.prompt, x);
    triple.image_reward = s.score(Metric::ImageReward, t.prompt, x);
    triple.hps = s.score(Metric::Hps, t.prompt, x);
    return triple;
}

std::vector<double> normalize_scores(const std::vector<double>& raw) {
    if (raw.empty()) return {};
    auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(raw.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    for (size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo) / (hi - lo);
    return out;
}

void NormalizationContext::add(Metric m, double raw) {
    pops_[static_cast<size_t>(m)].push_back(raw);
}

void NormalizationContext::add(const ScoreTriple& t) {
    add(Metric::Clip, t.clip);
    add(Metric::ImageReward, t.image_reward);
    add(Metric::Hps, t.hps);
}

const std::vector<double>& NormalizationContext::population(Metric m) const {
    return pops_[static_cast<size_t>(m)];
}

bool NormalizationContext::contains(Metric m, double raw) const {
    const auto& pop = population(m);
    return std::find(pop.begin(), pop.end(), raw) != pop.end();
}

double NormalizationContext::normalize(Metric m, double raw) const {
    if (!contains(m, raw)) {
        std::ostringstream oss;
        oss << "raw " << to_string(m) << " score " << raw
            << " is not part of this comparison batch";
        throw PopulationMismatch(oss.str());
    }
    const auto& pop = population(m);
    auto [lo_it, hi_it] = std::minmax_element(pop.begin(), pop.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi == lo) return 0.5;
    return (raw - lo) / (hi - lo);
}

std::vector<double> MetricScorer::score_batch(Metric m, const std::vector<std::string>& prompts,
                                              const std::vector<ImageFeatures>& features) const {
    if (prompts.size() != features.size()) {
        throw DimensionMismatch("score_batch: prompt and feature counts differ");
    }
    std::vector<double> out;
    out.reserve(prompts.size());
    for (size_t i = 0; i < prompts.size(); ++i) out.push_back(score(m, prompts[i], features[i]));
    return out;
}

double LocalMetricScorer::score(Metric m, const std::string& prompt, const ImageFeatures& x) const {
    Instruction t;
    t.prompt = prompt;
    switch (m) {
        case Metric::Clip: return clip_score(t, x, backend_);
        case Metric::ImageReward: return image_reward_score(t, x, backend_);
        case Metric::Hps: return hps_score(t, x, backend_);
    }
    throw Error("unknown metric");
}

UnifiedScore unified_score(const Instruction& t, const T2IApi& r, int k,
                           const std::vector<std::uint64_t>& seeds, const GenerationBackend& gen,
                           const MetricScorer& s, const NormalizationContext& ctx) {
    if (k < 1 || static_cast<int>(seeds.size()) != k) {
        std::ostringstream oss;
        oss << "unified_score: expected k=" << k << " seeds, got " << seeds.size();
        throw Error(oss.str());
    }
    UnifiedScore u;
    u.k = k;
    u.per_image.reserve(static_cast<size_t>(k));
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        ImageFeatures x = gen.generate(r, t, seeds[static_cast<size_t>(i)]);
        ScoreTriple raw = raw_score_triple(t, x, s);
        double combined = (ctx.normalize(Metric::Clip, raw.clip) +
                           ctx.normalize(Metric::ImageReward, raw.image_reward) +
                           ctx.normalize(Metric::Hps, raw.hps)) /
                          3.0;
        u.per_image.push_back(combined);
        sum += combined;
    }
    u.value = sum / static_cast<double>(k);
    return u;
}

UnifiedScore unified_score(const Instruction& t, const T2IApi& r, int k,
                           const std::vector<std::uint64_t>& seeds, const GenerationBackend& gen,
                           const ScorerBackend& b, const NormalizationContext& ctx) {
    LocalMetricScorer local(b);
    return unified_score(t, r, k, seeds, gen, local, ctx);
}

} // namespace sdr
