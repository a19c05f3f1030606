// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdr/errors.hpp"
#include "sdr/schema.hpp"

namespace sdr {

enum class Metric { Clip, ImageReward, Hps };
constexpr std::array<Metric, 3> kMetrics = {Metric::Clip, Metric::ImageReward, Metric::Hps};
std::string to_string(Metric m);
std::optional<Metric> parse_metric(const std::string& s);

// Feature representation of one generated image. Pixels are out of scope;
// every downstream quantity consumes embeddings or backend scalars.
struct ImageFeatures {
    std::vector<double> vector;

    // Provenance of the generation call that produced the features.
    std::string api_id;
    std::uint64_t prompt_hash = 0;
    std::uint64_t seed = 0;
};

struct ScoreTriple {
    double clip = 0.0;
    double image_reward = 0.0;
    double hps = 0.0;
};

struct UnifiedScore {
    double value = 0.0;
    std::vector<double> per_image;
    int k = 0;
};

// Deterministic scorer over feature vectors. Embeddings are unit-norm.
class ScorerBackend {
public:
    virtual ~ScorerBackend() = default;
    virtual std::vector<double> embed_text(const std::string& prompt) const = 0;
    virtual std::vector<double> embed_image(const ImageFeatures& image) const = 0;
    virtual double reward_scalar(const std::string& prompt, const ImageFeatures& image) const = 0;
    // Text-image similarity consumed by the HPS formula; the default is the
    // dot product of the two embeddings.
    virtual double hps_similarity(const std::string& prompt, const ImageFeatures& image) const;
    virtual double tau() const = 0;
};

// Deterministic stand-in for calling the T2I API and retrieving an image.
class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;
    virtual ImageFeatures generate(const T2IApi& api, const Instruction& instruction,
                                   std::uint64_t seed) const = 0;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);       // DimensionMismatch
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// 2.5 * max(cos(text, image), 0); the negative prompt plays no role.
double clip_score(const Instruction& t, const ImageFeatures& x, const ScorerBackend& b);
// Backend scalar pass-through; may be negative.
double image_reward_score(const Instruction& t, const ImageFeatures& x, const ScorerBackend& b);
// similarity / tau. Throws NonpositiveTau.
double hps_score(const Instruction& t, const ImageFeatures& x, const ScorerBackend& b);

ScoreTriple raw_score_triple(const Instruction& t, const ImageFeatures& x, const ScorerBackend& b);

// Min-max normalization over a comparison set; max == min maps all to 0.5.
std::vector<double> normalize_scores(const std::vector<double>& raw);

// Per-metric raw-score populations of one comparison batch. Normalization is
// only meaningful relative to the batch the score came from, so lookups of
// values outside the population throw PopulationMismatch.
class NormalizationContext {
public:
    void add(Metric m, double raw);
    void add(const ScoreTriple& t);

    const std::vector<double>& population(Metric m) const;
    bool contains(Metric m, double raw) const;

    // (v - min)/(max - min); degenerate population -> 0.5.
    // Throws PopulationMismatch when raw is not in the population.
    double normalize(Metric m, double raw) const;

private:
    std::array<std::vector<double>, 3> pops_;
};

// Remote-protocol seam: a scorer reduced to "metric value for (prompt,
// features)". The local adapter computes the three formulas over a
// ScorerBackend; the remote client speaks the wire protocol. Alignment and
// evaluation consume this interface so backends are swappable.
class MetricScorer {
public:
    virtual ~MetricScorer() = default;
    virtual double score(Metric m, const std::string& prompt, const ImageFeatures& x) const = 0;
    virtual std::vector<double> score_batch(Metric m, const std::vector<std::string>& prompts,
                                            const std::vector<ImageFeatures>& features) const;
};

class LocalMetricScorer : public MetricScorer {
public:
    explicit LocalMetricScorer(const ScorerBackend& backend) : backend_(backend) {}
    double score(Metric m, const std::string& prompt, const ImageFeatures& x) const override;

private:
    const ScorerBackend& backend_;
};

ScoreTriple raw_score_triple(const Instruction& t, const ImageFeatures& x, const MetricScorer& s);

// Unified human-preference score: for each seed, generate features, score,
// normalize each metric within ctx, average the three with equal weight, then
// average over the k seeds.
UnifiedScore unified_score(const Instruction& t, const T2IApi& r, int k,
                           const std::vector<std::uint64_t>& seeds, const GenerationBackend& gen,
                           const MetricScorer& s, const NormalizationContext& ctx);
UnifiedScore unified_score(const Instruction& t, const T2IApi& r, int k,
                           const std::vector<std::uint64_t>& seeds, const GenerationBackend& gen,
                           const ScorerBackend& b, const NormalizationContext& ctx);

} // namespace sdr
