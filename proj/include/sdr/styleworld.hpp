// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sdr/scoring.hpp"

namespace sdr {

struct StyleWorldModel {
    std::string name;
    std::vector<double> affinity; // length = |styles|, entries in [0,1]
    double quality = 1.0;         // [0,1]
};

// Declarative description of a synthetic T2I universe: a style vocabulary,
// per-model style affinities and qualities, and the constants that shape the
// derived embeddings and scores. Deterministic by construction — the only
// randomness is a seeded hash-noise stream.
struct StyleWorldSpec {
    std::vector<std::string> styles;
    std::vector<StyleWorldModel> models;
    int embedding_dim = 0; // must equal |styles| + 2 (quality dim + common dim)

    double noise_amplitude = 0.0;
    double tau = 0.05;

    // reward_scalar = style_coeff * x[style(prompt)] + quality_coeff * x[quality] + offset
    double style_coeff = 1.5;
    double quality_coeff = 1.0;
    double reward_offset = -2.0;

    // Feature component weights used by generate().
    double w_style = 2.0;
    double w_quality = 1.0;
    double w_common = 1.0;

    // Text-embedding component weights (before normalization). The quality
    // component makes every scorer — cosine-based ones included — increase
    // with model quality instead of only with style match.
    double text_common = 0.5;
    double text_quality = 0.6;

    // Optional coupling of generation quality to the cfg parameter; zero by
    // default so parameter choices do not affect scores.
    double param_sensitivity = 0.0;

    static StyleWorldSpec from_json(const nlohmann::json& j); // throws InvalidSpec
    nlohmann::json to_json() const;
    void validate() const; // throws InvalidSpec
};

StyleWorldSpec load_styleworld(const std::string& path);

// One object implements both backend roles; scoring becomes a smooth function
// of style match and model quality, so style-matched APIs win in expectation.
class StyleWorld final : public GenerationBackend, public ScorerBackend {
public:
    explicit StyleWorld(StyleWorldSpec spec);

    // GenerationBackend: style component = the model's affinity vector,
    // quality dim = the model's quality, plus hash-seeded noise.
    ImageFeatures generate(const T2IApi& api, const Instruction& instruction,
                           std::uint64_t seed) const override;

    // ScorerBackend
    std::vector<double> embed_text(const std::string& prompt) const override;
    std::vector<double> embed_image(const ImageFeatures& image) const override;
    double reward_scalar(const std::string& prompt, const ImageFeatures& image) const override;
    double tau() const override { return spec_.tau; }

    const StyleWorldSpec& spec() const { return spec_; }
    int num_styles() const { return static_cast<int>(spec_.styles.size()); }

    // First prompt word (reading order) that names a style.
    std::optional<int> detect_style(const std::string& prompt) const;
    const StyleWorldModel* find_model(const std::string& name) const;

private:
    StyleWorldSpec spec_;
    std::unordered_map<std::string, int> model_index_;
    std::unordered_map<std::string, int> style_index_;
};

} // namespace sdr
