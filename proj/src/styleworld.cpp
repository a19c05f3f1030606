// SPDX-License-Identifier: Apache-2.0
#include "sdr/styleworld.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "sdr/hash.hpp"
#include "sdr/jsonl.hpp"
#include "sdr/vocab.hpp"

namespace sdr {
namespace {

using nlohmann::json;

double get_num(const json& j, const char* field, double fallback) {
    auto it = j.find(field);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw InvalidSpec(std::string("'") + field + "' must be a number");
    return it->get<double>();
}

std::vector<double> normalized(std::vector<double> v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    double n = std::sqrt(n2);
    if (n > 0.0) {
        for (double& x : v) x /= n;
    }
    return v;
}

} // namespace

StyleWorldSpec StyleWorldSpec::from_json(const json& j) {
    if (!j.is_object()) throw InvalidSpec("world description must be a JSON object");
    StyleWorldSpec s;
    auto styles_it = j.find("styles");
    if (styles_it == j.end() || !styles_it->is_array())
        throw InvalidSpec("'styles' must be an array of strings");
    for (const auto& v : *styles_it) {
        if (!v.is_string()) throw InvalidSpec("'styles' must be an array of strings");
        s.styles.push_back(v.get<std::string>());
    }
    auto models_it = j.find("models");
    if (models_it == j.end() || !models_it->is_array())
        throw InvalidSpec("'models' must be an array");
    for (const auto& m : *models_it) {
        if (!m.is_object()) throw InvalidSpec("model entries must be objects");
        StyleWorldModel model;
        auto name_it = m.find("name");
        if (name_it == m.end() || !name_it->is_string())
            throw InvalidSpec("model entry missing string 'name'");
        model.name = name_it->get<std::string>();
        auto aff_it = m.find("affinity");
        if (aff_it == m.end() || !aff_it->is_array())
            throw InvalidSpec("model '" + model.name + "' missing 'affinity' array");
        for (const auto& a : *aff_it) {
            if (!a.is_number()) throw InvalidSpec("affinity entries must be numbers");
            model.affinity.push_back(a.get<double>());
        }
        model.quality = get_num(m, "quality", 1.0);
        s.models.push_back(std::move(model));
    }
    s.embedding_dim = static_cast<int>(get_num(j, "embedding_dim",
                                               static_cast<double>(s.styles.size() + 2)));
    s.noise_amplitude = get_num(j, "noise_amplitude", 0.0);
    s.tau = get_num(j, "tau", 0.05);
    s.style_coeff = get_num(j, "style_coeff", 1.5);
    s.quality_coeff = get_num(j, "quality_coeff", 1.0);
    s.reward_offset = get_num(j, "reward_offset", -2.0);
    s.w_style = get_num(j, "w_style", 2.0);
    s.w_quality = get_num(j, "w_quality", 1.0);
    s.w_common = get_num(j, "w_common", 1.0);
    s.text_common = get_num(j, "text_common", 0.5);
    s.text_quality = get_num(j, "text_quality", 0.6);
    s.param_sensitivity = get_num(j, "param_sensitivity", 0.0);
    s.validate();
    return s;
}

json StyleWorldSpec::to_json() const {
    json j = json::object();
    j["styles"] = styles;
    json models_j = json::array();
    for (const auto& m : models) {
        json mj = json::object();
        mj["name"] = m.name;
        mj["affinity"] = m.affinity;
        mj["quality"] = m.quality;
        models_j.push_back(mj);
    }
    j["models"] = models_j;
    j["embedding_dim"] = embedding_dim;
    j["noise_amplitude"] = noise_amplitude;
    j["tau"] = tau;
    j["style_coeff"] = style_coeff;
    j["quality_coeff"] = quality_coeff;
    j["reward_offset"] = reward_offset;
    j["w_style"] = w_style;
    j["w_quality"] = w_quality;
    j["w_common"] = w_common;
    j["text_common"] = text_common;
    j["text_quality"] = text_quality;
    j["param_sensitivity"] = param_sensitivity;
    return j;
}

void StyleWorldSpec::validate() const {
    if (styles.empty()) throw InvalidSpec("style vocabulary is empty");
    if (models.empty()) throw InvalidSpec("model list is empty");
    if (embedding_dim != static_cast<int>(styles.size()) + 2) {
        std::ostringstream oss;
        oss << "embedding_dim must be |styles| + 2 = " << styles.size() + 2 << ", got "
            << embedding_dim;
        throw InvalidSpec(oss.str());
    }
    for (size_t i = 0; i < styles.size(); ++i) {
        if (styles[i].empty()) throw InvalidSpec("empty style keyword");
        for (size_t k = i + 1; k < styles.size(); ++k) {
            if (styles[i] == styles[k]) throw InvalidSpec("duplicate style '" + styles[i] + "'");
        }
    }
    for (const auto& m : models) {
        if (m.name.empty()) throw InvalidSpec("model with empty name");
        if (m.affinity.size() != styles.size()) {
            throw InvalidSpec("model '" + m.name + "' affinity length " +
                              std::to_string(m.affinity.size()) + " != style count " +
                              std::to_string(styles.size()));
        }
        for (double a : m.affinity) {
            if (!(a >= 0.0) || !std::isfinite(a))
                throw InvalidSpec("model '" + m.name + "' has a negative or non-finite affinity");
        }
        if (!std::isfinite(m.quality) || m.quality < 0.0 || m.quality > 1.0)
            throw InvalidSpec("model '" + m.name + "' quality must be within [0,1]");
    }
    if (!(tau > 0.0)) throw InvalidSpec("tau must be positive");
    if (noise_amplitude < 0.0) throw InvalidSpec("noise_amplitude must be nonnegative");
}

StyleWorldSpec load_styleworld(const std::string& path) {
    std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw InvalidSpec("failed to parse world file " + path + ": " + e.what());
    }
    return StyleWorldSpec::from_json(j);
}

StyleWorld::StyleWorld(StyleWorldSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (size_t i = 0; i < spec_.models.size(); ++i) {
        auto [it, fresh] = model_index_.emplace(spec_.models[i].name, static_cast<int>(i));
        if (!fresh) throw InvalidSpec("duplicate model '" + spec_.models[i].name + "'");
    }
    for (size_t i = 0; i < spec_.styles.size(); ++i)
        style_index_.emplace(spec_.styles[i], static_cast<int>(i));
}

std::optional<int> StyleWorld::detect_style(const std::string& prompt) const {
    for (const auto& word : split_prompt_words(prompt)) {
        auto it = style_index_.find(word);
        if (it != style_index_.end()) return it->second;
    }
    return std::nullopt;
}

const StyleWorldModel* StyleWorld::find_model(const std::string& name) const {
    auto it = model_index_.find(name);
    if (it == model_index_.end()) return nullptr;
    return &spec_.models[static_cast<size_t>(it->second)];
}

ImageFeatures StyleWorld::generate(const T2IApi& api, const Instruction& instruction,
                                   std::uint64_t seed) const {
    const StyleWorldModel* model = find_model(api.info.model);
    if (!model) throw InvalidSpec("model '" + api.info.model + "' is not part of this world");

    const int S = num_styles();
    ImageFeatures x;
    x.vector.assign(static_cast<size_t>(spec_.embedding_dim), 0.0);
    for (int i = 0; i < S; ++i)
        x.vector[static_cast<size_t>(i)] = spec_.w_style * model->affinity[static_cast<size_t>(i)];

    double quality = model->quality;
    if (spec_.param_sensitivity != 0.0) {
        // Mild, deterministic parameter coupling: quality peaks at cfg 7.
        quality += spec_.param_sensitivity * (1.0 - std::abs(api.params.cfg_scale - 7.0) / 13.0);
    }
    x.vector[static_cast<size_t>(S)] = spec_.w_quality * quality;
    x.vector[static_cast<size_t>(S) + 1] = spec_.w_common;

    if (spec_.noise_amplitude > 0.0) {
        std::uint64_t h = fnv1a(api.info.model);
        h = fnv1a(instruction.prompt, h);
        h = fnv1a("\x1f", h);
        h = fnv1a(instruction.negative_prompt, h);
        h = fnv1a_u64(seed, h);
        for (size_t i = 0; i < x.vector.size(); ++i) {
            h = fnv1a_u64(i, h);
            x.vector[i] += spec_.noise_amplitude * hash_to_unit(h);
        }
    }

    x.api_id = api.info.model;
    x.prompt_hash = fnv1a(instruction.prompt);
    x.seed = seed;
    return x;
}

std::vector<double> StyleWorld::embed_text(const std::string& prompt) const {
    const int S = num_styles();
    std::vector<double> v(static_cast<size_t>(spec_.embedding_dim), 0.0);
    if (auto s = detect_style(prompt)) {
        v[static_cast<size_t>(*s)] = 1.0;
    } else {
        for (int i = 0; i < S; ++i) v[static_cast<size_t>(i)] = 1.0 / static_cast<double>(S);
    }
    v[static_cast<size_t>(S)] = spec_.text_quality;
    v[static_cast<size_t>(S) + 1] = spec_.text_common;
    return normalized(std::move(v));
}

std::vector<double> StyleWorld::embed_image(const ImageFeatures& image) const {
    if (static_cast<int>(image.vector.size()) != spec_.embedding_dim) {
        std::ostringstream oss;
        oss << "feature dimension " << image.vector.size() << " does not match world dimension "
            << spec_.embedding_dim;
        throw DimensionMismatch(oss.str());
    }
    return normalized(image.vector);
}

double StyleWorld::reward_scalar(const std::string& prompt, const ImageFeatures& image) const {
    if (static_cast<int>(image.vector.size()) != spec_.embedding_dim) {
        std::ostringstream oss;
        oss << "feature dimension " << image.vector.size() << " does not match world dimension "
            << spec_.embedding_dim;
        throw DimensionMismatch(oss.str());
    }
    const int S = num_styles();
    double style_component = 0.0;
    if (auto s = detect_style(prompt)) {
        style_component = image.vector[static_cast<size_t>(*s)];
    } else {
        for (int i = 0; i < S; ++i) style_component += image.vector[static_cast<size_t>(i)];
        style_component /= static_cast<double>(S);
    }
    return spec_.style_coeff * style_component +
           spec_.quality_coeff * image.vector[static_cast<size_t>(S)] + spec_.reward_offset;
}

} // namespace sdr
