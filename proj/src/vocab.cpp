// SPDX-License-Identifier: Apache-2.0
#include "sdr/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace sdr {

const char* field_name(Field f) {
    switch (f) {
        case Field::Model: return "model";
        case Field::Type: return "type";
        case Field::BaseModel: return "base_model";
        case Field::Width: return "width";
        case Field::Height: return "height";
        case Field::SamplingMethod: return "sampling_method";
        case Field::SamplingSteps: return "sampling_steps";
        case Field::CfgScale: return "cfg_scale";
    }
    return "?";
}

const std::vector<int>& dimension_bins() {
    static const std::vector<int> bins = [] {
        std::vector<int> v;
        for (int d = 256; d <= 1536; d += 64) v.push_back(d);
        return v;
    }();
    return bins;
}

const std::vector<int>& steps_bins() {
    static const std::vector<int> bins = {10, 15, 20, 25, 30, 40, 50};
    return bins;
}

const std::vector<int>& cfg_bins() {
    static const std::vector<int> bins = {3, 5, 7, 9, 11, 13};
    return bins;
}

int snap_to_bins(const std::vector<int>& bins, double v) {
    int best = bins.front();
    double best_d = std::abs(v - best);
    for (int b : bins) {
        double d = std::abs(v - b);
        if (d < best_d) {
            best = b;
            best_d = d;
        }
    }
    return best;
}

ParamInfo snap_params(const ParamInfo& p) {
    ParamInfo out = p;
    out.width = snap_to_bins(dimension_bins(), p.width);
    out.height = snap_to_bins(dimension_bins(), p.height);
    out.sampling_steps = snap_to_bins(steps_bins(), p.sampling_steps);
    out.cfg_scale = snap_to_bins(cfg_bins(), p.cfg_scale);
    return out;
}

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<std::string> int_tokens(const std::vector<int>& bins) {
    std::vector<std::string> out;
    out.reserve(bins.size());
    for (int b : bins) out.push_back(std::to_string(b));
    return out;
}

} // namespace

TokenId Vocab::intern(const std::string& token) {
    auto it = index_.find(token);
    if (it != index_.end()) return it->second;
    TokenId id = static_cast<TokenId>(tokens_.size());
    tokens_.push_back(token);
    index_.emplace(token, id);
    return id;
}

Vocab Vocab::build(std::vector<std::string> model_names, std::vector<std::string> sampling_methods,
                   std::vector<std::string> prompt_words) {
    Vocab v;
    v.model_names_ = sorted_unique(std::move(model_names));
    v.methods_ = sorted_unique(std::move(sampling_methods));
    v.words_ = sorted_unique(std::move(prompt_words));

    for (const auto& name : v.model_names_)
        if (!valid_model_identifier(name))
            throw ParseError(ParseError::Kind::InvalidValue, "model",
                             "'" + name + "' contains a reserved character");
    for (const auto* list : {&v.methods_, &v.words_})
        for (const auto& t : *list)
            if (t.find('\n') != std::string::npos || t.find('\t') != std::string::npos)
                throw ParseError(ParseError::Kind::InvalidValue, "token",
                                 "token contains newline or tab");

    v.intern("<bos>");
    v.intern("<eos>");
    v.intern("<sep>");
    v.intern("<unk>");

    for (Field f : kFieldOrder)
        v.field_markers_[static_cast<int>(f)] = v.intern(std::string("<") + field_name(f) + ">");

    auto add_values = [&v](Field f, const std::vector<std::string>& values) {
        auto& set = v.value_sets_[static_cast<int>(f)];
        for (const auto& s : values) {
            TokenId id = v.intern(s);
            if (std::find(set.begin(), set.end(), id) == set.end()) set.push_back(id);
        }
    };
    add_values(Field::Model, v.model_names_);
    add_values(Field::Type, {"Checkpoint", "LoRA"});
    add_values(Field::BaseModel, {"SD 1.5", "SDXL 1.0"});
    add_values(Field::Width, int_tokens(dimension_bins()));
    add_values(Field::Height, int_tokens(dimension_bins()));
    add_values(Field::SamplingMethod, v.methods_);
    add_values(Field::SamplingSteps, int_tokens(steps_bins()));
    add_values(Field::CfgScale, int_tokens(cfg_bins()));

    for (const auto& w : v.words_) v.intern(w);

    if (v.size() > 4096) throw ConfigError("vocabulary exceeds 4096 tokens");
    return v;
}

std::optional<TokenId> Vocab::id(const std::string& token) const {
    auto it = index_.find(token);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool Vocab::is_field_marker(TokenId id, Field* out) const {
    for (int i = 0; i < kNumFields; ++i) {
        if (field_markers_[i] == id) {
            if (out) *out = static_cast<Field>(i);
            return true;
        }
    }
    return false;
}

bool Vocab::in_value_set(Field f, TokenId id) const {
    const auto& set = value_sets_[static_cast<int>(f)];
    return std::find(set.begin(), set.end(), id) != set.end();
}

const std::vector<TokenId>& Vocab::value_set(Field f) const {
    return value_sets_[static_cast<int>(f)];
}

std::vector<std::string> split_prompt_words(const std::string& prompt) {
    std::vector<std::string> words;
    std::istringstream iss(prompt);
    std::string w;
    while (iss >> w) words.push_back(w);
    return words;
}

TokenSequence Vocab::tokenize_prompt(const std::string& prompt) const {
    TokenSequence ids;
    for (const auto& w : split_prompt_words(prompt)) {
        auto tid = id(w);
        ids.push_back(tid ? *tid : kUnk);
    }
    return ids;
}

namespace {

void save_list(std::ostream& os, const char* tag, const std::vector<std::string>& list) {
    os << tag << ' ' << list.size() << '\n';
    for (const auto& s : list) os << s << '\n';
}

std::vector<std::string> load_list(std::istream& is, const char* tag) {
    std::string got;
    size_t n = 0;
    if (!(is >> got >> n) || got != tag)
        throw IoError(std::string("vocab: expected section '") + tag + "'");
    is.ignore();
    std::vector<std::string> list(n);
    for (auto& s : list)
        if (!std::getline(is, s)) throw IoError("vocab: truncated section");
    return list;
}

} // namespace

void Vocab::save(std::ostream& os) const {
    os << "vocab 1\n";
    save_list(os, "models", model_names_);
    save_list(os, "methods", methods_);
    save_list(os, "words", words_);
}

Vocab Vocab::load(std::istream& is) {
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version) || tag != "vocab" || version != 1)
        throw IoError("vocab: bad header");
    auto models = load_list(is, "models");
    auto methods = load_list(is, "methods");
    auto words = load_list(is, "words");
    return build(std::move(models), std::move(methods), std::move(words));
}

bool Vocab::operator==(const Vocab& other) const {
    return tokens_ == other.tokens_;
}

} // namespace sdr
