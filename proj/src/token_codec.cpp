// SPDX-License-Identifier: Apache-2.0
#include "sdr/token_codec.hpp"

#include <cmath>

namespace sdr {

namespace {

std::string value_string(const T2IApi& api, Field f) {
    switch (f) {
        case Field::Model: return api.info.model;
        case Field::Type: return to_string(api.info.kind);
        case Field::BaseModel: return to_string(api.info.base_model);
        case Field::Width: return std::to_string(api.params.width);
        case Field::Height: return std::to_string(api.params.height);
        case Field::SamplingMethod: return api.params.sampling_method;
        case Field::SamplingSteps: return std::to_string(api.params.sampling_steps);
        case Field::CfgScale: {
            double c = api.params.cfg_scale;
            double r = std::round(c);
            if (r != c) throw TokenError("cfg_scale", "non-integral value " + std::to_string(c));
            return std::to_string(static_cast<long long>(r));
        }
    }
    throw TokenError("?", "bad field");
}

} // namespace

TokenSequence render_response_tokens(const T2IApi& api, const Vocab& vocab) {
    TokenSequence seq;
    seq.reserve(2 * kNumFields + 1);
    for (Field f : kFieldOrder) {
        const std::string value = value_string(api, f);
        auto id = vocab.id(value);
        if (!id || !vocab.in_value_set(f, *id))
            throw TokenError(field_name(f), "'" + value + "' not in vocabulary");
        seq.push_back(vocab.marker(f));
        seq.push_back(*id);
    }
    seq.push_back(Vocab::kEos);
    return seq;
}

ParsedResponse parse_response_tokens(const TokenSequence& tokens, const Vocab& vocab) {
    auto fail = [](int pos, std::string reason) {
        return ParsedResponse(StructureError{pos, std::move(reason)});
    };

    T2IApi api;
    int pos = 0;
    bool seen[kNumFields] = {};
    for (int fi = 0; fi < kNumFields; ++fi) {
        const Field f = kFieldOrder[static_cast<size_t>(fi)];

        if (pos >= static_cast<int>(tokens.size()))
            return fail(pos, std::string("truncated: expected <") + field_name(f) + "> marker");
        TokenId m = tokens[static_cast<size_t>(pos)];
        if (!vocab.contains(m)) return fail(pos, "unknown token id");
        Field got;
        if (!vocab.is_field_marker(m, &got))
            return fail(pos, std::string("expected <") + field_name(f) + "> marker, got '" +
                                 vocab.token(m) + "'");
        if (got != f) {
            if (seen[static_cast<int>(got)])
                return fail(pos, std::string("duplicate field: ") + field_name(got));
            return fail(pos, std::string("field out of order: got <") + field_name(got) +
                                 ">, expected <" + field_name(f) + ">");
        }
        seen[static_cast<int>(f)] = true;
        ++pos;

        if (pos >= static_cast<int>(tokens.size()))
            return fail(pos, std::string("truncated: expected ") + field_name(f) + " value");
        TokenId v = tokens[static_cast<size_t>(pos)];
        if (!vocab.contains(v)) return fail(pos, "unknown token id");
        if (!vocab.in_value_set(f, v))
            return fail(pos, std::string("'") + vocab.token(v) + "' is not a valid " +
                                 field_name(f) + " value");

        const std::string& s = vocab.token(v);
        switch (f) {
            case Field::Model: api.info.model = s; break;
            case Field::Type: api.info.kind = *parse_model_kind(s); break;
            case Field::BaseModel: api.info.base_model = *parse_architecture(s); break;
            case Field::Width: api.params.width = std::stoi(s); break;
            case Field::Height: api.params.height = std::stoi(s); break;
            case Field::SamplingMethod: api.params.sampling_method = s; break;
            case Field::SamplingSteps: api.params.sampling_steps = std::stoi(s); break;
            case Field::CfgScale: api.params.cfg_scale = std::stod(s); break;
        }
        ++pos;
    }

    if (pos >= static_cast<int>(tokens.size()))
        return fail(pos, "truncated: expected <eos>");
    if (tokens[static_cast<size_t>(pos)] != Vocab::kEos)
        return fail(pos, "expected <eos>");
    ++pos;
    if (pos != static_cast<int>(tokens.size())) return fail(pos, "trailing tokens after <eos>");
    return api;
}

std::optional<ModelInfo> extract_model_info(const TokenSequence& tokens, const Vocab& vocab) {
    std::optional<std::string> model;
    std::optional<ModelKind> kind;
    std::optional<ArchitectureFamily> base;

    for (size_t i = 0; i + 1 < tokens.size(); ++i) {
        TokenId m = tokens[i];
        TokenId v = tokens[i + 1];
        if (!vocab.contains(m) || !vocab.contains(v)) continue;
        Field f;
        if (!vocab.is_field_marker(m, &f)) continue;
        if (!vocab.in_value_set(f, v)) continue;
        const std::string& s = vocab.token(v);
        if (f == Field::Model && !model) model = s;
        else if (f == Field::Type && !kind) kind = parse_model_kind(s);
        else if (f == Field::BaseModel && !base) base = parse_architecture(s);
    }

    if (!model || !kind || !base) return std::nullopt;
    ModelInfo info;
    info.model = *model;
    info.kind = *kind;
    info.base_model = *base;
    return info;
}

} // namespace sdr
