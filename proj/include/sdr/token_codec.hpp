// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <variant>

#include "sdr/schema.hpp"
#include "sdr/vocab.hpp"

namespace sdr {

// First grammar violation in a token sequence. A value, never thrown: sampled
// policy output is routinely malformed.
struct StructureError {
    int position = 0;
    std::string reason;
};

using ParsedResponse = std::variant<T2IApi, StructureError>;

// Canonical token form of an API response: for each field in kFieldOrder a
// marker token then one value token, terminated by <eos>. model_description
// is registry metadata and is not rendered. Throws TokenError when a value
// has no token.
TokenSequence render_response_tokens(const T2IApi& api, const Vocab& vocab);

// Total over arbitrary sequences: either the decoded api (description empty)
// or the first StructureError.
ParsedResponse parse_response_tokens(const TokenSequence& tokens, const Vocab& vocab);

// Lenient scan used on sampled output: pulls the model-information fields out
// of a possibly malformed sequence, ignoring parameter tokens. Requires each
// of <model>, <type>, <base_model> to be directly followed by a matching
// value token somewhere in the sequence; first occurrence wins.
std::optional<ModelInfo> extract_model_info(const TokenSequence& tokens, const Vocab& vocab);

} // namespace sdr
