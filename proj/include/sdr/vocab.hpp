// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdr/schema.hpp"

namespace sdr {

using TokenId = int;
using TokenSequence = std::vector<TokenId>;

// Response fields in canonical emission order.
enum class Field : int {
    Model = 0,
    Type,
    BaseModel,
    Width,
    Height,
    SamplingMethod,
    SamplingSteps,
    CfgScale,
};
constexpr int kNumFields = 8;
constexpr std::array<Field, kNumFields> kFieldOrder = {
    Field::Model,        Field::Type,          Field::BaseModel,
    Field::Width,        Field::Height,        Field::SamplingMethod,
    Field::SamplingSteps, Field::CfgScale,
};
const char* field_name(Field f);

// Numeric value grids. Every grammatical emission is also semantically valid.
const std::vector<int>& dimension_bins();      // 256..1536, step 64
const std::vector<int>& steps_bins();          // {10,15,20,25,30,40,50}
const std::vector<int>& cfg_bins();            // {3,5,7,9,11,13}

// Nearest-bin projection for values coming from raw metadata. Ties go to the
// smaller bin.
int snap_to_bins(const std::vector<int>& bins, double v);
ParamInfo snap_params(const ParamInfo& p);

// Token inventory: markers, response field markers and value tokens, and the
// prompt words seen in the training corpus. Ids are dense and stable for a
// given build input; the build input is what checkpoints persist.
class Vocab {
public:
    static constexpr TokenId kBos = 0;
    static constexpr TokenId kEos = 1;
    static constexpr TokenId kSep = 2;
    static constexpr TokenId kUnk = 3;

    // All three lists are sorted and deduplicated internally, so the build is
    // a pure function of the set contents.
    static Vocab build(std::vector<std::string> model_names,
                       std::vector<std::string> sampling_methods,
                       std::vector<std::string> prompt_words);

    int size() const { return static_cast<int>(tokens_.size()); }
    const std::string& token(TokenId id) const { return tokens_.at(static_cast<size_t>(id)); }
    std::optional<TokenId> id(const std::string& token) const;
    bool contains(TokenId id) const { return id >= 0 && id < size(); }

    TokenId marker(Field f) const { return field_markers_[static_cast<int>(f)]; }
    bool is_field_marker(TokenId id, Field* out = nullptr) const;
    bool in_value_set(Field f, TokenId id) const;
    const std::vector<TokenId>& value_set(Field f) const;

    // Whitespace word-splitting; unknown words map to UNK.
    TokenSequence tokenize_prompt(const std::string& prompt) const;

    void save(std::ostream& os) const;
    static Vocab load(std::istream& is);

    bool operator==(const Vocab& other) const;

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> index_;
    std::array<TokenId, kNumFields> field_markers_{};
    std::array<std::vector<TokenId>, kNumFields> value_sets_;

    // Build inputs, kept for serialization.
    std::vector<std::string> model_names_;
    std::vector<std::string> methods_;
    std::vector<std::string> words_;

    TokenId intern(const std::string& token);
};

std::vector<std::string> split_prompt_words(const std::string& prompt);

} // namespace sdr
