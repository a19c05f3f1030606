// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sdr/schema.hpp"

namespace sdr {

struct RegistryEntry {
    ModelInfo info;
    ParamInfo canonical_params;
    std::vector<std::string> hashes;
    long download_count = 0;
    bool baseline = false;
};

// Catalog of known models. Ground truth for validation, reconstruction and
// hallucination detection. Immutable after build; safe for concurrent reads.
class Registry {
public:
    // Validates identifier uniqueness and single ownership of every hash.
    // Throws RegistryError on violation.
    static Registry build(std::vector<RegistryEntry> entries,
                          SamplingMethods methods = default_sampling_methods());

    const RegistryEntry* find(const std::string& model) const;
    std::optional<std::string> owner_of_hash(const std::string& hash) const;

    const std::map<std::string, RegistryEntry>& entries() const { return entries_; }
    const SamplingMethods& sampling_methods() const { return methods_; }
    bool empty() const { return entries_.empty(); }
    size_t size() const { return entries_.size(); }

    // Download-ordered helpers; ties break toward the smaller identifier.
    const RegistryEntry& most_downloaded() const;
    std::vector<const RegistryEntry*> by_downloads() const;
    const RegistryEntry* baseline_for(ArchitectureFamily arch) const;

    nlohmann::json to_json() const;
    static Registry from_json(const nlohmann::json& j);

private:
    std::map<std::string, RegistryEntry> entries_;
    std::unordered_map<std::string, std::string> hash_index_;
    SamplingMethods methods_;
};

// NotFound is the empty optional.
std::optional<std::string> resolve_base_model(const std::string& hash, const Registry& registry);

struct Hallucination {
    std::string reason;
};

using ReconstructResult = std::variant<T2IApi, Hallucination>;

// Accepts a model-information claim and returns the registry's full response
// for it (canonical parameters, registry description), or the reason it is
// not callable. Never fabricates a model absent from the registry.
ReconstructResult reconstruct_full_response(const ModelInfo& info, const Registry& registry);

} // namespace sdr
