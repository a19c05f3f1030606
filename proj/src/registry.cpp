// SPDX-License-Identifier: Apache-2.0
#include "sdr/registry.hpp"

#include <algorithm>

namespace sdr {

Registry Registry::build(std::vector<RegistryEntry> entries, SamplingMethods methods) {
    Registry r;
    r.methods_ = std::move(methods);
    for (auto& e : entries) {
        validate_model_info(e.info);
        validate_param_info(e.canonical_params, r.methods_);
        if (e.download_count < 0) throw RegistryError("negative download count: " + e.info.model);
        auto [it, inserted] = r.entries_.emplace(e.info.model, std::move(e));
        if (!inserted) throw RegistryError("duplicate model identifier: " + it->first);
    }
    for (const auto& [name, e] : r.entries_) {
        for (const auto& h : e.hashes) {
            auto [it, inserted] = r.hash_index_.emplace(h, name);
            if (!inserted)
                throw RegistryError("hash " + h + " owned by both " + it->second + " and " + name);
        }
    }
    return r;
}

const RegistryEntry* Registry::find(const std::string& model) const {
    auto it = entries_.find(model);
    return it == entries_.end() ? nullptr : &it->second;
}

std::optional<std::string> Registry::owner_of_hash(const std::string& hash) const {
    auto it = hash_index_.find(hash);
    if (it == hash_index_.end()) return std::nullopt;
    return it->second;
}

std::vector<const RegistryEntry*> Registry::by_downloads() const {
    std::vector<const RegistryEntry*> out;
    out.reserve(entries_.size());
    for (const auto& [name, e] : entries_) out.push_back(&e);
    std::stable_sort(out.begin(), out.end(), [](const RegistryEntry* a, const RegistryEntry* b) {
        if (a->download_count != b->download_count) return a->download_count > b->download_count;
        return a->info.model < b->info.model;
    });
    return out;
}

const RegistryEntry& Registry::most_downloaded() const {
    if (entries_.empty()) throw RegistryError("registry is empty");
    return *by_downloads().front();
}

const RegistryEntry* Registry::baseline_for(ArchitectureFamily arch) const {
    const RegistryEntry* best = nullptr;
    for (const auto& [name, e] : entries_) {
        if (!e.baseline || e.info.base_model != arch) continue;
        if (!best || e.download_count > best->download_count) best = &e;
    }
    return best;
}

nlohmann::json Registry::to_json() const {
    nlohmann::json j;
    j["format"] = "sdrouter-registry";
    j["version"] = 1;
    j["sampling_methods"] = methods_;
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [name, e] : entries_) {
        nlohmann::json je;
        je["model"] = e.info.model;
        je["type"] = to_string(e.info.kind);
        je["base_model"] = to_string(e.info.base_model);
        je["model_description"] = e.info.model_description;
        je["canonical_params"] = {
            {"width", e.canonical_params.width},
            {"height", e.canonical_params.height},
            {"sampling_method", e.canonical_params.sampling_method},
            {"sampling_steps", e.canonical_params.sampling_steps},
            {"cfg_scale", e.canonical_params.cfg_scale},
        };
        je["hashes"] = e.hashes;
        je["download_count"] = e.download_count;
        je["baseline"] = e.baseline;
        entries.push_back(je);
    }
    j["entries"] = entries;
    return j;
}

Registry Registry::from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "sdrouter-registry" || j.value("version", 0) != 1)
        throw IoError("not a sdrouter registry file");
    SamplingMethods methods = j.at("sampling_methods").get<SamplingMethods>();
    std::vector<RegistryEntry> entries;
    for (const auto& je : j.at("entries")) {
        RegistryEntry e;
        e.info.model = je.at("model").get<std::string>();
        auto kind = parse_model_kind(je.at("type").get<std::string>());
        auto arch = parse_architecture(je.at("base_model").get<std::string>());
        if (!kind || !arch) throw IoError("registry entry with unknown type or base_model");
        e.info.kind = *kind;
        e.info.base_model = *arch;
        e.info.model_description = je.at("model_description").get<std::string>();
        const auto& p = je.at("canonical_params");
        e.canonical_params.width = p.at("width").get<int>();
        e.canonical_params.height = p.at("height").get<int>();
        e.canonical_params.sampling_method = p.at("sampling_method").get<std::string>();
        e.canonical_params.sampling_steps = p.at("sampling_steps").get<int>();
        e.canonical_params.cfg_scale = p.at("cfg_scale").get<double>();
        e.hashes = je.at("hashes").get<std::vector<std::string>>();
        e.download_count = je.at("download_count").get<long>();
        e.baseline = je.value("baseline", false);
        entries.push_back(std::move(e));
    }
    return build(std::move(entries), std::move(methods));
}

std::optional<std::string> resolve_base_model(const std::string& hash, const Registry& registry) {
    return registry.owner_of_hash(hash);
}

ReconstructResult reconstruct_full_response(const ModelInfo& info, const Registry& registry) {
    const RegistryEntry* e = registry.find(info.model);
    if (!e) return Hallucination{"unknown model '" + info.model + "'"};
    if (e->info.kind != info.kind)
        return Hallucination{"type mismatch for '" + info.model + "': registry says " +
                             to_string(e->info.kind)};
    if (e->info.base_model != info.base_model)
        return Hallucination{"architecture mismatch for '" + info.model + "': registry says " +
                             to_string(e->info.base_model)};
    T2IApi api;
    api.info = e->info;
    api.params = e->canonical_params;
    return api;
}

} // namespace sdr
