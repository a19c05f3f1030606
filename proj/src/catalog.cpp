// SPDX-License-Identifier: Apache-2.0
#include "sdr/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "sdr/vocab.hpp"

namespace sdr {
namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const char* field, const char* what) {
    throw ParseError(ParseError::Kind::InvalidValue, field, what);
}

std::string get_string(const json& j, const char* field, const std::string& fallback,
                       bool required = false) {
    auto it = j.find(field);
    if (it == j.end()) {
        if (required) throw ParseError(ParseError::Kind::MissingField, field, "missing field");
        return fallback;
    }
    if (!it->is_string()) bad_field(field, "expected a string");
    return it->get<std::string>();
}

bool get_bool(const json& j, const char* field, bool fallback) {
    auto it = j.find(field);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) bad_field(field, "expected a boolean");
    return it->get<bool>();
}

long get_long(const json& j, const char* field, long fallback) {
    auto it = j.find(field);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) bad_field(field, "expected an integer");
    return it->get<long>();
}

double get_double(const json& j, const char* field, double fallback) {
    auto it = j.find(field);
    if (it == j.end()) return fallback;
    if (!it->is_number()) bad_field(field, "expected a number");
    return it->get<double>();
}

template <typename T>
std::optional<T> get_optional(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) bad_field(field, "expected a string");
    } else if constexpr (std::is_same_v<T, int>) {
        if (!it->is_number_integer()) bad_field(field, "expected an integer");
    } else {
        if (!it->is_number()) bad_field(field, "expected a number");
    }
    return it->get<T>();
}

RawImageRecord parse_raw_image(const json& j) {
    if (!j.is_object()) throw ParseError(ParseError::Kind::InvalidValue, "images", "expected an object");
    RawImageRecord img;
    img.prompt = get_string(j, "prompt", "");
    img.negative_prompt = get_string(j, "negative_prompt", "");
    img.width = get_optional<int>(j, "width");
    img.height = get_optional<int>(j, "height");
    img.sampling_method = get_optional<std::string>(j, "sampling_method");
    img.sampling_steps = get_optional<int>(j, "sampling_steps");
    img.cfg_scale = get_optional<double>(j, "cfg_scale");
    img.base_model_hash = get_optional<std::string>(j, "base_model_hash");
    img.nsfw = get_bool(j, "nsfw", false);
    return img;
}

json serialize_raw_image(const RawImageRecord& img) {
    json j = json::object();
    j["prompt"] = img.prompt;
    j["negative_prompt"] = img.negative_prompt;
    if (img.width) j["width"] = *img.width;
    if (img.height) j["height"] = *img.height;
    if (img.sampling_method) j["sampling_method"] = *img.sampling_method;
    if (img.sampling_steps) j["sampling_steps"] = *img.sampling_steps;
    if (img.cfg_scale) j["cfg_scale"] = *img.cfg_scale;
    if (img.base_model_hash) j["base_model_hash"] = *img.base_model_hash;
    j["nsfw"] = img.nsfw;
    return j;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_joint_punct(char c) {
    return c == ',' || c == '.' || c == ';' || c == ':' || c == '!' || c == '?';
}

// Parses a decimal weight; accepts an optional sign, digits, optional
// fractional part. Rejects anything strtod would skip or leave unconsumed.
std::optional<double> parse_weight(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end != begin + s.size() || errno != 0) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    // strtod accepts hex/inf/nan spellings; keep the grammar to plain decimals.
    for (char c : s) {
        if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-'))
            return std::nullopt;
    }
    return v;
}

} // namespace

RawModelRecord parse_raw_record(const json& j) {
    if (!j.is_object()) throw ParseError(ParseError::Kind::InvalidValue, "record", "expected an object");
    RawModelRecord r;
    r.id = get_string(j, "id", "", /*required=*/true);
    r.name = get_string(j, "name", "", /*required=*/true);
    r.kind_str = get_string(j, "type", "", /*required=*/true);
    r.arch_str = get_string(j, "base_model", "", /*required=*/true);
    r.nsfw = get_bool(j, "nsfw", false);
    r.file_available = get_bool(j, "file_available", true);
    if (auto it = j.find("base_model_hashes"); it != j.end()) {
        if (!it->is_object()) bad_field("base_model_hashes", "expected an object");
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) bad_field("base_model_hashes", "expected string values");
            r.base_model_hash_map[k] = v.get<std::string>();
        }
    }
    if (auto it = j.find("hashes"); it != j.end()) {
        if (!it->is_array()) bad_field("hashes", "expected an array");
        for (const auto& v : *it) {
            if (!v.is_string()) bad_field("hashes", "expected string entries");
            r.file_hashes.push_back(v.get<std::string>());
        }
    }
    r.download_count = get_long(j, "download_count", 0);
    r.rating_count = get_long(j, "rating_count", 0);
    r.rating = get_double(j, "rating", 0.0);
    r.description = get_string(j, "description", "");
    r.baseline = get_bool(j, "baseline", false);
    if (auto it = j.find("images"); it != j.end()) {
        if (!it->is_array()) bad_field("images", "expected an array");
        for (const auto& v : *it) r.sample_images.push_back(parse_raw_image(v));
    }
    return r;
}

json serialize_raw_record(const RawModelRecord& r) {
    json j = json::object();
    j["id"] = r.id;
    j["name"] = r.name;
    j["type"] = r.kind_str;
    j["base_model"] = r.arch_str;
    j["nsfw"] = r.nsfw;
    j["file_available"] = r.file_available;
    if (!r.base_model_hash_map.empty()) {
        json m = json::object();
        for (const auto& [k, v] : r.base_model_hash_map) m[k] = v;
        j["base_model_hashes"] = m;
    }
    j["hashes"] = r.file_hashes;
    j["download_count"] = r.download_count;
    j["rating_count"] = r.rating_count;
    j["rating"] = r.rating;
    j["description"] = r.description;
    j["baseline"] = r.baseline;
    json imgs = json::array();
    for (const auto& img : r.sample_images) imgs.push_back(serialize_raw_image(img));
    j["images"] = imgs;
    return j;
}

StripResult strip_lora_tags(const std::string& prompt) {
    StripResult result;
    if (prompt.find("<lora:") == std::string::npos) {
        result.clean = prompt;
        return result;
    }

    static const std::string kOpen = "<lora:";
    std::string out;
    out.reserve(prompt.size());
    std::vector<size_t> joints;

    size_t i = 0;
    while (i < prompt.size()) {
        if (prompt.compare(i, kOpen.size(), kOpen) != 0) {
            out.push_back(prompt[i]);
            ++i;
            continue;
        }
        // Try to parse <lora:NAME:WEIGHT> starting at i.
        size_t body = i + kOpen.size();
        size_t name_end = body;
        while (name_end < prompt.size() && prompt[name_end] != ':' && prompt[name_end] != '>')
            ++name_end;
        std::string name = prompt.substr(body, name_end - body);

        bool well_formed = false;
        std::optional<double> weight;
        size_t close = std::string::npos;
        if (!name.empty() && name_end < prompt.size() && prompt[name_end] == ':') {
            close = prompt.find('>', name_end + 1);
            if (close != std::string::npos) {
                std::string weight_str = prompt.substr(name_end + 1, close - name_end - 1);
                if (weight_str.find(':') == std::string::npos) {
                    weight = parse_weight(weight_str);
                    well_formed = weight.has_value();
                }
            }
        }

        if (well_formed) {
            result.tags.push_back(LoraTag{name, weight});
            joints.push_back(out.size());
            i = close + 1;
        } else {
            // Malformed: keep the literal text, report it, and advance past the
            // opener so nested scans cannot loop.
            result.tags.push_back(LoraTag{name, std::nullopt});
            out.append(prompt, i, kOpen.size());
            i += kOpen.size();
        }
    }

    // Local whitespace repair at each removal site, right to left so earlier
    // joint positions stay valid.
    for (auto it = joints.rbegin(); it != joints.rend(); ++it) {
        size_t p = std::min(*it, out.size());
        size_t a = p;
        while (a > 0 && is_space(out[a - 1])) --a;
        size_t b = p;
        while (b < out.size() && is_space(out[b])) ++b;
        std::string repl;
        if (a == 0 || b == out.size()) {
            repl = "";
        } else if (is_joint_punct(out[b])) {
            repl = "";
        } else {
            repl = " ";
        }
        out.replace(a, b - a, repl);
    }

    result.clean = std::move(out);
    return result;
}

std::vector<RawModelRecord> filter_availability(const std::vector<RawModelRecord>& records,
                                                AvailabilityStats* stats) {
    AvailabilityStats local;
    local.input = static_cast<long>(records.size());

    // First pass: record-level retention.
    std::vector<char> keep(records.size(), 0);
    for (size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.file_available) {
            ++local.dropped_unavailable;
            continue;
        }
        if (r.nsfw) {
            ++local.dropped_nsfw;
            continue;
        }
        if (!parse_model_kind(r.kind_str)) {
            ++local.dropped_bad_kind;
            continue;
        }
        if (!parse_architecture(r.arch_str)) {
            ++local.dropped_bad_arch;
            continue;
        }
        keep[i] = 1;
    }

    // Hashes of retained checkpoints are the resolution targets for LoRA
    // sample images. First writer wins on duplicates; the registry build
    // enforces real uniqueness later.
    std::unordered_set<std::string> checkpoint_hashes;
    for (size_t i = 0; i < records.size(); ++i) {
        if (!keep[i]) continue;
        if (parse_model_kind(records[i].kind_str) != ModelKind::Checkpoint) continue;
        for (const auto& h : records[i].file_hashes) checkpoint_hashes.insert(h);
    }

    std::vector<RawModelRecord> out;
    for (size_t i = 0; i < records.size(); ++i) {
        if (!keep[i]) continue;
        RawModelRecord r = records[i];
        const bool is_lora = parse_model_kind(r.kind_str) == ModelKind::LoRA;

        std::vector<RawImageRecord> images;
        for (size_t k = 0; k < r.sample_images.size(); ++k) {
            const auto& img = r.sample_images[k];
            if (img.nsfw) {
                ++local.images_dropped_nsfw;
                continue;
            }
            if (is_lora) {
                std::optional<std::string> hash = img.base_model_hash;
                if (!hash) {
                    auto it = r.base_model_hash_map.find(std::to_string(k));
                    if (it != r.base_model_hash_map.end()) hash = it->second;
                }
                if (!hash || !checkpoint_hashes.count(*hash)) {
                    ++local.images_dropped_unresolved;
                    continue;
                }
            }
            images.push_back(img);
        }
        r.sample_images = std::move(images);
        if (is_lora && r.sample_images.empty()) {
            ++local.dropped_lora_no_base;
            continue;
        }
        out.push_back(std::move(r));
    }
    local.retained = static_cast<long>(out.size());
    if (stats) *stats = local;
    return out;
}

std::vector<RawModelRecord> filter_quality(const std::vector<RawModelRecord>& records,
                                           const QualityThresholds& th) {
    std::vector<RawModelRecord> out;
    for (const auto& r : records) {
        if (r.download_count >= th.min_downloads && r.rating_count >= th.min_rating_count &&
            r.rating >= th.min_rating) {
            out.push_back(r);
        }
    }
    return out;
}

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && is_space(s[a])) ++a;
    while (b > a && is_space(s[b - 1])) --b;
    return s.substr(a, b - a);
}

} // namespace

std::string reconstruct_description(const RawModelRecord& record, TextGenClient& client,
                                    long* degraded_count) {
    std::vector<std::string> prompts;
    for (const auto& img : record.sample_images) {
        std::string p = trim(strip_lora_tags(img.prompt).clean);
        if (!p.empty()) prompts.push_back(std::move(p));
    }
    // Longest first so the most descriptive prompts survive the cap; equal
    // strings land adjacent, so unique() deduplicates fully.
    std::sort(prompts.begin(), prompts.end(), [](const std::string& a, const std::string& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a < b;
    });
    prompts.erase(std::unique(prompts.begin(), prompts.end()), prompts.end());
    if (prompts.size() > 8) prompts.resize(8);

    std::ostringstream joined;
    for (size_t i = 0; i < prompts.size(); ++i) {
        if (i) joined << '\n';
        joined << prompts[i];
    }

    TextGenRequest req;
    req.template_id = "model_description";
    req.variables["model"] = record.name;
    req.variables["description"] = record.description;
    req.variables["prompts"] = joined.str();
    try {
        return client.generate(req);
    } catch (const ClientUnavailable&) {
        if (degraded_count) ++*degraded_count;
        return record.description;
    }
}

std::string expand_prompt(const std::string& short_prompt, TextGenClient& client,
                          long* degraded_count) {
    TextGenRequest req;
    req.template_id = "expand_prompt";
    req.variables["prompt"] = short_prompt;
    try {
        return client.generate(req);
    } catch (const ClientUnavailable&) {
        if (degraded_count) ++*degraded_count;
        return short_prompt;
    }
}

namespace {

// Per-field mode with ties broken toward the architecture default, then
// toward the smaller value.
template <typename T>
T mode_or_default(const std::vector<T>& values, const T& fallback) {
    if (values.empty()) return fallback;
    std::map<T, int> counts;
    for (const auto& v : values) ++counts[v];
    int best = 0;
    for (const auto& [v, c] : counts) best = std::max(best, c);
    if (auto it = counts.find(fallback); it != counts.end() && it->second == best) return fallback;
    for (const auto& [v, c] : counts) {
        if (c == best) return v;
    }
    return fallback;
}

// Missing fields filled from the defaults, present fields kept verbatim.
ParamInfo fill_params(const RawImageRecord& img, const ParamInfo& defaults) {
    ParamInfo p = defaults;
    if (img.width) p.width = *img.width;
    if (img.height) p.height = *img.height;
    if (img.sampling_method) p.sampling_method = *img.sampling_method;
    if (img.sampling_steps) p.sampling_steps = *img.sampling_steps;
    if (img.cfg_scale) p.cfg_scale = *img.cfg_scale;
    return p;
}

// Canonicalizing variant for registry construction: junk values may not veto
// the per-field mode, so unknown samplers fall back to the default and
// numerics are snapped onto the emission grids.
ParamInfo fill_and_snap(const RawImageRecord& img, const ParamInfo& defaults,
                        const SamplingMethods& methods) {
    ParamInfo p = defaults;
    if (img.width) p.width = *img.width;
    if (img.height) p.height = *img.height;
    if (img.sampling_method && methods.count(*img.sampling_method))
        p.sampling_method = *img.sampling_method;
    if (img.sampling_steps) p.sampling_steps = *img.sampling_steps;
    if (img.cfg_scale && std::isfinite(*img.cfg_scale)) p.cfg_scale = *img.cfg_scale;
    return snap_params(p);
}

} // namespace

RegistryEntry make_registry_entry(const RawModelRecord& record) {
    auto kind = parse_model_kind(record.kind_str);
    auto arch = parse_architecture(record.arch_str);
    if (!kind) throw RegistryError("unknown model type '" + record.kind_str + "' for " + record.name);
    if (!arch) throw RegistryError("unknown base model '" + record.arch_str + "' for " + record.name);

    RegistryEntry e;
    e.info.model = record.name;
    e.info.kind = *kind;
    e.info.base_model = *arch;
    e.info.model_description = record.description;
    e.hashes = record.file_hashes;
    e.download_count = record.download_count;
    e.baseline = record.baseline;

    const ParamInfo defaults = default_params(*arch);
    const SamplingMethods& methods = default_sampling_methods();
    std::vector<int> widths, heights, steps;
    std::vector<std::string> samplers;
    std::vector<double> cfgs;
    for (const auto& img : record.sample_images) {
        ParamInfo p = fill_and_snap(img, defaults, methods);
        widths.push_back(p.width);
        heights.push_back(p.height);
        samplers.push_back(p.sampling_method);
        steps.push_back(p.sampling_steps);
        cfgs.push_back(p.cfg_scale);
    }
    e.canonical_params.width = mode_or_default(widths, defaults.width);
    e.canonical_params.height = mode_or_default(heights, defaults.height);
    e.canonical_params.sampling_method = mode_or_default(samplers, defaults.sampling_method);
    e.canonical_params.sampling_steps = mode_or_default(steps, defaults.sampling_steps);
    e.canonical_params.cfg_scale = mode_or_default(cfgs, defaults.cfg_scale);
    return e;
}

Registry build_registry(const std::vector<RawModelRecord>& records, SamplingMethods methods) {
    std::vector<RegistryEntry> entries;
    entries.reserve(records.size());
    for (const auto& r : records) entries.push_back(make_registry_entry(r));
    return Registry::build(std::move(entries), std::move(methods));
}

std::vector<InstructionApiPair> build_pairs(const std::vector<RawModelRecord>& records,
                                            const Registry& registry, BuildPairsStats* stats) {
    BuildPairsStats local;
    std::vector<InstructionApiPair> pairs;
    for (const auto& r : records) {
        const RegistryEntry* entry = registry.find(r.name);
        if (!entry) throw RegistryError("record '" + r.name + "' is not in the registry");
        const ParamInfo defaults = default_params(entry->info.base_model);
        for (const auto& img : r.sample_images) {
            ++local.images;
            InstructionApiPair pair;
            pair.instruction.prompt = trim(strip_lora_tags(img.prompt).clean);
            pair.instruction.negative_prompt = trim(strip_lora_tags(img.negative_prompt).clean);
            if (pair.instruction.prompt.empty()) {
                ++local.dropped_invalid;
                continue;
            }
            pair.api.info = entry->info;
            // Present values are kept verbatim and must pass schema validation
            // themselves; tokenization snaps onto the emission grids later.
            pair.api.params = fill_params(img, defaults);
            try {
                validate_param_info(pair.api.params, registry.sampling_methods());
            } catch (const ParseError&) {
                ++local.dropped_invalid;
                continue;
            }
            pairs.push_back(std::move(pair));
            ++local.pairs;
        }
    }
    if (stats) *stats = local;
    return pairs;
}

DatasetSplits split_dataset(std::vector<InstructionApiPair> pairs, std::uint64_t seed) {
    const size_t n = pairs.size();
    if (n < 10) {
        std::ostringstream oss;
        oss << "need at least 10 pairs to split, got " << n;
        throw TooFewPairs(oss.str());
    }
    std::mt19937_64 rng(seed);
    std::shuffle(pairs.begin(), pairs.end(), rng);

    const size_t tenth = n / 10;
    const size_t n_train = n - 2 * tenth;
    DatasetSplits splits;
    splits.train.assign(pairs.begin(), pairs.begin() + static_cast<long>(n_train));
    splits.align.assign(pairs.begin() + static_cast<long>(n_train),
                        pairs.begin() + static_cast<long>(n_train + tenth));
    splits.eval.assign(pairs.begin() + static_cast<long>(n_train + tenth), pairs.end());
    return splits;
}

} // namespace sdr
