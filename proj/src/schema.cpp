// SPDX-License-Identifier: Apache-2.0
#include "sdr/schema.hpp"

#include <cmath>

namespace sdr {

namespace {

using nlohmann::json;

[[noreturn]] void missing(const std::string& f) {
    throw ParseError(ParseError::Kind::MissingField, f, "");
}

[[noreturn]] void invalid(const std::string& f, const std::string& reason) {
    throw ParseError(ParseError::Kind::InvalidValue, f, reason);
}

const json& require(const json& record, const std::string& f) {
    auto it = record.find(f);
    if (it == record.end()) missing(f);
    return *it;
}

std::string require_string(const json& record, const std::string& f) {
    const json& v = require(record, f);
    if (!v.is_string()) invalid(f, "expected string");
    return v.get<std::string>();
}

int require_int(const json& record, const std::string& f) {
    const json& v = require(record, f);
    if (!v.is_number_integer()) invalid(f, "expected integer");
    return v.get<int>();
}

double require_number(const json& record, const std::string& f) {
    const json& v = require(record, f);
    if (!v.is_number()) invalid(f, "expected number");
    return v.get<double>();
}

void reject_unknown(const json& record, std::initializer_list<const char*> known) {
    for (auto it = record.begin(); it != record.end(); ++it) {
        bool found = false;
        for (const char* k : known)
            if (it.key() == k) { found = true; break; }
        if (!found) throw ParseError(ParseError::Kind::UnknownField, it.key(), "");
    }
}

} // namespace

std::string to_string(ArchitectureFamily a) {
    return a == ArchitectureFamily::SD15 ? "SD 1.5" : "SDXL 1.0";
}

std::string to_string(ModelKind k) {
    return k == ModelKind::Checkpoint ? "Checkpoint" : "LoRA";
}

std::optional<ArchitectureFamily> parse_architecture(const std::string& s) {
    if (s == "SD 1.5") return ArchitectureFamily::SD15;
    if (s == "SDXL 1.0") return ArchitectureFamily::SDXL;
    return std::nullopt;
}

std::optional<ModelKind> parse_model_kind(const std::string& s) {
    if (s == "Checkpoint") return ModelKind::Checkpoint;
    if (s == "LoRA") return ModelKind::LoRA;
    return std::nullopt;
}

const SamplingMethods& default_sampling_methods() {
    static const SamplingMethods methods = {"Euler a", "Euler", "DPM++ 2M", "DDIM", "UniPC"};
    return methods;
}

bool same_generation_fields(const T2IApi& a, const T2IApi& b) {
    return a.info.model == b.info.model && a.info.kind == b.info.kind &&
           a.info.base_model == b.info.base_model && a.params == b.params;
}

bool valid_model_identifier(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id)
        if (c == '<' || c == '>' || c == '\n' || c == '\t') return false;
    return true;
}

void validate_model_info(const ModelInfo& info) {
    if (!valid_model_identifier(info.model))
        invalid("model", "empty or contains a reserved character (<, >, newline, tab)");
}

void validate_param_info(const ParamInfo& p, const SamplingMethods& methods) {
    auto check_dim = [](const char* name, int v) {
        if (v < 64 || v > 4096) invalid(name, "out of range [64, 4096]");
        if (v % 8 != 0) invalid(name, "not divisible by 8");
    };
    check_dim("width", p.width);
    check_dim("height", p.height);
    if (!methods.count(p.sampling_method))
        invalid("sampling_method", "'" + p.sampling_method + "' not a known sampler");
    if (p.sampling_steps < 1 || p.sampling_steps > 150)
        invalid("sampling_steps", "out of range [1, 150]");
    if (!(p.cfg_scale > 0.0) || p.cfg_scale > 30.0 || !std::isfinite(p.cfg_scale))
        invalid("cfg_scale", "out of range (0, 30]");
}

ParamInfo default_params(ArchitectureFamily arch) {
    ParamInfo p;
    p.width = p.height = (arch == ArchitectureFamily::SDXL) ? 1024 : 512;
    p.sampling_method = "Euler a";
    p.sampling_steps = 20;
    p.cfg_scale = 7.0;
    return p;
}

T2IApi parse_api(const nlohmann::json& record, const SamplingMethods& methods) {
    if (!record.is_object()) invalid("record", "expected object");
    reject_unknown(record, {"model", "type", "base_model", "width", "height", "sampling_method",
                            "sampling_steps", "cfg_scale", "model_description"});

    T2IApi api;
    api.info.model = require_string(record, "model");

    const std::string kind_str = require_string(record, "type");
    auto kind = parse_model_kind(kind_str);
    if (!kind) invalid("type", "'" + kind_str + "' is not Checkpoint or LoRA");
    api.info.kind = *kind;

    const std::string arch_str = require_string(record, "base_model");
    auto arch = parse_architecture(arch_str);
    if (!arch) invalid("base_model", "'" + arch_str + "' is not SD 1.5 or SDXL 1.0");
    api.info.base_model = *arch;

    api.info.model_description = require_string(record, "model_description");

    api.params.width = require_int(record, "width");
    api.params.height = require_int(record, "height");
    api.params.sampling_method = require_string(record, "sampling_method");
    api.params.sampling_steps = require_int(record, "sampling_steps");
    api.params.cfg_scale = require_number(record, "cfg_scale");

    validate_model_info(api.info);
    validate_param_info(api.params, methods);
    return api;
}

nlohmann::json serialize_api(const T2IApi& api) {
    // nlohmann objects keep keys sorted, so equal values serialize to equal bytes.
    json record;
    record["model"] = api.info.model;
    record["type"] = to_string(api.info.kind);
    record["base_model"] = to_string(api.info.base_model);
    record["width"] = api.params.width;
    record["height"] = api.params.height;
    record["sampling_method"] = api.params.sampling_method;
    record["sampling_steps"] = api.params.sampling_steps;
    record["cfg_scale"] = api.params.cfg_scale;
    record["model_description"] = api.info.model_description;
    return record;
}

Instruction parse_instruction(const nlohmann::json& record) {
    if (!record.is_object()) invalid("instruction", "expected object");
    reject_unknown(record, {"prompt", "negative_prompt"});
    Instruction ins;
    ins.prompt = require_string(record, "prompt");
    ins.negative_prompt = require_string(record, "negative_prompt");
    if (ins.prompt.find_first_not_of(" \t\r\n") == std::string::npos)
        invalid("prompt", "empty after trimming");
    return ins;
}

nlohmann::json serialize_instruction(const Instruction& ins) {
    json record;
    record["prompt"] = ins.prompt;
    record["negative_prompt"] = ins.negative_prompt;
    return record;
}

InstructionApiPair parse_pair(const nlohmann::json& record, const SamplingMethods& methods) {
    if (!record.is_object()) invalid("pair", "expected object");
    reject_unknown(record, {"instruction", "api"});
    InstructionApiPair pair;
    pair.instruction = parse_instruction(require(record, "instruction"));
    pair.api = parse_api(require(record, "api"), methods);
    return pair;
}

nlohmann::json serialize_pair(const InstructionApiPair& pair) {
    json record;
    record["instruction"] = serialize_instruction(pair.instruction);
    record["api"] = serialize_api(pair.api);
    return record;
}

} // namespace sdr
