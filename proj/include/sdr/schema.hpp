// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdr/errors.hpp"

namespace sdr {

enum class ArchitectureFamily { SD15, SDXL };
enum class ModelKind { Checkpoint, LoRA };

std::string to_string(ArchitectureFamily a);
std::string to_string(ModelKind k);
std::optional<ArchitectureFamily> parse_architecture(const std::string& s);
std::optional<ModelKind> parse_model_kind(const std::string& s);

// Closed set of sampler names accepted by ParamInfo validation. Replaceable
// from a registry file; the built-in default covers the common choices.
using SamplingMethods = std::set<std::string>;
const SamplingMethods& default_sampling_methods();

struct ModelInfo {
    std::string model;
    ModelKind kind = ModelKind::Checkpoint;
    ArchitectureFamily base_model = ArchitectureFamily::SD15;
    std::string model_description;

    bool operator==(const ModelInfo&) const = default;
};

struct ParamInfo {
    int width = 512;
    int height = 512;
    std::string sampling_method = "Euler a";
    int sampling_steps = 20;
    double cfg_scale = 7.0;

    bool operator==(const ParamInfo&) const = default;
};

struct T2IApi {
    ModelInfo info;
    ParamInfo params;

    bool operator==(const T2IApi&) const = default;
};

struct Instruction {
    std::string prompt;
    std::string negative_prompt;

    bool operator==(const Instruction&) const = default;
};

struct InstructionApiPair {
    Instruction instruction;
    T2IApi api;

    bool operator==(const InstructionApiPair&) const = default;
};

// Generation fields only; model_description is registry metadata and is not
// part of the token form.
bool same_generation_fields(const T2IApi& a, const T2IApi& b);

// Characters a model identifier may not contain: they collide with the token
// grammar's marker tokens and the line-based checkpoint format.
bool valid_model_identifier(const std::string& id);

// Field-level validation used by parse_api and the catalog. Throws ParseError.
void validate_model_info(const ModelInfo& info);
void validate_param_info(const ParamInfo& p, const SamplingMethods& methods);

// Most common parameter set for an architecture; sampler/steps/cfg are the
// community defaults, width/height follow the architecture's native shape.
ParamInfo default_params(ArchitectureFamily arch);

// Record <-> value conversion. Records are JSON objects with exactly the
// canonical field set; unknown and missing fields are rejected.
T2IApi parse_api(const nlohmann::json& record,
                 const SamplingMethods& methods = default_sampling_methods());
nlohmann::json serialize_api(const T2IApi& api);

Instruction parse_instruction(const nlohmann::json& record);
nlohmann::json serialize_instruction(const Instruction& ins);

InstructionApiPair parse_pair(const nlohmann::json& record,
                              const SamplingMethods& methods = default_sampling_methods());
nlohmann::json serialize_pair(const InstructionApiPair& pair);

} // namespace sdr
