// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sdr {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Record-level parse failures (missing/unknown/invalid fields).
struct ParseError : Error {
    enum class Kind { MissingField, UnknownField, InvalidValue };
    Kind kind;
    std::string field;

    ParseError(Kind k, std::string f, const std::string& reason)
        : Error(format(k, f, reason)), kind(k), field(std::move(f)) {}

private:
    static std::string format(Kind k, const std::string& f, const std::string& reason) {
        const char* tag = k == Kind::MissingField  ? "missing field"
                          : k == Kind::UnknownField ? "unknown field"
                                                    : "invalid value";
        std::string msg = std::string(tag) + " '" + f + "'";
        if (!reason.empty()) msg += ": " + reason;
        return msg;
    }
};

struct RegistryError : Error {
    using Error::Error;
};

// A field value that has no token in the vocabulary.
struct TokenError : Error {
    std::string field;
    TokenError(std::string f, const std::string& what)
        : Error("unrepresentable value for '" + f + "': " + what), field(std::move(f)) {}
};

struct UnknownTokenError : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct ScorerUnavailable : Error {
    using Error::Error;
};

struct NonpositiveTau : Error {
    using Error::Error;
};

// A raw score recomputed during normalization was absent from the context's
// population — the context was built from a different comparison batch.
struct PopulationMismatch : Error {
    using Error::Error;
};

struct InvalidSpec : Error {
    using Error::Error;
};

struct EmptyResponse : Error {
    using Error::Error;
};

struct DivergenceDetected : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace sdr
