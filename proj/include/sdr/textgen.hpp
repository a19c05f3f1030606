// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <memory>
#include <string>

#include "sdr/errors.hpp"

namespace sdr {

struct ClientUnavailable : Error {
    using Error::Error;
};

struct TextGenRequest {
    std::string template_id;
    std::map<std::string, std::string> variables;
};

// The only (optional) network dependency of ingestion. Implementations must
// be deterministic to keep reruns byte-identical; the remote one is only as
// deterministic as its server.
class TextGenClient {
public:
    virtual ~TextGenClient() = default;
    // Throws ClientUnavailable on failure; callers degrade to passthrough.
    virtual std::string generate(const TextGenRequest& request) = 0;
};

// Renders the built-in template text for a request. Known template ids:
// "model_description", "expand_prompt". Shared by the echo client and by any
// server that wants the reference rendering.
std::string render_template(const TextGenRequest& request);

// Always fails; selects degraded (passthrough) mode.
class NullTextGenClient : public TextGenClient {
public:
    std::string generate(const TextGenRequest&) override {
        throw ClientUnavailable("text generation disabled");
    }
};

// Returns the rendered template verbatim. Deterministic, offline.
class EchoTextGenClient : public TextGenClient {
public:
    std::string generate(const TextGenRequest& request) override {
        return render_template(request);
    }
};

struct RemoteEndpoint {
    std::string host = "127.0.0.1";
    int port = 0;
    int timeout_ms = 2000;
    int retries = 1;
};

// POST /generate {"template_id": ..., "variables": {...}} -> {"text": ...}
class RemoteTextGenClient : public TextGenClient {
public:
    explicit RemoteTextGenClient(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}
    std::string generate(const TextGenRequest& request) override;

private:
    RemoteEndpoint endpoint_;
};

} // namespace sdr
