// SPDX-License-Identifier: Apache-2.0
#include "sdr/textgen.hpp"

#include <sstream>

#include <httplib.h>
#include <json.hpp>

namespace sdr {

namespace {

std::string var(const TextGenRequest& r, const char* key) {
    auto it = r.variables.find(key);
    return it == r.variables.end() ? std::string() : it->second;
}

} // namespace

std::string render_template(const TextGenRequest& request) {
    std::ostringstream os;
    if (request.template_id == "model_description") {
        os << "Rewrite the description of the text-to-image model \"" << var(request, "model")
           << "\".\n";
        os << "Original description: " << var(request, "description") << "\n";
        os << "Sample prompts:\n" << var(request, "prompts");
        os << "Write one short paragraph naming the styles and scenes this model is good at.\n";
        return os.str();
    }
    if (request.template_id == "expand_prompt") {
        os << "Expand the short image request into a detailed text-to-image prompt.\n";
        os << "Example: \"a corgi\" -> \"A cute happy corgi sitting on grass, sharp focus, "
              "warm afternoon light\"\n";
        os << "Example: \"city at night\" -> \"A rain-soaked city street at night, neon "
              "reflections, cinematic wide shot\"\n";
        os << "Request: \"" << var(request, "prompt") << "\"\n";
        os << "Expanded prompt:";
        return os.str();
    }
    throw ClientUnavailable("unknown template id '" + request.template_id + "'");
}

std::string RemoteTextGenClient::generate(const TextGenRequest& request) {
    nlohmann::json body;
    body["template_id"] = request.template_id;
    body["variables"] = request.variables;
    const std::string payload = body.dump();

    httplib::Client cli(endpoint_.host, endpoint_.port);
    cli.set_connection_timeout(0, endpoint_.timeout_ms * 1000);
    cli.set_read_timeout(0, endpoint_.timeout_ms * 1000);

    for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
        auto res = cli.Post("/generate", payload, "application/json");
        if (!res || res->status != 200) continue;
        try {
            auto j = nlohmann::json::parse(res->body);
            return j.at("text").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            break;
        }
    }
    throw ClientUnavailable("text generation endpoint " + endpoint_.host + ":" +
                            std::to_string(endpoint_.port) + " unreachable");
}

} // namespace sdr
