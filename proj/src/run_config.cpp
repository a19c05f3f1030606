// SPDX-License-Identifier: Apache-2.0
#include "sdr/run_config.hpp"

#include <iomanip>
#include <sstream>

#include "sdr/errors.hpp"
#include "sdr/hash.hpp"
#include "sdr/jsonl.hpp"

namespace sdr {
namespace {

[[noreturn]] void bad(const std::string& what) { throw ConfigError(what); }

const nlohmann::json* find(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double num_or(const nlohmann::json& j, const char* key, double fallback) {
    const auto* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_number()) bad(std::string("config field '") + key + "' must be a number");
    return v->get<double>();
}

int int_or(const nlohmann::json& j, const char* key, int fallback) {
    const auto* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) bad(std::string("config field '") + key + "' must be an integer");
    return v->get<int>();
}

bool bool_or(const nlohmann::json& j, const char* key, bool fallback) {
    const auto* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) bad(std::string("config field '") + key + "' must be a boolean");
    return v->get<bool>();
}

std::string str_or(const nlohmann::json& j, const char* key, const std::string& fallback) {
    const auto* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_string()) bad(std::string("config field '") + key + "' must be a string");
    return v->get<std::string>();
}

RemoteEndpoint endpoint_from(const nlohmann::json& j) {
    RemoteEndpoint ep;
    ep.host = str_or(j, "host", ep.host);
    ep.port = int_or(j, "port", ep.port);
    ep.timeout_ms = int_or(j, "timeout_ms", ep.timeout_ms);
    ep.retries = int_or(j, "retries", ep.retries);
    if (ep.port <= 0 || ep.port > 65535) bad("endpoint port out of range");
    if (ep.timeout_ms <= 0) bad("endpoint timeout_ms must be positive");
    if (ep.retries < 0) bad("endpoint retries must be non-negative");
    return ep;
}

nlohmann::json endpoint_to(const RemoteEndpoint& ep) {
    return {{"host", ep.host}, {"port", ep.port}, {"timeout_ms", ep.timeout_ms}, {"retries", ep.retries}};
}

} // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) bad("config root must be a JSON object");
    RunConfig c;

    const auto* seed = find(j, "seed");
    if (!seed) bad("config is missing required field 'seed'");
    if (!seed->is_number_integer() || seed->get<double>() < 0)
        bad("config field 'seed' must be a non-negative integer");
    c.seed = seed->get<std::uint64_t>();

    c.raw_records = str_or(j, "raw_records", "");
    c.world = str_or(j, "world", "");
    c.out_dir = str_or(j, "out_dir", c.out_dir);
    if (c.out_dir.empty()) bad("config field 'out_dir' must not be empty");

    const std::string scorer = str_or(j, "scorer", "styleworld");
    if (scorer == "styleworld") c.scorer = ScorerChoice::StyleWorld;
    else if (scorer == "remote") c.scorer = ScorerChoice::Remote;
    else bad("config field 'scorer' must be 'styleworld' or 'remote'");
    if (const auto* ep = find(j, "scorer_endpoint")) c.scorer_endpoint = endpoint_from(*ep);
    else if (c.scorer == ScorerChoice::Remote) bad("scorer 'remote' requires 'scorer_endpoint'");

    const std::string tg = str_or(j, "textgen", "none");
    if (tg == "none") c.textgen = TextGenChoice::None;
    else if (tg == "echo") c.textgen = TextGenChoice::Echo;
    else if (tg == "remote") c.textgen = TextGenChoice::Remote;
    else bad("config field 'textgen' must be 'none', 'echo', or 'remote'");
    if (const auto* ep = find(j, "textgen_endpoint")) c.textgen_endpoint = endpoint_from(*ep);
    else if (c.textgen == TextGenChoice::Remote) bad("textgen 'remote' requires 'textgen_endpoint'");

    if (const auto* q = find(j, "quality")) {
        if (!q->is_object()) bad("config field 'quality' must be an object");
        c.quality.min_downloads = static_cast<long>(num_or(*q, "min_downloads", static_cast<double>(c.quality.min_downloads)));
        c.quality.min_rating_count = static_cast<long>(num_or(*q, "min_rating_count", static_cast<double>(c.quality.min_rating_count)));
        c.quality.min_rating = num_or(*q, "min_rating", c.quality.min_rating);
        if (c.quality.min_downloads < 0 || c.quality.min_rating_count < 0)
            bad("quality thresholds must be non-negative");
    }

    if (const auto* s = find(j, "sft")) {
        if (!s->is_object()) bad("config field 'sft' must be an object");
        c.sft.epochs = int_or(*s, "epochs", c.sft.epochs);
        c.sft.lr = num_or(*s, "lr", c.sft.lr);
        c.sft.batch_size = int_or(*s, "batch_size", c.sft.batch_size);
        if (c.sft.epochs < 1) bad("sft.epochs must be at least 1");
        if (!(c.sft.lr >= 0.0)) bad("sft.lr must be non-negative");
    }

    if (const auto* r = find(j, "rrhf")) {
        if (!r->is_object()) bad("config field 'rrhf' must be an object");
        c.rrhf.m = int_or(*r, "m", c.rrhf.m);
        c.rrhf.n_multinomial = int_or(*r, "n_multinomial", c.rrhf.n_multinomial);
        c.rrhf.lambda = num_or(*r, "lambda", c.rrhf.lambda);
        c.rrhf.temperature = num_or(*r, "temperature", c.rrhf.temperature);
        c.rrhf.k = int_or(*r, "k", c.rrhf.k);
        c.rrhf.lr = num_or(*r, "lr", c.rrhf.lr);
        c.rrhf.epochs = int_or(*r, "epochs", c.rrhf.epochs);
        c.rrhf.cache_candidates = bool_or(*r, "cache_candidates", c.rrhf.cache_candidates);
        if (c.rrhf.m < 0) bad("rrhf.m must be non-negative");
        if (c.rrhf.n_multinomial < 1) bad("rrhf.n_multinomial must be at least 1");
        if (c.rrhf.lambda < 0.0) bad("rrhf.lambda must be non-negative");
        if (!(c.rrhf.temperature > 0.0)) bad("rrhf.temperature must be positive");
        if (c.rrhf.k < 1) bad("rrhf.k must be at least 1");
        if (!(c.rrhf.lr >= 0.0)) bad("rrhf.lr must be non-negative");
        if (c.rrhf.epochs < 1) bad("rrhf.epochs must be at least 1");
    }

    if (const auto* e = find(j, "eval")) {
        if (!e->is_object()) bad("config field 'eval' must be an object");
        c.eval.n_images = int_or(*e, "n_images", c.eval.n_images);
        if (c.eval.n_images < 1) bad("eval.n_images must be at least 1");
    }

    c.jobs = int_or(j, "jobs", c.jobs);
    if (c.jobs < 1) bad("config field 'jobs' must be at least 1");

    if (const auto* p = find(j, "paths")) {
        if (!p->is_object()) bad("config field 'paths' must be an object");
        for (auto it = p->begin(); it != p->end(); ++it) {
            if (!it.value().is_string()) bad("config 'paths' values must be strings");
            c.paths[it.key()] = it.value().get<std::string>();
        }
    }

    c.rrhf.seed = c.seed;
    c.rrhf.jobs = c.jobs;
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        bad(std::string("cannot read config: ") + e.what());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        bad(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["seed"] = seed;
    j["raw_records"] = raw_records;
    j["world"] = world;
    j["out_dir"] = out_dir;
    j["scorer"] = scorer == ScorerChoice::StyleWorld ? "styleworld" : "remote";
    if (scorer == ScorerChoice::Remote) j["scorer_endpoint"] = endpoint_to(scorer_endpoint);
    switch (textgen) {
        case TextGenChoice::None: j["textgen"] = "none"; break;
        case TextGenChoice::Echo: j["textgen"] = "echo"; break;
        case TextGenChoice::Remote: j["textgen"] = "remote"; break;
    }
    if (textgen == TextGenChoice::Remote) j["textgen_endpoint"] = endpoint_to(textgen_endpoint);
    j["quality"] = {{"min_downloads", quality.min_downloads},
                    {"min_rating_count", quality.min_rating_count},
                    {"min_rating", quality.min_rating}};
    j["sft"] = {{"epochs", sft.epochs}, {"lr", sft.lr}, {"batch_size", sft.batch_size}};
    j["rrhf"] = {{"m", rrhf.m},
                 {"n_multinomial", rrhf.n_multinomial},
                 {"lambda", rrhf.lambda},
                 {"temperature", rrhf.temperature},
                 {"k", rrhf.k},
                 {"lr", rrhf.lr},
                 {"epochs", rrhf.epochs},
                 {"cache_candidates", rrhf.cache_candidates}};
    j["eval"] = {{"n_images", eval.n_images}};
    j["jobs"] = jobs;
    if (!paths.empty()) {
        nlohmann::json p = nlohmann::json::object();
        for (const auto& [k, v] : paths) p[k] = v;
        j["paths"] = p;
    }
    return j;
}

std::string RunConfig::config_hash() const {
    // nlohmann::json objects iterate in sorted key order, so dump() is a
    // canonical form of the effective configuration. The worker count is
    // excluded: outputs are independent of it, and changing it must not move
    // the run directory.
    nlohmann::json j = to_json();
    j.erase("jobs");
    const std::uint64_t h = fnv1a(j.dump());
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

std::filesystem::path RunConfig::run_dir() const {
    return std::filesystem::path(out_dir) / ("run-" + config_hash());
}

std::filesystem::path RunConfig::artifact(const std::string& name) const {
    auto it = paths.find(name);
    if (it != paths.end()) return std::filesystem::path(it->second);
    return run_dir() / name;
}

} // namespace sdr
