// SPDX-License-Identifier: Apache-2.0
#include "sdr/remote_scorer.hpp"

#include <httplib.h>
#include <json.hpp>

namespace sdr {
namespace {

using nlohmann::json;

json features_to_json(const ImageFeatures& x) {
    return json(x.vector);
}

ImageFeatures features_from_json(const json& j) {
    ImageFeatures x;
    x.vector = j.get<std::vector<double>>();
    return x;
}

[[noreturn]] void unreachable_endpoint(const RemoteEndpoint& e) {
    throw ScorerUnavailable("scorer endpoint " + e.host + ":" + std::to_string(e.port) +
                            " unreachable");
}

} // namespace

double RemoteMetricScorer::score(Metric m, const std::string& prompt,
                                 const ImageFeatures& x) const {
    json body;
    body["prompt"] = prompt;
    body["features"] = features_to_json(x);
    body["metric"] = to_string(m);
    const std::string payload = body.dump();

    httplib::Client cli(endpoint_.host, endpoint_.port);
    cli.set_connection_timeout(0, endpoint_.timeout_ms * 1000);
    cli.set_read_timeout(0, endpoint_.timeout_ms * 1000);

    for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
        auto res = cli.Post("/score", payload, "application/json");
        if (!res || res->status != 200) continue;
        try {
            return json::parse(res->body).at("value").get<double>();
        } catch (const json::exception&) {
            break;
        }
    }
    unreachable_endpoint(endpoint_);
}

std::vector<double> RemoteMetricScorer::score_batch(Metric m,
                                                    const std::vector<std::string>& prompts,
                                                    const std::vector<ImageFeatures>& features) const {
    if (prompts.size() != features.size())
        throw DimensionMismatch("score_batch: prompt and feature counts differ");
    json body;
    body["prompts"] = prompts;
    json feats = json::array();
    for (const auto& f : features) feats.push_back(features_to_json(f));
    body["features"] = feats;
    body["metric"] = to_string(m);
    const std::string payload = body.dump();

    httplib::Client cli(endpoint_.host, endpoint_.port);
    cli.set_connection_timeout(0, endpoint_.timeout_ms * 1000);
    cli.set_read_timeout(0, endpoint_.timeout_ms * 1000);

    for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
        auto res = cli.Post("/score_batch", payload, "application/json");
        if (!res || res->status != 200) continue;
        try {
            return json::parse(res->body).at("values").get<std::vector<double>>();
        } catch (const json::exception&) {
            break;
        }
    }
    unreachable_endpoint(endpoint_);
}

ScorerServer::ScorerServer(const MetricScorer& scorer)
    : scorer_(scorer), server_(std::make_unique<httplib::Server>()) {
    server_->Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            json body = json::parse(req.body);
            auto metric = parse_metric(body.at("metric").get<std::string>());
            if (!metric) {
                res.status = 400;
                return;
            }
            ImageFeatures x = features_from_json(body.at("features"));
            json out;
            out["value"] = scorer_.score(*metric, body.at("prompt").get<std::string>(), x);
            res.set_content(out.dump(), "application/json");
        } catch (const std::exception&) {
            res.status = 400;
        }
    });
    server_->Post("/score_batch", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            json body = json::parse(req.body);
            auto metric = parse_metric(body.at("metric").get<std::string>());
            if (!metric) {
                res.status = 400;
                return;
            }
            auto prompts = body.at("prompts").get<std::vector<std::string>>();
            std::vector<ImageFeatures> features;
            for (const auto& f : body.at("features")) features.push_back(features_from_json(f));
            json out;
            out["values"] = scorer_.score_batch(*metric, prompts, features);
            res.set_content(out.dump(), "application/json");
        } catch (const std::exception&) {
            res.status = 400;
        }
    });

    port_ = server_->bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw ScorerUnavailable("failed to bind scorer server");
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

ScorerServer::~ScorerServer() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace sdr
