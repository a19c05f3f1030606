// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <thread>

#include "sdr/scoring.hpp"
#include "sdr/textgen.hpp"

namespace httplib {
class Server;
}

namespace sdr {

// Wire protocol:
//   POST /score       {"prompt": str, "features": [..], "metric": str} -> {"value": num}
//   POST /score_batch {"prompts": [..], "features": [[..]], "metric": str} -> {"values": [..]}
// Throws ScorerUnavailable after the configured retries.
class RemoteMetricScorer : public MetricScorer {
public:
    explicit RemoteMetricScorer(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

    double score(Metric m, const std::string& prompt, const ImageFeatures& x) const override;
    std::vector<double> score_batch(Metric m, const std::vector<std::string>& prompts,
                                    const std::vector<ImageFeatures>& features) const override;

private:
    RemoteEndpoint endpoint_;
};

// In-process server exposing any MetricScorer over the same protocol; used to
// test the wire format and to serve the synthetic backend to other processes.
class ScorerServer {
public:
    // Binds to 127.0.0.1 on a free port; port() reports the choice.
    explicit ScorerServer(const MetricScorer& scorer);
    ~ScorerServer();

    ScorerServer(const ScorerServer&) = delete;
    ScorerServer& operator=(const ScorerServer&) = delete;

    int port() const { return port_; }

private:
    const MetricScorer& scorer_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace sdr
