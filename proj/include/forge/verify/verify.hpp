#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forge/nn/nn.hpp"
#include "forge/trigger/trigger.hpp"

namespace forge::verify {

/// Black-box prediction surface: image in, class index out (scores
/// optional). The verifier never sees weights.
class PredictionOracle {
public:
    virtual ~PredictionOracle() = default;
    virtual int32_t predict(const Image& image) = 0;
    virtual std::string descriptor() const = 0;
};

/// Wraps a local model behind the oracle interface.
class InProcessOracle : public PredictionOracle {
public:
    explicit InProcessOracle(nn::Model& model) : model_(model) {}
    int32_t predict(const Image& image) override;
    std::string descriptor() const override { return "in_process"; }

private:
    nn::Model& model_;
};

struct TriggerOutcome {
    int64_t index;
    int32_t predicted;
    bool matched;
};

struct VerificationReport {
    double asr = 0.0;  // authentication success rate
    int64_t n_queried = 0;
    int64_t n_matched = 0;
    double threshold = 0.0;
    bool decision = false;
    double fp_bound = 0.0;
    bool valid = false;  // false when transport failed mid-session
    std::string error;
    std::string key_sha256;
    std::string oracle_descriptor;
    std::vector<TriggerOutcome> per_trigger;
};

/// Queries every trigger once, claims ownership when asr >= threshold.
/// n_classes drives the false-positive bound for the report.
VerificationReport authenticate(PredictionOracle& oracle,
                                const trigger::WatermarkKey& key, double threshold,
                                int64_t n_classes);

/// Probability that a uniformly random n_classes-way classifier matches
/// the target on at least ceil(threshold * n_triggers) of n_triggers
/// queries. Exact binomial tail.
double false_positive_bound(int64_t n_classes, int64_t n_triggers, double threshold);

std::string report_to_json(const VerificationReport& r);
VerificationReport report_from_json(const std::string& json_text);

// ---- remote transport ----

struct RemoteOptions {
    int max_retries = 3;
    int timeout_seconds = 10;
    double min_request_interval_s = 0.0;  // rate limit, 0 = off
    std::function<void(const std::string&)> audit_log;  // one line per query
};

/// HTTP oracle speaking the wire protocol of serve_model: POST /predict
/// with a lossless PGM/PPM body, JSON {"class": int, "scores": [...]}
/// back. Retries transient failures; every query/response lands in the
/// audit log.
std::unique_ptr<PredictionOracle> remote_oracle(const std::string& base_url,
                                                const RemoteOptions& opts = {});

/// Serves a model over HTTP until stop() is invoked. Returns the bound
/// port (0 picks a free one).
class ModelServer {
public:
    ModelServer(nn::Model& model, const std::string& host, int port);
    ~ModelServer();
    int port() const { return port_; }
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace forge::verify
