#include <httplib.h>

#include <nlohmann/json.hpp>

#include <chrono>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "forge/verify/verify.hpp"
#include "forge/zoo/zoo.hpp"

namespace forge::verify {

using json = nlohmann::json;

// ---------- server ----------

struct ModelServer::Impl {
    httplib::Server server;
    std::thread worker;
    std::mutex model_mutex;
};

ModelServer::ModelServer(nn::Model& model, const std::string& host, int port)
    : impl_(std::make_unique<Impl>()) {
    impl_->server.Post("/predict", [this, &model](const httplib::Request& req,
                                                  httplib::Response& res) {
        try {
            std::vector<uint8_t> body(req.body.begin(), req.body.end());
            Image img = decode_pnm(body);
            int32_t cls;
            std::vector<float> scores;
            {
                std::lock_guard<std::mutex> lock(impl_->model_mutex);
                std::vector<const Image*> one{&img};
                Tensor logits = model.forward(zoo::images_to_tensor(one), false);
                cls = nn::argmax_rows(logits)[0];
                scores.assign(logits.data(), logits.data() + logits.numel());
            }
            json out{{"class", cls}, {"scores", scores}};
            res.set_content(out.dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    });
    impl_->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("ok", "text/plain");
    });

    if (port == 0) {
        port_ = impl_->server.bind_to_any_port(host);
        if (port_ < 0) throw std::runtime_error("cannot bind model server");
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw std::runtime_error("cannot bind model server to port " +
                                     std::to_string(port));
        port_ = port;
    }
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

ModelServer::~ModelServer() { stop(); }

void ModelServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

// ---------- client ----------

namespace {

class HttpOracle : public PredictionOracle {
public:
    HttpOracle(std::string base_url, RemoteOptions opts)
        : base_url_(std::move(base_url)), opts_(std::move(opts)), client_(base_url_) {
        client_.set_connection_timeout(opts_.timeout_seconds);
        client_.set_read_timeout(opts_.timeout_seconds);
    }

    int32_t predict(const Image& image) override {
        const auto body = encode_pnm(image);
        std::string payload(body.begin(), body.end());
        std::string last_error;
        for (int attempt = 1; attempt <= opts_.max_retries + 1; ++attempt) {
            rate_limit();
            auto res = client_.Post("/predict", payload, "application/octet-stream");
            ++query_count_;
            if (res && res->status == 200) {
                const int32_t cls = parse_class(res->body);
                audit(attempt, res->status, res->body);
                return cls;
            }
            last_error = res ? "http status " + std::to_string(res->status)
                             : "transport: " + httplib::to_string(res.error());
            audit(attempt, res ? res->status : -1, last_error);
        }
        throw std::runtime_error("remote oracle: retries exhausted (" + last_error + ")");
    }

    std::string descriptor() const override { return "remote_http:" + base_url_; }

private:
    int32_t parse_class(const std::string& body) {
        json doc;
        try {
            doc = json::parse(body);
        } catch (const json::exception&) {
            throw std::runtime_error("remote oracle: response is not JSON");
        }
        if (!doc.contains("class") || !doc["class"].is_number_integer())
            throw std::runtime_error("remote oracle: response lacks integer 'class'");
        return doc["class"].get<int32_t>();
    }

    void rate_limit() {
        if (opts_.min_request_interval_s <= 0) return;
        const auto now = std::chrono::steady_clock::now();
        const auto min_gap = std::chrono::duration<double>(opts_.min_request_interval_s);
        if (last_request_.time_since_epoch().count() != 0) {
            const auto elapsed = now - last_request_;
            if (elapsed < min_gap)
                std::this_thread::sleep_for(min_gap - elapsed);
        }
        last_request_ = std::chrono::steady_clock::now();
    }

    void audit(int attempt, int status, const std::string& detail) {
        if (!opts_.audit_log) return;
        json line{{"query", query_count_}, {"attempt", attempt}, {"status", status},
                  {"detail", detail}};
        opts_.audit_log(line.dump());
    }

    std::string base_url_;
    RemoteOptions opts_;
    httplib::Client client_;
    int64_t query_count_ = 0;
    std::chrono::steady_clock::time_point last_request_{};
};

}  // namespace

std::unique_ptr<PredictionOracle> remote_oracle(const std::string& base_url,
                                                const RemoteOptions& opts) {
    return std::make_unique<HttpOracle>(base_url, opts);
}

}  // namespace forge::verify
