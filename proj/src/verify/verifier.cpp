#include <nlohmann/json.hpp>

#include <stdexcept>

#include "forge/verify/verify.hpp"
#include "forge/zoo/zoo.hpp"

namespace forge::verify {

using json = nlohmann::json;

int32_t InProcessOracle::predict(const Image& image) {
    std::vector<const Image*> one{&image};
    return zoo::predict(model_, one)[0];
}

VerificationReport authenticate(PredictionOracle& oracle,
                                const trigger::WatermarkKey& key, double threshold,
                                int64_t n_classes) {
    if (key.triggers.empty()) throw std::invalid_argument("empty watermark key");
    if (threshold <= 0.0 || threshold > 1.0)
        throw std::invalid_argument("threshold must be in (0,1]");

    VerificationReport r;
    r.threshold = threshold;
    r.key_sha256 = trigger::key_digest(key);
    r.oracle_descriptor = oracle.descriptor();
    r.per_trigger.reserve(key.triggers.size());

    for (size_t i = 0; i < key.triggers.size(); ++i) {
        int32_t pred;
        try {
            pred = oracle.predict(key.triggers[i].image);
        } catch (const std::exception& e) {
            // Partial session: report what we saw, render no decision.
            r.valid = false;
            r.decision = false;
            r.error = "oracle transport failure at trigger " + std::to_string(i) +
                      ": " + e.what();
            r.n_queried = static_cast<int64_t>(i);
            r.asr = r.n_queried ? static_cast<double>(r.n_matched) / r.n_queried : 0.0;
            return r;
        }
        const bool matched = pred == key.spec.target_class;
        r.per_trigger.push_back({static_cast<int64_t>(i), pred, matched});
        if (matched) ++r.n_matched;
    }
    r.n_queried = static_cast<int64_t>(key.triggers.size());
    r.asr = static_cast<double>(r.n_matched) / static_cast<double>(r.n_queried);
    r.decision = r.asr >= threshold;
    r.fp_bound = false_positive_bound(n_classes, r.n_queried, threshold);
    r.valid = true;
    return r;
}

std::string report_to_json(const VerificationReport& r) {
    json per = json::array();
    for (const auto& t : r.per_trigger)
        per.push_back({{"index", t.index}, {"predicted", t.predicted},
                       {"matched", t.matched}});
    json doc{
        {"schema_version", "1.0.0"},
        {"asr", r.asr},
        {"n_queried", r.n_queried},
        {"n_matched", r.n_matched},
        {"threshold", r.threshold},
        {"decision", r.decision},
        {"fp_bound", r.fp_bound},
        {"valid", r.valid},
        {"key_sha256", r.key_sha256},
        {"oracle", r.oracle_descriptor},
        {"per_trigger", per},
    };
    if (!r.error.empty()) doc["error"] = r.error;
    return doc.dump(2) + "\n";
}

VerificationReport report_from_json(const std::string& json_text) {
    const json doc = json::parse(json_text);
    VerificationReport r;
    r.asr = doc.at("asr").get<double>();
    r.n_queried = doc.at("n_queried").get<int64_t>();
    r.n_matched = doc.at("n_matched").get<int64_t>();
    r.threshold = doc.at("threshold").get<double>();
    r.decision = doc.at("decision").get<bool>();
    r.fp_bound = doc.at("fp_bound").get<double>();
    r.valid = doc.at("valid").get<bool>();
    r.key_sha256 = doc.at("key_sha256").get<std::string>();
    r.oracle_descriptor = doc.at("oracle").get<std::string>();
    if (doc.contains("error")) r.error = doc["error"].get<std::string>();
    for (const auto& t : doc.at("per_trigger"))
        r.per_trigger.push_back({t.at("index").get<int64_t>(),
                                 t.at("predicted").get<int32_t>(),
                                 t.at("matched").get<bool>()});
    return r;
}

}  // namespace forge::verify
