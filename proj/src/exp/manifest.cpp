#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

#include "forge/core/hash.hpp"
#include "forge/exp/exp.hpp"

namespace forge::exp {

using json = nlohmann::json;

RunManifest::RunManifest(std::string run_id, std::string command,
                         std::string config_json)
    : run_id_(std::move(run_id)), command_(std::move(command)),
      config_json_(std::move(config_json)),
      started_at_(trigger::current_utc_timestamp()) {}

void RunManifest::record_input(const std::string& name, const std::string& sha256) {
    inputs_.emplace_back(name, sha256);
}

void RunManifest::record_seed(const std::string& stage, uint64_t seed) {
    seeds_.emplace_back(stage, seed);
}

void RunManifest::record_file(const std::filesystem::path& root,
                              const std::string& rel_path, const std::string& role) {
    file_records_.push_back({rel_path, sha256_file(root / rel_path), role});
    file_paths_.push_back(rel_path);
}

void RunManifest::record_stage(const std::string& stage, const std::string& status) {
    stages_.emplace_back(stage, status);
}

std::string RunManifest::to_json() const {
    json inputs = json::object();
    for (const auto& [name, digest] : inputs_) inputs[name] = digest;
    json seeds = json::object();
    for (const auto& [stage, seed] : seeds_) seeds[stage] = seed;
    json files = json::array();
    for (const auto& f : file_records_)
        files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"role", f.role}});
    json stages = json::array();
    for (const auto& [stage, status] : stages_)
        stages.push_back({{"stage", stage}, {"status", status}});
    json doc{{"schema_version", kSchemaVersion},
             {"tool", kToolVersion},
             {"run_id", run_id_},
             {"command", command_},
             {"started_at", started_at_},
             {"config", json::parse(config_json_)},
             {"inputs", inputs},
             {"seeds", seeds},
             {"stages", stages},
             {"files", files}};
    return doc.dump(2) + "\n";
}

void RunManifest::save(const std::filesystem::path& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << to_json();
}

std::string results_to_json(const ResultsBundle& r) {
    json rob = json::object();
    for (const auto& [id, file] : r.robustness_files) rob[id] = file;
    json doc{{"schema_version", kSchemaVersion},
             {"run_id", r.run_id},
             {"effectiveness", r.effectiveness},
             {"fidelity",
              {{"watermarked", r.fidelity_watermarked},
               {"clean_baseline", r.fidelity_clean},
               {"delta", r.fidelity_delta},
               {"has_clean_baseline", r.has_clean_baseline}}},
             {"robustness", rob},
             {"verify_report", r.verify_report_file},
             {"metrics_log", r.metrics_log_file}};
    return doc.dump(2) + "\n";
}

ResultsBundle results_from_json(const std::string& text) {
    const json doc = json::parse(text);
    ResultsBundle r;
    r.run_id = doc.at("run_id").get<std::string>();
    r.effectiveness = doc.at("effectiveness").get<double>();
    const json& fid = doc.at("fidelity");
    r.fidelity_watermarked = fid.at("watermarked").get<double>();
    r.fidelity_clean = fid.at("clean_baseline").get<double>();
    r.fidelity_delta = fid.at("delta").get<double>();
    r.has_clean_baseline = fid.at("has_clean_baseline").get<bool>();
    for (const auto& [id, file] : doc.at("robustness").items())
        r.robustness_files[id] = file.get<std::string>();
    r.verify_report_file = doc.at("verify_report").get<std::string>();
    r.metrics_log_file = doc.at("metrics_log").get<std::string>();
    return r;
}

}  // namespace forge::exp
