#include <nlohmann/json.hpp>

#include <fstream>
#include <stdexcept>

#include "forge/attack/attack.hpp"

namespace forge::attack {

using json = nlohmann::json;

AttackId attack_from_string(const std::string& s) {
    if (s == "finetune") return AttackId::finetune;
    if (s == "transfer") return AttackId::transfer;
    if (s == "prune") return AttackId::prune;
    if (s == "overwrite") return AttackId::overwrite;
    if (s == "detect" || s == "detectability") return AttackId::detectability;
    throw std::invalid_argument("unknown attack: " + s);
}

std::string attack_to_string(AttackId a) {
    switch (a) {
        case AttackId::finetune: return "finetune";
        case AttackId::transfer: return "transfer";
        case AttackId::prune: return "prune";
        case AttackId::overwrite: return "overwrite";
        case AttackId::detectability: return "detectability";
    }
    throw std::logic_error("bad attack id");
}

namespace {

json trajectory_to_json(const std::vector<TrajectoryPoint>& t) {
    json arr = json::array();
    for (const auto& p : t)
        arr.push_back({{"strength", p.strength},
                       {"benign_accuracy", p.benign_accuracy},
                       {"asr", p.asr}});
    return arr;
}

std::vector<TrajectoryPoint> trajectory_from_json(const json& arr) {
    std::vector<TrajectoryPoint> out;
    for (const auto& p : arr)
        out.push_back({p.at("strength").get<double>(),
                       p.at("benign_accuracy").get<double>(),
                       p.at("asr").get<double>()});
    return out;
}

}  // namespace

std::string attack_report_to_json(const AttackReport& r) {
    json doc{
        {"schema_version", "1.0.0"},
        {"attack", attack_to_string(r.attack)},
        {"trajectory", trajectory_to_json(r.trajectory)},
        {"attacked_model_ref", r.attacked_model_ref},
        {"truncated", r.truncated},
        {"note", r.note},
    };
    if (!r.new_key_trajectory.empty())
        doc["new_key_trajectory"] = trajectory_to_json(r.new_key_trajectory);
    if (!r.config_json.empty()) doc["config"] = json::parse(r.config_json);
    return doc.dump(2) + "\n";
}

AttackReport attack_report_from_json(const std::string& text) {
    const json doc = json::parse(text);
    AttackReport r;
    r.attack = attack_from_string(doc.at("attack").get<std::string>());
    r.trajectory = trajectory_from_json(doc.at("trajectory"));
    if (doc.contains("new_key_trajectory"))
        r.new_key_trajectory = trajectory_from_json(doc["new_key_trajectory"]);
    r.attacked_model_ref = doc.at("attacked_model_ref").get<std::string>();
    r.truncated = doc.at("truncated").get<bool>();
    r.note = doc.at("note").get<std::string>();
    if (doc.contains("config")) r.config_json = doc["config"].dump();
    return r;
}

void save_attack_report(const AttackReport& r, const std::filesystem::path& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << attack_report_to_json(r);
}

AttackReport load_attack_report(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::string text((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
    return attack_report_from_json(text);
}

std::string confusion_to_json(const ConfusionMatrix3& m) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r)
        rows.push_back({m.counts[r][0], m.counts[r][1], m.counts[r][2]});
    json doc{{"schema_version", "1.0.0"},
             {"classes", {"normal", "invisible_fusion", "direct_fusion"}},
             {"rows_are", "predictions"},
             {"columns_are", "ground_truth"},
             {"counts", rows}};
    return doc.dump(2) + "\n";
}

ConfusionMatrix3 confusion_from_json(const std::string& text) {
    const json doc = json::parse(text);
    ConfusionMatrix3 m;
    const auto& rows = doc.at("counts");
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            m.counts[r][c] = rows.at(r).at(c).get<int64_t>();
    return m;
}

}  // namespace forge::attack
