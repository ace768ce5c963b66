#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "forge/exp/exp.hpp"

namespace forge::exp {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
    return buf;
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const char* attack_x_label(const std::string& id) {
    return id == "prune" ? "pruning ratio" : "iteration";
}

}  // namespace

std::vector<std::string> render_report(const fs::path& run_dir) {
    if (!fs::exists(run_dir / "results.json"))
        throw std::runtime_error("no results.json under " + run_dir.string() +
                                 " (run the pipeline first)");
    ResultsBundle bundle = results_from_json(read_text(run_dir / "results.json"));

    std::vector<std::string> missing;
    std::vector<std::string> written;
    fs::create_directories(run_dir / "report");

    std::string md;
    md += "# Watermark evaluation: " + bundle.run_id + "\n\n";

    md += "## Effectiveness and fidelity\n\n";
    md += "| Metric | Value |\n|---|---|\n";
    md += "| Authentication success rate | " + pct(bundle.effectiveness) + " |\n";
    md += "| Benign accuracy (watermarked) | " + pct(bundle.fidelity_watermarked) + " |\n";
    if (bundle.has_clean_baseline) {
        md += "| Benign accuracy (clean baseline) | " + pct(bundle.fidelity_clean) + " |\n";
        char delta[32];
        std::snprintf(delta, sizeof delta, "%+.2f pp", bundle.fidelity_delta * 100.0);
        md += "| Fidelity delta | " + std::string(delta) + " |\n";
    } else {
        missing.push_back("clean baseline");
    }
    md += "\n";

    // Robustness summary, one column per attack (final trajectory point).
    static const std::vector<std::pair<std::string, std::string>> kAttackColumns = {
        {"finetune", "Fine-tuning"}, {"transfer", "Transfer learning"},
        {"prune", "Pruning"},        {"overwrite", "Overwriting"}};
    md += "## Robustness\n\n";
    md += "| Attack | Final ASR | Final benign accuracy |\n|---|---|---|\n";
    std::vector<std::pair<std::string, attack::AttackReport>> reports;
    for (const auto& [id, title] : kAttackColumns) {
        auto it = bundle.robustness_files.find(id);
        if (it == bundle.robustness_files.end()) {
            md += "| " + title + " | - | - |\n";
            missing.push_back(id + " attack");
            continue;
        }
        auto rep = attack::load_attack_report(run_dir / it->second);
        const auto& last = rep.trajectory.back();
        md += "| " + title + " | " + pct(last.asr) + " | " + pct(last.benign_accuracy) +
              " |\n";
        reports.emplace_back(id, std::move(rep));
    }
    md += "\n";

    for (const auto& [id, rep] : reports) {
        md += "### " + id + "\n\n";
        if (rep.truncated) md += "_Trajectory truncated: " + rep.note + "_\n\n";
        md += "| Strength | Benign accuracy | ASR |\n|---|---|---|\n";
        for (const auto& p : rep.trajectory) {
            char s[32];
            std::snprintf(s, sizeof s, "%.4g", p.strength);
            md += "| " + std::string(s) + " | " + pct(p.benign_accuracy) + " | " +
                  pct(p.asr) + " |\n";
        }
        md += "\n";
        const std::string svg_rel = "report/" + id + ".svg";
        std::ofstream svg(run_dir / svg_rel);
        svg << svg_trajectory_plot(id + " attack", attack_x_label(id), rep.trajectory);
        svg.close();
        written.push_back(svg_rel);
        md += "![" + id + "](" + id + ".svg)\n\n";
        if (id == "overwrite" && !rep.new_key_trajectory.empty()) {
            const std::string svg2_rel = "report/overwrite_new_key.svg";
            std::ofstream svg2(run_dir / svg2_rel);
            svg2 << svg_trajectory_plot("overwrite attack (adversary key)",
                                        "iteration", rep.new_key_trajectory);
            svg2.close();
            written.push_back(svg2_rel);
            md += "![overwrite new key](overwrite_new_key.svg)\n\n";
        }
    }

    auto detect_it = bundle.robustness_files.find("detect");
    if (detect_it != bundle.robustness_files.end()) {
        auto cm = attack::confusion_from_json(read_text(run_dir / detect_it->second));
        md += "## Trigger detectability (3-way detector)\n\n";
        md += "| Prediction \\\\ Truth | Normal | Invisible fusion | Direct fusion |\n";
        md += "|---|---|---|---|\n";
        const char* rows[3] = {"Normal", "Invisible fusion", "Direct fusion"};
        for (int r = 0; r < 3; ++r)
            md += "| " + std::string(rows[r]) + " | " + std::to_string(cm.counts[r][0]) +
                  " | " + std::to_string(cm.counts[r][1]) + " | " +
                  std::to_string(cm.counts[r][2]) + " |\n";
        md += "\nNormal recall " + pct(cm.recall(0)) + ", invisible recall " +
              pct(cm.recall(1)) + ", direct recall " + pct(cm.recall(2)) + ".\n\n";
    }

    if (!missing.empty()) {
        md += "## Partial report\n\nMissing sections:\n";
        for (const auto& m : missing) md += "- " + m + "\n";
        md += "\n";
    }

    std::ofstream out(run_dir / "report/report.md");
    out << md;
    out.close();
    written.push_back("report/report.md");
    return written;
}

}  // namespace forge::exp
