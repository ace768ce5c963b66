#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/attack/attack.hpp"
#include "forge/train/train.hpp"
#include "forge/trigger/trigger.hpp"
#include "forge/verify/verify.hpp"

namespace forge::exp {

inline constexpr const char* kSchemaVersion = "1.0.0";
inline constexpr const char* kToolVersion = "wmforge 0.1.0";

struct PruneAttackConfig {
    bool enabled = true;
    std::vector<double> ratios = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
};

struct FinetuneAttackConfig {
    bool enabled = true;
    attack::FinetuneOptions options;
};

struct TransferAttackConfig {
    bool enabled = false;
    std::string target_dataset = "cifar100";
    attack::TransferOptions options;
};

struct OverwriteAttackConfig {
    bool enabled = false;
    trigger::TriggerSpec new_trigger;
    attack::OverwriteOptions options;
};

struct DetectAttackConfig {
    bool enabled = false;
    attack::DetectorProtocol protocol;
};

/// Whole-run configuration; parsed from JSON with strict key checking
/// (unknown fields are a validation error, not a warning).
struct PipelineConfig {
    std::string run_id;
    std::string dataset = "mnist";
    std::string arch = "lenet5";
    uint64_t seed = 42;
    bool train_clean_baseline = true;
    trigger::TriggerSpec trigger;
    train::TrainConfig train;
    double verify_threshold = 0.9;
    PruneAttackConfig prune;
    FinetuneAttackConfig finetune;
    TransferAttackConfig transfer;
    OverwriteAttackConfig overwrite;
    DetectAttackConfig detect;
};

PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string pipeline_config_to_json(const PipelineConfig& cfg);

/// Run manifest: config snapshot, input checksums, seed registry, and a
/// record of every file a run writes. Single writer, append-only.
class RunManifest {
public:
    RunManifest(std::string run_id, std::string command, std::string config_json);

    void record_input(const std::string& name, const std::string& sha256);
    void record_seed(const std::string& stage, uint64_t seed);
    /// Hashes the file and records it; every pipeline output goes
    /// through here so orphan detection can hold.
    void record_file(const std::filesystem::path& root, const std::string& rel_path,
                     const std::string& role);
    void record_stage(const std::string& stage, const std::string& status);

    std::string to_json() const;
    void save(const std::filesystem::path& path) const;

    const std::vector<std::string>& files() const { return file_paths_; }

private:
    std::string run_id_, command_, config_json_, started_at_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<std::pair<std::string, uint64_t>> seeds_;
    struct FileRecord {
        std::string path, sha256, role;
    };
    std::vector<FileRecord> file_records_;
    std::vector<std::string> file_paths_;
    std::vector<std::pair<std::string, std::string>> stages_;
};

/// The metric triple plus artifact references, serialized as
/// results.json inside the run directory.
struct ResultsBundle {
    std::string run_id;
    double effectiveness = 0.0;  // key asr on the watermarked model
    double fidelity_watermarked = 0.0;
    double fidelity_clean = 0.0;  // NaN when no baseline was trained
    double fidelity_delta = 0.0;
    std::map<std::string, std::string> robustness_files;  // attack id -> rel path
    std::map<std::string, attack::AttackReport> robustness;
    std::string verify_report_file;
    std::string metrics_log_file;
    bool has_clean_baseline = false;
};

std::string results_to_json(const ResultsBundle& r);
ResultsBundle results_from_json(const std::string& text);

struct PipelineOutcome {
    ResultsBundle bundle;
    std::filesystem::path run_dir;
};

/// triggers -> embed -> verify -> attacks, artifacts under
/// <out_root>/<run_id>/. Any stage failure rethrows with the stage name
/// after persisting the manifest.
PipelineOutcome run_pipeline(const PipelineConfig& cfg,
                             const std::filesystem::path& out_root);

/// Renders report.md plus per-attack SVG trajectory plots from a
/// completed (or partial) run directory. Byte-stable across reruns.
/// Returns the list of written files (relative to run_dir).
std::vector<std::string> render_report(const std::filesystem::path& run_dir);

/// Polyline chart with two series (asr, benign accuracy) against attack
/// strength; deterministic output.
std::string svg_trajectory_plot(const std::string& title, const std::string& x_label,
                                const std::vector<attack::TrajectoryPoint>& points);

}  // namespace forge::exp
