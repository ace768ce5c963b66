#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "forge/nn/serialize.hpp"
#include "forge/train/train.hpp"
#include "forge/trigger/trigger.hpp"
#include "forge/verify/verify.hpp"
#include "forge/zoo/zoo.hpp"

namespace forge::attack {

enum class AttackId { finetune, transfer, prune, overwrite, detectability };

AttackId attack_from_string(const std::string& s);
std::string attack_to_string(AttackId a);

struct TrajectoryPoint {
    double strength;  // pruning ratio or iteration index
    double benign_accuracy;
    double asr;
};

struct AttackReport {
    AttackId attack;
    std::vector<TrajectoryPoint> trajectory;
    // Overwrite attacks also track the adversary's key.
    std::vector<TrajectoryPoint> new_key_trajectory;
    std::string attacked_model_ref;
    std::string config_json;
    bool truncated = false;  // divergence cut the run short
    std::string note;
};

std::string attack_report_to_json(const AttackReport& r);
AttackReport attack_report_from_json(const std::string& text);
void save_attack_report(const AttackReport& r, const std::filesystem::path& path);
AttackReport load_attack_report(const std::filesystem::path& path);

/// Zeroes the ceil(ratio * n) prunable weights (conv + fc, biases and
/// norm parameters exempt) of smallest |w|, one global ordering across
/// layers, ties broken by stable index order. Shapes unchanged.
void prune_l1_unstructured(nn::Model& model, double ratio);

/// Fraction of prunable weights that are exactly zero.
double prunable_zero_fraction(nn::Model& model);

/// asr via the verifier (single code path shared with ownership checks).
double model_asr(nn::Model& model, const trigger::WatermarkKey& key, int64_t n_classes);

/// For each ratio (ascending), prunes a fresh copy of the model and
/// records (benign accuracy, asr). The input model is left untouched.
AttackReport pruning_sweep(nn::Model& model, const zoo::ArchSpec& spec,
                           const zoo::DatasetSplits& data,
                           const trigger::WatermarkKey& key,
                           const std::vector<double>& ratios);

struct FinetuneOptions {
    int64_t n_samples = 1500;     // in-distribution samples, 1000..2000 typical
    int64_t iterations = 10;      // one iteration = epochs_per_iteration epochs
    int64_t epochs_per_iteration = 20;
    int64_t batch_size = 64;
    double lr_start = 1e-4;
    double lr_end = 1e-5;
    uint64_t seed = 0;
};

AttackReport finetune_attack(nn::Model& model, const zoo::ArchSpec& spec,
                             const zoo::DatasetSplits& data,
                             const trigger::WatermarkKey& key,
                             const FinetuneOptions& opts);

struct TransferOptions {
    int64_t class_subset_size = 10;  // must equal the model head width
    int64_t iterations = 10;
    int64_t epochs_per_iteration = 20;
    int64_t batch_size = 64;
    double lr_start = 1e-4;
    double lr_end = 1e-5;
    uint64_t seed = 0;
};

/// Retrains on a class subset of a new-domain dataset; the trajectory
/// records accuracy on the original dataset alongside the key asr.
AttackReport transfer_attack(nn::Model& model, const zoo::ArchSpec& spec,
                             const zoo::DatasetSplits& original,
                             const zoo::DatasetSplits& target,
                             const trigger::WatermarkKey& key,
                             const TransferOptions& opts);

struct OverwriteOptions {
    double trigger_fraction = 0.01;  // e for the adversary's mixed set
    int64_t epochs = 2;
    int64_t batch_size = 64;
    double lr_start = 1e-4;
    double lr_end = 1e-5;
    uint64_t seed = 0;
};

/// Fine-tunes on the new key's mixed data (Eq. 1-style labels for the
/// adversary's triggers); reports original-key and new-key asr per epoch.
AttackReport overwrite_attack(nn::Model& model, const zoo::ArchSpec& spec,
                              const zoo::DatasetSplits& data,
                              const trigger::WatermarkKey& original_key,
                              const trigger::WatermarkKey& new_key,
                              const OverwriteOptions& opts);

/// 3x3 confusion counts over {normal, invisible_fusion, direct_fusion};
/// rows = predictions, columns = ground truth.
struct ConfusionMatrix3 {
    std::array<std::array<int64_t, 3>, 3> counts{};
    int64_t column_total(int col) const {
        return counts[0][col] + counts[1][col] + counts[2][col];
    }
    double recall(int cls) const {
        const int64_t total = column_total(cls);
        return total ? static_cast<double>(counts[cls][cls]) / total : 0.0;
    }
};

std::string confusion_to_json(const ConfusionMatrix3& m);
ConfusionMatrix3 confusion_from_json(const std::string& text);

struct DetectorProtocol {
    int64_t n_per_class = 1000;
    zoo::ArchId backbone = zoo::ArchId::lenet5;
    double holdout_fraction = 0.2;
    int64_t epochs = 8;
    int64_t batch_size = 64;
    double learning_rate = 1e-3;
    // The simulated attacker knows the scheme but not the key: fused pairs
    // use random class pairs, and invisible blends draw the transparency
    // uniformly from [0.5, 0.9] (the published operating range).
    double transparency_low = 0.5;
    double transparency_high = 0.9;
    uint64_t seed = 0;
};

/// Fabricates normal/invisible/direct images, trains the detector
/// backbone, returns the held-out confusion matrix.
ConfusionMatrix3 detectability_eval(const zoo::DatasetSplits& data,
                                    const DetectorProtocol& protocol);

}  // namespace forge::attack
