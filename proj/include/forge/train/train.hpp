#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "forge/core/rng.hpp"
#include "forge/nn/optim.hpp"
#include "forge/trigger/trigger.hpp"
#include "forge/zoo/zoo.hpp"

namespace forge::train {

enum class MaskStrategy { random };  // room for global/module variants
enum class MaskResample { per_batch, per_epoch };

struct MaskConfig {
    double drop_probability = 0.3;  // p: each masked weight drops with prob p,
                                    // kept weights scale by 1/(1-p)
    MaskStrategy strategy = MaskStrategy::random;
    MaskResample resample = MaskResample::per_batch;
    // Layer scope: conv layers whose name is listed; empty set with
    // masking enabled means "all conv layers".
    std::vector<std::string> layer_scope;
    uint64_t seed = 0;
    bool enabled() const { return drop_probability > 0.0; }
};

struct MixSpec {
    double trigger_fraction = 0.01;  // e: share of the training set replaced
};

struct TrainConfig {
    int64_t epochs = 6;
    double learning_rate = 1e-3;
    int64_t batch_size = 64;
    std::string optimizer_id = "adam";
    MaskConfig mask;
    MixSpec mix;
    uint64_t seed = 0;
    // Optional linear learning-rate schedule endpoint (fine-tune paths use
    // 1e-4 -> 1e-5); unset means constant learning_rate.
    std::optional<double> final_learning_rate;
};

struct EpochStats {
    int64_t epoch;
    double train_loss;
    double benign_accuracy;   // on the held-out test split
    double trigger_accuracy;  // on the key's validation triggers
};

struct TrainLog {
    std::vector<EpochStats> epochs;
    bool diverged = false;
    std::string divergence_note;
};

/// Bernoulli keep-mask: entry 0 with probability p, 1 otherwise.
Tensor sample_mask(const std::vector<int64_t>& shape, double drop_probability, Rng& rng);

/// Per-step masks over the in-scope conv weights of a model. apply()
/// swaps masked-and-scaled weights in (Eq. 4 path); restore() puts the
/// originals back. Gradients produced while applied are with respect to
/// the effective weights, so the masked update rule composes with them
/// into the standard inverted-dropout step.
class MaskSet {
public:
    MaskSet(nn::Model& model, const MaskConfig& cfg);

    void resample(Rng& rng);
    void apply();
    void restore();

    /// Eq.-6 gradient transform for in-scope params: g <- (g . M)/(1-p).
    void mask_gradients();

    /// Per-param step-mask vector for the optimizer (nullptr = unmasked).
    const std::vector<const Tensor*>& step_masks() const { return step_masks_; }

    size_t masked_param_count() const { return targets_.size(); }
    const Tensor& mask_for(size_t i) const { return masks_[i]; }

private:
    struct Target {
        size_t param_index;
        Tensor* value;
        Tensor* grad;
    };
    nn::Model& model_;
    MaskConfig cfg_;
    std::vector<Target> targets_;
    std::vector<Tensor> masks_;
    std::vector<Tensor> saved_;
    std::vector<const Tensor*> step_masks_;
    bool applied_ = false;
};

/// Single masked training step: masked forward (Eq. 4), backward, masked
/// gradient update (Eq. 6). Masks must already be sampled. Returns the
/// batch loss.
float masked_step(nn::Model& model, MaskSet& masks, const Tensor& batch_x,
                  const std::vector<int32_t>& batch_y, nn::Optimizer& opt, float lr);

/// One mixed-set entry: either an original training sample or a trigger.
struct MixedSample {
    const Image* image;
    int32_t label;
    bool is_trigger;
};

/// Mixed training set of exactly |train| entries where ceil(N*e) entries
/// are triggers labeled with the target class (Eq. 1 labels). Trigger
/// images continue the key's deterministic sequence, so the key's own
/// validation triggers are never trained on. The returned trigger pool
/// owns the fused images.
struct MixedSet {
    std::vector<LabeledImage> trigger_pool;
    std::vector<MixedSample> samples;  // references train split + pool
    int64_t trigger_count = 0;
};
MixedSet mix_training_set(const zoo::DatasetSplits& data,
                          const trigger::WatermarkKey& key, double trigger_fraction,
                          uint64_t seed);

/// Trains arch from scratch on the mixed set with masked steps; logs
/// per-epoch benign and trigger accuracy. Set trigger_fraction = 0 for a
/// clean (false-positive control) model.
struct EmbedResult {
    nn::Model model;
    zoo::ArchSpec spec;
    TrainLog log;
};
EmbedResult embed_watermark(zoo::ArchId arch, const zoo::DatasetSplits& data,
                            const trigger::WatermarkKey& key, const TrainConfig& cfg,
                            const std::function<void(const EpochStats&)>& on_epoch = {});

/// Plain fine-tuning of an existing model on given samples (no masking),
/// linear learning-rate schedule across total_epochs.
void finetune(nn::Model& model, const std::vector<MixedSample>& samples,
              int64_t epochs, int64_t batch_size, double lr_start, double lr_end,
              uint64_t seed, nn::Optimizer& opt);

/// Trigger accuracy of a model on a key (fraction predicted as target).
double trigger_accuracy(nn::Model& model, const trigger::WatermarkKey& key);

}  // namespace forge::train
