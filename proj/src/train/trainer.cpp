#include <cmath>
#include <stdexcept>

#include "forge/train/train.hpp"

namespace forge::train {

namespace {

Tensor assemble_batch(const std::vector<MixedSample>& samples,
                      const std::vector<size_t>& order, size_t start, size_t end,
                      std::vector<int32_t>& labels) {
    std::vector<const Image*> images;
    images.reserve(end - start);
    labels.clear();
    for (size_t i = start; i < end; ++i) {
        images.push_back(samples[order[i]].image);
        labels.push_back(samples[order[i]].label);
    }
    return zoo::images_to_tensor(images);
}

}  // namespace

double trigger_accuracy(nn::Model& model, const trigger::WatermarkKey& key) {
    std::vector<const Image*> images;
    images.reserve(key.triggers.size());
    for (const auto& t : key.triggers) images.push_back(&t.image);
    const auto preds = zoo::predict(model, images);
    int64_t hit = 0;
    for (int32_t p : preds)
        if (p == key.spec.target_class) ++hit;
    return static_cast<double>(hit) / static_cast<double>(preds.size());
}

EmbedResult embed_watermark(zoo::ArchId arch, const zoo::DatasetSplits& data,
                            const trigger::WatermarkKey& key, const TrainConfig& cfg,
                            const std::function<void(const EpochStats&)>& on_epoch) {
    if (cfg.epochs < 1 || cfg.batch_size < 1 || cfg.learning_rate <= 0)
        throw std::invalid_argument("train config: epochs, batch size, and learning "
                                    "rate must be positive");

    zoo::ArchSpec spec = zoo::make_arch_spec(arch, data);
    zoo::validate_pairing(spec, data);
    nn::Model model = zoo::build_model(spec, derive_seed(cfg.seed, "embed/init"));

    MixedSet mixed = cfg.mix.trigger_fraction > 0
                         ? mix_training_set(data, key, cfg.mix.trigger_fraction, cfg.seed)
                         : MixedSet{};
    if (cfg.mix.trigger_fraction == 0) {
        for (const auto& li : data.train)
            mixed.samples.push_back({&li.image, li.label, false});
    }

    auto opt = nn::make_optimizer(cfg.optimizer_id);
    MaskConfig mask_cfg = cfg.mask;
    MaskSet masks(model, mask_cfg);
    Rng mask_rng(derive_seed(mask_cfg.seed ? mask_cfg.seed : cfg.seed, "embed/mask"));
    Rng order_rng(derive_seed(cfg.seed, "embed/order"));

    const size_t n = mixed.samples.size();
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    EmbedResult result{std::move(model), spec, {}};
    const int64_t total_steps =
        cfg.epochs * static_cast<int64_t>((n + cfg.batch_size - 1) / cfg.batch_size);
    int64_t step = 0;

    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        if (mask_cfg.resample == MaskResample::per_epoch) masks.resample(mask_rng);
        double loss_sum = 0.0;
        int64_t batches = 0;
        for (size_t start = 0; start < n; start += cfg.batch_size) {
            const size_t end = std::min(n, start + static_cast<size_t>(cfg.batch_size));
            std::vector<int32_t> labels;
            Tensor x = assemble_batch(mixed.samples, order, start, end, labels);
            if (mask_cfg.resample == MaskResample::per_batch) masks.resample(mask_rng);
            double lr = cfg.learning_rate;
            if (cfg.final_learning_rate) {
                const double f = total_steps > 1
                                     ? static_cast<double>(step) / (total_steps - 1)
                                     : 0.0;
                lr = cfg.learning_rate +
                     f * (*cfg.final_learning_rate - cfg.learning_rate);
            }
            const float loss = masked_step(result.model, masks, x, labels, *opt,
                                           static_cast<float>(lr));
            ++step;
            if (!std::isfinite(loss) || loss > 1e8f) {
                result.log.diverged = true;
                result.log.divergence_note =
                    "loss " + std::to_string(loss) + " at epoch " +
                    std::to_string(epoch) + ", batch " + std::to_string(batches);
                return result;
            }
            loss_sum += loss;
            ++batches;
        }
        EpochStats stats{epoch + 1, loss_sum / std::max<int64_t>(1, batches),
                         zoo::evaluate(result.model, data.test),
                         key.triggers.empty() ? 0.0
                                              : trigger_accuracy(result.model, key)};
        result.log.epochs.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return result;
}

void finetune(nn::Model& model, const std::vector<MixedSample>& samples,
              int64_t epochs, int64_t batch_size, double lr_start, double lr_end,
              uint64_t seed, nn::Optimizer& opt) {
    const size_t n = samples.size();
    if (n == 0 || epochs < 1) return;
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, "finetune/order"));

    const int64_t total_steps =
        epochs * static_cast<int64_t>((n + batch_size - 1) / batch_size);
    int64_t step = 0;
    for (int64_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < n; start += batch_size) {
            const size_t end = std::min(n, start + static_cast<size_t>(batch_size));
            std::vector<int32_t> labels;
            Tensor x = assemble_batch(samples, order, start, end, labels);
            Tensor logits = model.forward(x, /*training=*/true);
            auto loss = nn::softmax_xent_loss(logits, labels);
            model.backward(loss.dlogits);
            const double f =
                total_steps > 1 ? static_cast<double>(step) / (total_steps - 1) : 0.0;
            const double lr = lr_start + f * (lr_end - lr_start);
            opt.step(model.params(), static_cast<float>(lr), nullptr);
            ++step;
        }
    }
}

}  // namespace forge::train
