#include <stdexcept>

#include "forge/attack/attack.hpp"

namespace forge::attack {

AttackReport finetune_attack(nn::Model& model, const zoo::ArchSpec& spec,
                             const zoo::DatasetSplits& data,
                             const trigger::WatermarkKey& key,
                             const FinetuneOptions& opts) {
    if (opts.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (opts.n_samples < 1 ||
        opts.n_samples > static_cast<int64_t>(data.train.size()))
        throw std::invalid_argument("fine-tune sample count out of range");

    // Adversary's data: a random in-distribution subset, original labels.
    Rng rng(derive_seed(opts.seed, "attack/finetune_subset"));
    std::vector<size_t> pool(data.train.size());
    for (size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    rng.shuffle(pool);
    std::vector<train::MixedSample> samples;
    samples.reserve(static_cast<size_t>(opts.n_samples));
    for (int64_t i = 0; i < opts.n_samples; ++i)
        samples.push_back({&data.train[pool[static_cast<size_t>(i)]].image,
                           data.train[pool[static_cast<size_t>(i)]].label, false});

    nn::Model victim = nn::clone_model(model, spec);
    AttackReport report;
    report.attack = AttackId::finetune;
    report.trajectory.push_back({0.0, zoo::evaluate(victim, data.test),
                                 model_asr(victim, key, spec.num_classes)});

    auto opt = nn::make_optimizer("adam");
    for (int64_t it = 1; it <= opts.iterations; ++it) {
        // The learning-rate schedule spans the whole attack.
        const double f0 = static_cast<double>(it - 1) / std::max<int64_t>(1, opts.iterations);
        const double f1 = static_cast<double>(it) / std::max<int64_t>(1, opts.iterations);
        const double lr0 = opts.lr_start + f0 * (opts.lr_end - opts.lr_start);
        const double lr1 = opts.lr_start + f1 * (opts.lr_end - opts.lr_start);
        train::finetune(victim, samples, opts.epochs_per_iteration, opts.batch_size,
                        lr0, lr1, derive_seed(opts.seed, "attack/finetune_it" +
                                              std::to_string(it)), *opt);
        const double benign = zoo::evaluate(victim, data.test);
        const double asr = model_asr(victim, key, spec.num_classes);
        report.trajectory.push_back({static_cast<double>(it), benign, asr});
        if (!std::isfinite(benign)) {
            report.truncated = true;
            report.note = "divergence at iteration " + std::to_string(it);
            break;
        }
    }
    return report;
}

}  // namespace forge::attack
