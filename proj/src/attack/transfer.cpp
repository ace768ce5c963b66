#include <algorithm>
#include <stdexcept>

#include "forge/attack/attack.hpp"

namespace forge::attack {

AttackReport transfer_attack(nn::Model& model, const zoo::ArchSpec& spec,
                             const zoo::DatasetSplits& original,
                             const zoo::DatasetSplits& target,
                             const trigger::WatermarkKey& key,
                             const TransferOptions& opts) {
    if (opts.class_subset_size != spec.num_classes)
        throw std::invalid_argument(
            "transfer keeps the head width: class subset must equal " +
            std::to_string(spec.num_classes));
    if (opts.class_subset_size > target.num_classes)
        throw std::invalid_argument("class subset exceeds target dataset classes");
    if (target.width != spec.width || target.height != spec.height ||
        target.channels != spec.channels)
        throw std::invalid_argument("transfer target must share the input shape");

    // Random class subset of the new domain, relabeled onto the old head.
    Rng rng(derive_seed(opts.seed, "attack/transfer_classes"));
    std::vector<int> classes(static_cast<size_t>(target.num_classes));
    for (size_t i = 0; i < classes.size(); ++i) classes[i] = static_cast<int>(i);
    rng.shuffle(classes);
    classes.resize(static_cast<size_t>(opts.class_subset_size));
    std::vector<int> relabel(static_cast<size_t>(target.num_classes), -1);
    for (size_t i = 0; i < classes.size(); ++i)
        relabel[static_cast<size_t>(classes[i])] = static_cast<int>(i);

    std::vector<train::MixedSample> samples;
    for (const auto& li : target.train) {
        const int nl = relabel[static_cast<size_t>(li.label)];
        if (nl >= 0) samples.push_back({&li.image, nl, false});
    }

    nn::Model victim = nn::clone_model(model, spec);
    AttackReport report;
    report.attack = AttackId::transfer;
    report.note = "accuracy measured on the original dataset";
    report.trajectory.push_back({0.0, zoo::evaluate(victim, original.test),
                                 model_asr(victim, key, spec.num_classes)});

    auto opt = nn::make_optimizer("adam");
    for (int64_t it = 1; it <= opts.iterations; ++it) {
        const double f0 = static_cast<double>(it - 1) / std::max<int64_t>(1, opts.iterations);
        const double f1 = static_cast<double>(it) / std::max<int64_t>(1, opts.iterations);
        train::finetune(victim, samples, opts.epochs_per_iteration, opts.batch_size,
                        opts.lr_start + f0 * (opts.lr_end - opts.lr_start),
                        opts.lr_start + f1 * (opts.lr_end - opts.lr_start),
                        derive_seed(opts.seed, "attack/transfer_it" + std::to_string(it)),
                        *opt);
        report.trajectory.push_back({static_cast<double>(it),
                                     zoo::evaluate(victim, original.test),
                                     model_asr(victim, key, spec.num_classes)});
    }
    return report;
}

}  // namespace forge::attack
