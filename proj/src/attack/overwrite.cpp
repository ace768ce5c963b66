#include <stdexcept>

#include "forge/attack/attack.hpp"

namespace forge::attack {

AttackReport overwrite_attack(nn::Model& model, const zoo::ArchSpec& spec,
                              const zoo::DatasetSplits& data,
                              const trigger::WatermarkKey& original_key,
                              const trigger::WatermarkKey& new_key,
                              const OverwriteOptions& opts) {
    if (new_key.dataset_id != data.dataset_id)
        throw std::invalid_argument("new key belongs to a different dataset");

    train::MixedSet mixed =
        train::mix_training_set(data, new_key, opts.trigger_fraction, opts.seed);

    nn::Model victim = nn::clone_model(model, spec);
    AttackReport report;
    report.attack = AttackId::overwrite;
    report.note = "trajectory = original key; new_key_trajectory = adversary key";
    auto record = [&](double strength) {
        const double benign = zoo::evaluate(victim, data.test);
        report.trajectory.push_back(
            {strength, benign, model_asr(victim, original_key, spec.num_classes)});
        report.new_key_trajectory.push_back(
            {strength, benign, model_asr(victim, new_key, spec.num_classes)});
    };
    record(0.0);

    auto opt = nn::make_optimizer("adam");
    for (int64_t epoch = 1; epoch <= opts.epochs; ++epoch) {
        const double f0 = static_cast<double>(epoch - 1) / std::max<int64_t>(1, opts.epochs);
        const double f1 = static_cast<double>(epoch) / std::max<int64_t>(1, opts.epochs);
        train::finetune(victim, mixed.samples, 1, opts.batch_size,
                        opts.lr_start + f0 * (opts.lr_end - opts.lr_start),
                        opts.lr_start + f1 * (opts.lr_end - opts.lr_start),
                        derive_seed(opts.seed, "attack/overwrite_e" + std::to_string(epoch)),
                        *opt);
        record(static_cast<double>(epoch));
        if (!std::isfinite(report.trajectory.back().benign_accuracy)) {
            report.truncated = true;
            break;
        }
    }
    return report;
}

}  // namespace forge::attack
