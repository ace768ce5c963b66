#include <stdexcept>

#include "forge/attack/attack.hpp"

namespace forge::attack {

namespace {

// Draws two instances from distinct random classes.
std::pair<const Image*, const Image*> random_pair(const zoo::DatasetSplits& data,
                                                  const std::vector<std::vector<size_t>>& by_class,
                                                  Rng& rng) {
    const int64_t nc = data.num_classes;
    int ca = static_cast<int>(rng.next_below(static_cast<uint64_t>(nc)));
    int cb;
    do {
        cb = static_cast<int>(rng.next_below(static_cast<uint64_t>(nc)));
    } while (cb == ca);
    const auto& ia = by_class[static_cast<size_t>(ca)];
    const auto& ib = by_class[static_cast<size_t>(cb)];
    if (ia.empty() || ib.empty()) throw std::runtime_error("class without instances");
    return {&data.train[ia[rng.next_below(ia.size())]].image,
            &data.train[ib[rng.next_below(ib.size())]].image};
}

}  // namespace

ConfusionMatrix3 detectability_eval(const zoo::DatasetSplits& data,
                                    const DetectorProtocol& protocol) {
    if (protocol.n_per_class < 10)
        throw std::invalid_argument("need at least 10 samples per class");
    if (static_cast<size_t>(protocol.n_per_class) > data.train.size())
        throw std::invalid_argument("n_per_class exceeds the dataset");

    std::vector<std::vector<size_t>> by_class(static_cast<size_t>(data.num_classes));
    for (size_t i = 0; i < data.train.size(); ++i)
        by_class[static_cast<size_t>(data.train[i].label)].push_back(i);

    // Fabricate the three-way study set. The attacker simulates triggers
    // without the key, so pairs and blend weights vary per sample.
    Rng rng(derive_seed(protocol.seed, "detect/fabricate"));
    std::vector<LabeledImage> study;
    study.reserve(static_cast<size_t>(3 * protocol.n_per_class));
    for (int64_t i = 0; i < protocol.n_per_class; ++i) {
        const size_t idx = rng.next_below(data.train.size());
        study.push_back({data.train[idx].image, 0});  // normal
    }
    for (int64_t i = 0; i < protocol.n_per_class; ++i) {
        auto [a, b] = random_pair(data, by_class, rng);
        const double r = protocol.transparency_low +
                         rng.next_real() *
                             (protocol.transparency_high - protocol.transparency_low);
        study.push_back({trigger::fuse_invisible(*a, *b, r), 1});
    }
    for (int64_t i = 0; i < protocol.n_per_class; ++i) {
        auto [a, b] = random_pair(data, by_class, rng);
        study.push_back({trigger::fuse_direct(*a, *b), 2});
    }
    rng.shuffle(study);

    const size_t holdout =
        static_cast<size_t>(static_cast<double>(study.size()) * protocol.holdout_fraction);
    const size_t train_n = study.size() - holdout;

    zoo::ArchSpec spec;
    spec.arch = protocol.backbone;
    spec.num_classes = 3;
    spec.width = data.width;
    spec.height = data.height;
    spec.channels = data.channels;
    spec.dataset_id = data.dataset_id;
    const auto& info = zoo::dataset_info(data.dataset_id);
    spec.norm_mean = info.norm_mean;
    spec.norm_std = info.norm_std;
    nn::Model detector = zoo::build_model(spec, derive_seed(protocol.seed, "detect/init"));

    std::vector<train::MixedSample> samples;
    samples.reserve(train_n);
    for (size_t i = 0; i < train_n; ++i)
        samples.push_back({&study[i].image, study[i].label, false});
    auto opt = nn::make_optimizer("adam");
    train::finetune(detector, samples, protocol.epochs, protocol.batch_size,
                    protocol.learning_rate, protocol.learning_rate,
                    derive_seed(protocol.seed, "detect/train"), *opt);

    std::vector<const Image*> held;
    held.reserve(holdout);
    for (size_t i = train_n; i < study.size(); ++i) held.push_back(&study[i].image);
    const auto preds = zoo::predict(detector, held);

    ConfusionMatrix3 cm;
    for (size_t i = 0; i < held.size(); ++i)
        ++cm.counts[static_cast<size_t>(preds[i])]
                   [static_cast<size_t>(study[train_n + i].label)];
    return cm;
}

}  // namespace forge::attack
