#include <cmath>
#include <stdexcept>

#include "forge/train/train.hpp"

namespace forge::train {

MixedSet mix_training_set(const zoo::DatasetSplits& data,
                          const trigger::WatermarkKey& key, double trigger_fraction,
                          uint64_t seed) {
    if (trigger_fraction < 0.0 || trigger_fraction >= 1.0)
        throw std::invalid_argument("trigger fraction must be in [0,1)");
    if (key.dataset_id != data.dataset_id)
        throw std::invalid_argument("key was generated for dataset '" + key.dataset_id +
                                    "', not '" + data.dataset_id + "'");

    const int64_t total = static_cast<int64_t>(data.train.size());
    const int64_t n_triggers =
        static_cast<int64_t>(std::ceil(trigger_fraction * static_cast<double>(total)));

    MixedSet mixed;
    mixed.trigger_count = n_triggers;
    if (n_triggers > 0)
        mixed.trigger_pool = training_triggers(data, key.spec, n_triggers);

    mixed.samples.reserve(static_cast<size_t>(total));
    // Trigger entries replace the tail of the original set, then the whole
    // thing is shuffled; the set size stays exactly N.
    for (int64_t i = 0; i < total - n_triggers; ++i)
        mixed.samples.push_back({&data.train[static_cast<size_t>(i)].image,
                                 data.train[static_cast<size_t>(i)].label, false});
    for (int64_t i = 0; i < n_triggers; ++i)
        mixed.samples.push_back({&mixed.trigger_pool[static_cast<size_t>(i)].image,
                                 key.spec.target_class, true});

    Rng rng(derive_seed(seed, "mix/shuffle"));
    rng.shuffle(mixed.samples);
    return mixed;
}

}  // namespace forge::train
