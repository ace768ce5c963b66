#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "forge/attack/attack.hpp"

namespace forge::attack {

namespace {

bool prunable(nn::ParamKind kind) {
    return kind == nn::ParamKind::conv_weight || kind == nn::ParamKind::fc_weight;
}

}  // namespace

void prune_l1_unstructured(nn::Model& model, double ratio) {
    if (ratio < 0.0 || ratio >= 1.0)
        throw std::invalid_argument("pruning ratio must be in [0,1)");
    if (ratio == 0.0) return;

    auto params = model.params();
    struct Entry {
        float magnitude;
        size_t param;
        int64_t offset;
    };
    std::vector<Entry> entries;
    for (size_t p = 0; p < params.size(); ++p) {
        if (!prunable(params[p].kind)) continue;
        const Tensor& w = *params[p].value;
        for (int64_t i = 0; i < w.numel(); ++i)
            entries.push_back({std::abs(w[i]), p, i});
    }
    if (entries.empty()) return;

    const int64_t k = static_cast<int64_t>(
        std::ceil(ratio * static_cast<double>(entries.size()) - 1e-12));
    // Stable global order: magnitude, then registry position.
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.magnitude != b.magnitude) return a.magnitude < b.magnitude;
        if (a.param != b.param) return a.param < b.param;
        return a.offset < b.offset;
    });
    for (int64_t i = 0; i < k; ++i)
        (*params[entries[static_cast<size_t>(i)].param].value)[entries[static_cast<size_t>(i)].offset] = 0.0f;
}

double prunable_zero_fraction(nn::Model& model) {
    int64_t zeros = 0, total = 0;
    for (const auto& p : model.params()) {
        if (!prunable(p.kind)) continue;
        for (int64_t i = 0; i < p.value->numel(); ++i) {
            ++total;
            if ((*p.value)[i] == 0.0f) ++zeros;
        }
    }
    return total ? static_cast<double>(zeros) / static_cast<double>(total) : 0.0;
}

double model_asr(nn::Model& model, const trigger::WatermarkKey& key, int64_t n_classes) {
    verify::InProcessOracle oracle(model);
    // Threshold is irrelevant for the raw rate; use 1.0 and read asr.
    return verify::authenticate(oracle, key, 1.0, n_classes).asr;
}

AttackReport pruning_sweep(nn::Model& model, const zoo::ArchSpec& spec,
                           const zoo::DatasetSplits& data,
                           const trigger::WatermarkKey& key,
                           const std::vector<double>& ratios) {
    for (size_t i = 1; i < ratios.size(); ++i)
        if (ratios[i] <= ratios[i - 1])
            throw std::invalid_argument("pruning ratios must be strictly ascending");

    AttackReport report;
    report.attack = AttackId::prune;
    for (double ratio : ratios) {
        nn::Model copy = nn::clone_model(model, spec);
        prune_l1_unstructured(copy, ratio);
        report.trajectory.push_back({ratio, zoo::evaluate(copy, data.test),
                                     model_asr(copy, key, spec.num_classes)});
    }
    return report;
}

}  // namespace forge::attack
