#include <algorithm>
#include <stdexcept>

#include "forge/train/train.hpp"

namespace forge::train {

Tensor sample_mask(const std::vector<int64_t>& shape, double drop_probability, Rng& rng) {
    if (drop_probability < 0.0 || drop_probability >= 1.0)
        throw std::invalid_argument("drop probability must be in [0,1)");
    Tensor m(shape);
    for (int64_t i = 0; i < m.numel(); ++i)
        m[i] = rng.next_bernoulli(drop_probability) ? 0.0f : 1.0f;
    return m;
}

MaskSet::MaskSet(nn::Model& model, const MaskConfig& cfg) : model_(model), cfg_(cfg) {
    if (cfg.drop_probability < 0.0 || cfg.drop_probability >= 1.0)
        throw std::invalid_argument("drop probability must be in [0,1)");
    auto params = model.params();
    step_masks_.assign(params.size(), nullptr);

    const auto& scope = cfg.layer_scope;
    auto in_scope = [&](const std::string& param_name) {
        if (scope.empty()) return true;  // all conv layers
        const std::string layer = param_name.substr(0, param_name.rfind('.'));
        return std::find(scope.begin(), scope.end(), layer) != scope.end();
    };
    for (size_t i = 0; i < params.size(); ++i) {
        if (params[i].kind != nn::ParamKind::conv_weight) continue;
        if (!in_scope(params[i].name)) continue;
        targets_.push_back({i, params[i].value, params[i].grad});
        masks_.emplace_back(params[i].value->shape());
        masks_.back().fill(1.0f);
        saved_.emplace_back(params[i].value->shape());
    }
    if (targets_.empty() && cfg.enabled())
        throw std::invalid_argument("masking enabled but layer scope matches no conv layer");
    for (size_t t = 0; t < targets_.size(); ++t)
        step_masks_[targets_[t].param_index] = &masks_[t];
}

void MaskSet::resample(Rng& rng) {
    if (applied_) throw std::logic_error("cannot resample while masks are applied");
    for (auto& m : masks_)
        for (int64_t i = 0; i < m.numel(); ++i)
            m[i] = rng.next_bernoulli(cfg_.drop_probability) ? 0.0f : 1.0f;
}

void MaskSet::apply() {
    if (applied_) throw std::logic_error("masks already applied");
    const float scale = 1.0f / (1.0f - static_cast<float>(cfg_.drop_probability));
    for (size_t t = 0; t < targets_.size(); ++t) {
        Tensor& w = *targets_[t].value;
        saved_[t] = w;
        const Tensor& m = masks_[t];
        for (int64_t i = 0; i < w.numel(); ++i) w[i] = w[i] * m[i] * scale;
    }
    applied_ = true;
}

void MaskSet::restore() {
    if (!applied_) throw std::logic_error("masks not applied");
    for (size_t t = 0; t < targets_.size(); ++t) *targets_[t].value = saved_[t];
    applied_ = false;
}

void MaskSet::mask_gradients() {
    const float scale = 1.0f / (1.0f - static_cast<float>(cfg_.drop_probability));
    for (size_t t = 0; t < targets_.size(); ++t) {
        Tensor& g = *targets_[t].grad;
        const Tensor& m = masks_[t];
        for (int64_t i = 0; i < g.numel(); ++i) g[i] = g[i] * m[i] * scale;
    }
}

float masked_step(nn::Model& model, MaskSet& masks, const Tensor& batch_x,
                  const std::vector<int32_t>& batch_y, nn::Optimizer& opt, float lr) {
    masks.apply();
    Tensor logits = model.forward(batch_x, /*training=*/true);
    auto loss = nn::softmax_xent_loss(logits, batch_y);
    model.backward(loss.dlogits);
    masks.restore();
    masks.mask_gradients();
    opt.step(model.params(), lr, &masks.step_masks());
    return loss.loss;
}

}  // namespace forge::train
