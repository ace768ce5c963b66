#include "forge/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace forge::nn {

namespace {

const Tensor* mask_for(const std::vector<const Tensor*>* masks, size_t i) {
    if (!masks || i >= masks->size()) return nullptr;
    return (*masks)[i];
}

}  // namespace

void Sgd::step(const std::vector<ParamRef>& params, float lr,
               const std::vector<const Tensor*>* step_masks) {
    if (momentum_ > 0 && velocity_.size() != params.size()) {
        velocity_.clear();
        for (const auto& p : params) velocity_.push_back(Tensor::zeros_like(*p.value));
    }
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& w = *params[i].value;
        const Tensor& g = *params[i].grad;
        const Tensor* mask = mask_for(step_masks, i);
        for (int64_t j = 0; j < w.numel(); ++j) {
            float delta;
            if (momentum_ > 0) {
                velocity_[i][j] = momentum_ * velocity_[i][j] + g[j];
                delta = lr * velocity_[i][j];
            } else {
                delta = lr * g[j];
            }
            if (mask && (*mask)[j] == 0.0f) continue;
            w[j] -= delta;
        }
    }
}

void Adam::step(const std::vector<ParamRef>& params, float lr,
                const std::vector<const Tensor*>* step_masks) {
    if (m_.size() != params.size()) {
        m_.clear();
        v_.clear();
        for (const auto& p : params) {
            m_.push_back(Tensor::zeros_like(*p.value));
            v_.push_back(Tensor::zeros_like(*p.value));
        }
    }
    ++t_;
    const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
    const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& w = *params[i].value;
        const Tensor& g = *params[i].grad;
        const Tensor* mask = mask_for(step_masks, i);
        for (int64_t j = 0; j < w.numel(); ++j) {
            m_[i][j] = beta1_ * m_[i][j] + (1 - beta1_) * g[j];
            v_[i][j] = beta2_ * v_[i][j] + (1 - beta2_) * g[j] * g[j];
            if (mask && (*mask)[j] == 0.0f) continue;
            const float mhat = m_[i][j] / bc1;
            const float vhat = v_[i][j] / bc2;
            w[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

std::unique_ptr<Optimizer> make_optimizer(const std::string& id) {
    if (id == "adam") return std::make_unique<Adam>();
    if (id == "sgd") return std::make_unique<Sgd>();
    if (id == "sgd_momentum") return std::make_unique<Sgd>(0.9f);
    throw std::invalid_argument("unknown optimizer: " + id);
}

}  // namespace forge::nn
