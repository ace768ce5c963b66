#pragma once

#include <memory>
#include <string>
#include <vector>

#include "forge/nn/nn.hpp"

namespace forge::nn {

/// Optimizers update parameters in registry order. When a step mask is
/// supplied for a parameter, the computed delta is zeroed wherever the
/// mask is zero, so frozen weights stay bit-identical across the step
/// (moment state still advances from the already-masked gradients).
class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual void step(const std::vector<ParamRef>& params, float lr,
                      const std::vector<const Tensor*>* step_masks = nullptr) = 0;
    virtual std::string id() const = 0;
};

class Sgd : public Optimizer {
public:
    explicit Sgd(float momentum = 0.0f) : momentum_(momentum) {}
    void step(const std::vector<ParamRef>& params, float lr,
              const std::vector<const Tensor*>* step_masks) override;
    std::string id() const override { return momentum_ > 0 ? "sgd_momentum" : "sgd"; }

private:
    float momentum_;
    std::vector<Tensor> velocity_;
};

class Adam : public Optimizer {
public:
    Adam(float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(const std::vector<ParamRef>& params, float lr,
              const std::vector<const Tensor*>* step_masks) override;
    std::string id() const override { return "adam"; }

private:
    float beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(const std::string& id);

}  // namespace forge::nn
