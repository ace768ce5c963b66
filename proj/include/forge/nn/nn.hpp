#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "forge/core/rng.hpp"
#include "forge/core/tensor.hpp"
#include "forge/kernels/kernels.hpp"

namespace forge::nn {

enum class ParamKind { conv_weight, fc_weight, bias, bn_gain, bn_bias };

/// View into a layer-owned parameter. Pointers stay valid for the life of
/// the owning model; the registry is what masking, pruning, and the
/// optimizers operate on.
struct ParamRef {
    std::string name;
    ParamKind kind;
    Tensor* value;
    Tensor* grad;
};

class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    const std::string& name() const { return name_; }
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect_params(std::vector<ParamRef>& out) { (void)out; }
    /// Non-trainable state (running stats); serialized but never optimized.
    virtual void collect_buffers(std::vector<ParamRef>& out) { (void)out; }

protected:
    std::string name_;
};

/// Fixed per-channel (x/255 - mean)/std input stage. Keys store raw 8-bit
/// pixels; normalization lives in the model so archives stay
/// preprocessing-agnostic.
class InputNorm : public Layer {
public:
    InputNorm(std::string name, std::vector<float> mean, std::vector<float> stdev);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;

private:
    std::vector<float> mean_, stdev_;
};

class Conv2d : public Layer {
public:
    Conv2d(std::string name, int64_t in_c, int64_t out_c, int64_t kernel,
           int64_t stride, int64_t pad, bool bias, Rng& rng);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<ParamRef>& out) override;

    Tensor weight, bias;
    Tensor weight_grad, bias_grad;

private:
    int64_t in_c_, out_c_, kernel_, stride_, pad_;
    bool has_bias_;
    Tensor cached_x_;
};

class ReLU : public Layer {
public:
    explicit ReLU(std::string name) : Layer(std::move(name)) {}
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;

private:
    Tensor cached_x_;
};

class MaxPool2 : public Layer {
public:
    explicit MaxPool2(std::string name) : Layer(std::move(name)) {}
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;

private:
    kernels::Pool2Shape shape_{};
    std::vector<int32_t> argmax_;
};

class GlobalAvgPool : public Layer {
public:
    explicit GlobalAvgPool(std::string name) : Layer(std::move(name)) {}
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;

private:
    std::vector<int64_t> in_shape_;
};

class Flatten : public Layer {
public:
    explicit Flatten(std::string name) : Layer(std::move(name)) {}
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;

private:
    std::vector<int64_t> in_shape_;
};

class Linear : public Layer {
public:
    Linear(std::string name, int64_t in_f, int64_t out_f, Rng& rng);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<ParamRef>& out) override;

    Tensor weight, bias;
    Tensor weight_grad, bias_grad;

private:
    int64_t in_f_, out_f_;
    Tensor cached_x_;
};

class BatchNorm2d : public Layer {
public:
    BatchNorm2d(std::string name, int64_t channels, float momentum = 0.1f,
                float eps = 1e-5f);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<ParamRef>& out) override;
    void collect_buffers(std::vector<ParamRef>& out) override;

    Tensor gain, bias;           // gamma, beta
    Tensor gain_grad, bias_grad;
    Tensor running_mean, running_var;

private:
    int64_t channels_;
    float momentum_, eps_;
    Tensor cached_xhat_;
    std::vector<float> inv_std_;
    std::vector<int64_t> in_shape_;
};

/// Two 3x3 conv+BN pairs with a residual shortcut (1x1 conv+BN when the
/// shape changes), ReLU after the join.
class ResidualBlock : public Layer {
public:
    ResidualBlock(std::string name, int64_t in_c, int64_t out_c, int64_t stride,
                  Rng& rng);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(std::vector<ParamRef>& out) override;

private:
    std::unique_ptr<Conv2d> conv1_, conv2_, proj_;
    std::unique_ptr<BatchNorm2d> bn1_, bn2_, proj_bn_;
    std::unique_ptr<ReLU> relu1_;
    Tensor cached_sum_;  // pre-activation of the join, for the final ReLU
};

class Model {
public:
    Tensor forward(const Tensor& x, bool training);
    Tensor backward(const Tensor& dy);

    void add(std::unique_ptr<Layer> layer);
    std::vector<ParamRef> params();
    std::vector<ParamRef> buffers();
    int64_t param_count();

    std::vector<Layer*> layers();

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// Mean softmax cross-entropy; backward() hands the model dlogits.
struct LossResult {
    float loss;
    Tensor dlogits;
};
LossResult softmax_xent_loss(const Tensor& logits, const std::vector<int32_t>& targets);

/// Argmax per row of a [n, classes] logits tensor.
std::vector<int32_t> argmax_rows(const Tensor& logits);

}  // namespace forge::nn
