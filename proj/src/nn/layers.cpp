#include <cmath>
#include <stdexcept>

#include "forge/nn/nn.hpp"

namespace forge::nn {

using kernels::default_backend;

namespace {

void kaiming_init(Tensor& w, int64_t fan_in, Rng& rng) {
    const double stdev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (int64_t i = 0; i < w.numel(); ++i)
        w[i] = static_cast<float>(rng.next_normal() * stdev);
}

}  // namespace

// ---------- InputNorm ----------

InputNorm::InputNorm(std::string name, std::vector<float> mean, std::vector<float> stdev)
    : Layer(std::move(name)), mean_(std::move(mean)), stdev_(std::move(stdev)) {
    if (mean_.size() != stdev_.size() || mean_.empty())
        throw std::invalid_argument("input norm stats mismatch");
}

Tensor InputNorm::forward(const Tensor& x, bool) {
    if (x.rank() != 4 || x.dim(1) != static_cast<int64_t>(mean_.size()))
        throw std::invalid_argument("input norm: bad input shape " + x.shape_str());
    Tensor y = x;
    const int64_t plane = x.dim(2) * x.dim(3);
    for (int64_t n = 0; n < x.dim(0); ++n) {
        for (int64_t c = 0; c < x.dim(1); ++c) {
            const float m = mean_[static_cast<size_t>(c)];
            const float inv = 1.0f / stdev_[static_cast<size_t>(c)];
            float* p = y.data() + (n * x.dim(1) + c) * plane;
            for (int64_t i = 0; i < plane; ++i) p[i] = (p[i] / 255.0f - m) * inv;
        }
    }
    return y;
}

Tensor InputNorm::backward(const Tensor& dy) {
    Tensor dx = dy;
    const int64_t plane = dy.dim(2) * dy.dim(3);
    for (int64_t n = 0; n < dy.dim(0); ++n) {
        for (int64_t c = 0; c < dy.dim(1); ++c) {
            const float scale = 1.0f / (255.0f * stdev_[static_cast<size_t>(c)]);
            float* p = dx.data() + (n * dy.dim(1) + c) * plane;
            for (int64_t i = 0; i < plane; ++i) p[i] *= scale;
        }
    }
    return dx;
}

// ---------- Conv2d ----------

Conv2d::Conv2d(std::string name, int64_t in_c, int64_t out_c, int64_t kernel,
               int64_t stride, int64_t pad, bool with_bias, Rng& rng)
    : Layer(std::move(name)),
      weight({out_c, in_c, kernel, kernel}),
      bias(with_bias ? Tensor({out_c}) : Tensor({0})),
      weight_grad({out_c, in_c, kernel, kernel}),
      bias_grad(with_bias ? Tensor({out_c}) : Tensor({0})),
      in_c_(in_c), out_c_(out_c), kernel_(kernel), stride_(stride), pad_(pad),
      has_bias_(with_bias) {
    kaiming_init(weight, in_c * kernel * kernel, rng);
}

Tensor Conv2d::forward(const Tensor& x, bool training) {
    if (x.rank() != 4 || x.dim(1) != in_c_)
        throw std::invalid_argument(name_ + ": bad input shape " + x.shape_str());
    kernels::Conv2dShape s{x.dim(0), in_c_, x.dim(2), x.dim(3), out_c_, kernel_,
                           stride_, pad_};
    Tensor y({s.n, s.out_c, s.out_h(), s.out_w()});
    kernels::conv2d_forward(s, x.data(), weight.data(),
                            has_bias_ ? bias.data() : nullptr, y.data(),
                            default_backend());
    if (training) cached_x_ = x;
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    kernels::Conv2dShape s{cached_x_.dim(0), in_c_, cached_x_.dim(2), cached_x_.dim(3),
                           out_c_, kernel_, stride_, pad_};
    kernels::conv2d_backward_params(s, cached_x_.data(), dy.data(), weight_grad.data(),
                                    has_bias_ ? bias_grad.data() : nullptr,
                                    default_backend());
    Tensor dx = Tensor::zeros_like(cached_x_);
    kernels::conv2d_backward_input(s, dy.data(), weight.data(), dx.data(),
                                   default_backend());
    return dx;
}

void Conv2d::collect_params(std::vector<ParamRef>& out) {
    out.push_back({name_ + ".weight", ParamKind::conv_weight, &weight, &weight_grad});
    if (has_bias_)
        out.push_back({name_ + ".bias", ParamKind::bias, &bias, &bias_grad});
}

// ---------- ReLU ----------

Tensor ReLU::forward(const Tensor& x, bool training) {
    Tensor y(x.shape());
    kernels::relu_forward(x.numel(), x.data(), y.data(), default_backend());
    if (training) cached_x_ = x;
    return y;
}

Tensor ReLU::backward(const Tensor& dy) {
    Tensor dx(dy.shape());
    kernels::relu_backward(dy.numel(), cached_x_.data(), dy.data(), dx.data(),
                           default_backend());
    return dx;
}

// ---------- MaxPool2 ----------

Tensor MaxPool2::forward(const Tensor& x, bool) {
    shape_ = {x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
    Tensor y({shape_.n, shape_.c, shape_.out_h(), shape_.out_w()});
    argmax_.assign(static_cast<size_t>(y.numel()), 0);
    kernels::maxpool2_forward(shape_, x.data(), y.data(), argmax_.data(),
                              default_backend());
    return y;
}

Tensor MaxPool2::backward(const Tensor& dy) {
    Tensor dx({shape_.n, shape_.c, shape_.in_h, shape_.in_w});
    kernels::maxpool2_backward(shape_, dy.data(), argmax_.data(), dx.data(),
                               default_backend());
    return dx;
}

// ---------- GlobalAvgPool ----------

Tensor GlobalAvgPool::forward(const Tensor& x, bool) {
    in_shape_ = x.shape();
    Tensor y({x.dim(0), x.dim(1)});
    kernels::global_avgpool_forward(x.dim(0), x.dim(1), x.dim(2) * x.dim(3), x.data(),
                                    y.data(), default_backend());
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
    Tensor dx(in_shape_);
    kernels::global_avgpool_backward(in_shape_[0], in_shape_[1],
                                     in_shape_[2] * in_shape_[3], dy.data(), dx.data(),
                                     default_backend());
    return dx;
}

// ---------- Flatten ----------

Tensor Flatten::forward(const Tensor& x, bool) {
    in_shape_ = x.shape();
    Tensor y = x;
    y.reshape({x.dim(0), x.numel() / x.dim(0)});
    return y;
}

Tensor Flatten::backward(const Tensor& dy) {
    Tensor dx = dy;
    dx.reshape(in_shape_);
    return dx;
}

// ---------- Linear ----------

Linear::Linear(std::string name, int64_t in_f, int64_t out_f, Rng& rng)
    : Layer(std::move(name)),
      weight({out_f, in_f}), bias({out_f}),
      weight_grad({out_f, in_f}), bias_grad({out_f}),
      in_f_(in_f), out_f_(out_f) {
    kaiming_init(weight, in_f, rng);
}

Tensor Linear::forward(const Tensor& x, bool training) {
    if (x.rank() != 2 || x.dim(1) != in_f_)
        throw std::invalid_argument(name_ + ": bad input shape " + x.shape_str());
    Tensor y({x.dim(0), out_f_});
    kernels::linear_forward(x.dim(0), in_f_, out_f_, x.data(), weight.data(),
                            bias.data(), y.data(), default_backend());
    if (training) cached_x_ = x;
    return y;
}

Tensor Linear::backward(const Tensor& dy) {
    kernels::linear_backward_params(cached_x_.dim(0), in_f_, out_f_, cached_x_.data(),
                                    dy.data(), weight_grad.data(), bias_grad.data(),
                                    default_backend());
    Tensor dx({cached_x_.dim(0), in_f_});
    kernels::linear_backward_input(cached_x_.dim(0), in_f_, out_f_, dy.data(),
                                   weight.data(), dx.data(), default_backend());
    return dx;
}

void Linear::collect_params(std::vector<ParamRef>& out) {
    out.push_back({name_ + ".weight", ParamKind::fc_weight, &weight, &weight_grad});
    out.push_back({name_ + ".bias", ParamKind::bias, &bias, &bias_grad});
}

// ---------- ResidualBlock ----------

ResidualBlock::ResidualBlock(std::string name, int64_t in_c, int64_t out_c,
                             int64_t stride, Rng& rng)
    : Layer(name) {
    conv1_ = std::make_unique<Conv2d>(name + ".conv1", in_c, out_c, 3, stride, 1,
                                      /*bias=*/false, rng);
    bn1_ = std::make_unique<BatchNorm2d>(name + ".bn1", out_c);
    relu1_ = std::make_unique<ReLU>(name + ".relu1");
    conv2_ = std::make_unique<Conv2d>(name + ".conv2", out_c, out_c, 3, 1, 1,
                                      /*bias=*/false, rng);
    bn2_ = std::make_unique<BatchNorm2d>(name + ".bn2", out_c);
    if (stride != 1 || in_c != out_c) {
        proj_ = std::make_unique<Conv2d>(name + ".proj", in_c, out_c, 1, stride, 0,
                                         /*bias=*/false, rng);
        proj_bn_ = std::make_unique<BatchNorm2d>(name + ".proj_bn", out_c);
    }
}

Tensor ResidualBlock::forward(const Tensor& x, bool training) {
    Tensor h = bn1_->forward(conv1_->forward(x, training), training);
    h = relu1_->forward(h, training);
    h = bn2_->forward(conv2_->forward(h, training), training);
    Tensor s = proj_ ? proj_bn_->forward(proj_->forward(x, training), training) : x;
    for (int64_t i = 0; i < h.numel(); ++i) h[i] += s[i];
    if (training) cached_sum_ = h;
    Tensor y(h.shape());
    kernels::relu_forward(h.numel(), h.data(), y.data(), default_backend());
    return y;
}

Tensor ResidualBlock::backward(const Tensor& dy) {
    Tensor dsum(dy.shape());
    kernels::relu_backward(dy.numel(), cached_sum_.data(), dy.data(), dsum.data(),
                           default_backend());
    Tensor dx_main = conv1_->backward(
        bn1_->backward(relu1_->backward(conv2_->backward(bn2_->backward(dsum)))));
    if (proj_) {
        Tensor dx_short = proj_->backward(proj_bn_->backward(dsum));
        for (int64_t i = 0; i < dx_main.numel(); ++i) dx_main[i] += dx_short[i];
    } else {
        for (int64_t i = 0; i < dx_main.numel(); ++i) dx_main[i] += dsum[i];
    }
    return dx_main;
}

void ResidualBlock::collect_params(std::vector<ParamRef>& out) {
    conv1_->collect_params(out);
    bn1_->collect_params(out);
    conv2_->collect_params(out);
    bn2_->collect_params(out);
    if (proj_) {
        proj_->collect_params(out);
        proj_bn_->collect_params(out);
    }
}

}  // namespace forge::nn
