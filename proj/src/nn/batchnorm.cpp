#include <cmath>
#include <stdexcept>

#include "forge/nn/nn.hpp"

namespace forge::nn {

BatchNorm2d::BatchNorm2d(std::string name, int64_t channels, float momentum, float eps)
    : Layer(std::move(name)),
      gain({channels}), bias({channels}),
      gain_grad({channels}), bias_grad({channels}),
      running_mean({channels}), running_var({channels}),
      channels_(channels), momentum_(momentum), eps_(eps) {
    gain.fill(1.0f);
    running_var.fill(1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training) {
    if (x.rank() != 4 || x.dim(1) != channels_)
        throw std::invalid_argument(name_ + ": bad input shape " + x.shape_str());
    const int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
    const int64_t plane = h * w;
    const double count = static_cast<double>(n * plane);
    in_shape_ = x.shape();

    Tensor y(x.shape());
    if (training) {
        cached_xhat_ = Tensor(x.shape());
        inv_std_.assign(static_cast<size_t>(channels_), 0.0f);
#pragma omp parallel for schedule(static)
        for (int64_t c = 0; c < channels_; ++c) {
            double sum = 0.0, sq = 0.0;
            for (int64_t i = 0; i < n; ++i) {
                const float* p = x.data() + (i * channels_ + c) * plane;
                for (int64_t j = 0; j < plane; ++j) {
                    sum += p[j];
                    sq += static_cast<double>(p[j]) * p[j];
                }
            }
            const double mean = sum / count;
            const double var = sq / count - mean * mean;  // biased, as in training
            const float istd = static_cast<float>(1.0 / std::sqrt(var + eps_));
            inv_std_[static_cast<size_t>(c)] = istd;

            running_mean[c] = (1 - momentum_) * running_mean[c] +
                              momentum_ * static_cast<float>(mean);
            // running estimate uses the unbiased variance
            const double unbiased = var * count / (count - 1.0);
            running_var[c] = (1 - momentum_) * running_var[c] +
                             momentum_ * static_cast<float>(unbiased);

            for (int64_t i = 0; i < n; ++i) {
                const float* p = x.data() + (i * channels_ + c) * plane;
                float* xh = cached_xhat_.data() + (i * channels_ + c) * plane;
                float* yp = y.data() + (i * channels_ + c) * plane;
                for (int64_t j = 0; j < plane; ++j) {
                    xh[j] = (p[j] - static_cast<float>(mean)) * istd;
                    yp[j] = gain[c] * xh[j] + bias[c];
                }
            }
        }
    } else {
#pragma omp parallel for schedule(static)
        for (int64_t c = 0; c < channels_; ++c) {
            const float istd = 1.0f / std::sqrt(running_var[c] + eps_);
            const float m = running_mean[c];
            for (int64_t i = 0; i < n; ++i) {
                const float* p = x.data() + (i * channels_ + c) * plane;
                float* yp = y.data() + (i * channels_ + c) * plane;
                for (int64_t j = 0; j < plane; ++j)
                    yp[j] = gain[c] * (p[j] - m) * istd + bias[c];
            }
        }
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
    const int64_t n = in_shape_[0], plane = in_shape_[2] * in_shape_[3];
    const double count = static_cast<double>(n * plane);
    Tensor dx(in_shape_);
#pragma omp parallel for schedule(static)
    for (int64_t c = 0; c < channels_; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int64_t i = 0; i < n; ++i) {
            const float* dyp = dy.data() + (i * channels_ + c) * plane;
            const float* xh = cached_xhat_.data() + (i * channels_ + c) * plane;
            for (int64_t j = 0; j < plane; ++j) {
                sum_dy += dyp[j];
                sum_dy_xhat += static_cast<double>(dyp[j]) * xh[j];
            }
        }
        gain_grad[c] = static_cast<float>(sum_dy_xhat);
        bias_grad[c] = static_cast<float>(sum_dy);

        const float istd = inv_std_[static_cast<size_t>(c)];
        const float g = gain[c];
        const float mean_dy = static_cast<float>(sum_dy / count);
        const float mean_dy_xhat = static_cast<float>(sum_dy_xhat / count);
        for (int64_t i = 0; i < n; ++i) {
            const float* dyp = dy.data() + (i * channels_ + c) * plane;
            const float* xh = cached_xhat_.data() + (i * channels_ + c) * plane;
            float* dxp = dx.data() + (i * channels_ + c) * plane;
            for (int64_t j = 0; j < plane; ++j)
                dxp[j] = g * istd * (dyp[j] - mean_dy - xh[j] * mean_dy_xhat);
        }
    }
    return dx;
}

void BatchNorm2d::collect_params(std::vector<ParamRef>& out) {
    out.push_back({name_ + ".gain", ParamKind::bn_gain, &gain, &gain_grad});
    out.push_back({name_ + ".bias", ParamKind::bn_bias, &bias, &bias_grad});
}

void BatchNorm2d::collect_buffers(std::vector<ParamRef>& out) {
    out.push_back({name_ + ".running_mean", ParamKind::bn_gain, &running_mean, nullptr});
    out.push_back({name_ + ".running_var", ParamKind::bn_gain, &running_var, nullptr});
}

}  // namespace forge::nn
