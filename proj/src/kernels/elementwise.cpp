#include "forge/kernels/kernels.hpp"

#include <cmath>
#include <vector>

namespace forge::kernels {

void relu_forward(int64_t count, const float* x, float* y, Backend be) {
    if (be == Backend::openmp) {
#pragma omp parallel for simd schedule(static)
        for (int64_t i = 0; i < count; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
    } else {
        for (int64_t i = 0; i < count; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
    }
}

void relu_backward(int64_t count, const float* x, const float* dy, float* dx, Backend be) {
    if (be == Backend::openmp) {
#pragma omp parallel for simd schedule(static)
        for (int64_t i = 0; i < count; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
    } else {
        for (int64_t i = 0; i < count; ++i) dx[i] = x[i] > 0.0f ? dy[i] : 0.0f;
    }
}

namespace {

inline double softmax_xent_row(int64_t classes, const float* logits, int32_t target,
                               float* dlogits, float* probs, float inv_n) {
    float mx = logits[0];
    for (int64_t k = 1; k < classes; ++k)
        if (logits[k] > mx) mx = logits[k];
    double denom = 0.0;
    for (int64_t k = 0; k < classes; ++k) denom += std::exp(static_cast<double>(logits[k] - mx));
    const double log_denom = std::log(denom);
    const double loss = -(static_cast<double>(logits[target] - mx) - log_denom);
    for (int64_t k = 0; k < classes; ++k) {
        const double p = std::exp(static_cast<double>(logits[k] - mx) - log_denom);
        if (probs) probs[k] = static_cast<float>(p);
        if (dlogits)
            dlogits[k] = static_cast<float>((p - (k == target ? 1.0 : 0.0)) * inv_n);
    }
    return loss;
}

}  // namespace

float softmax_xent(int64_t n, int64_t classes, const float* logits,
                   const int32_t* targets, float* dlogits, float* probs, Backend be) {
    // Per-row losses land in a buffer and are summed in index order, so the
    // scalar matches the serial backend bit-for-bit.
    std::vector<double> row_loss(static_cast<size_t>(n));
    const float inv_n = 1.0f / static_cast<float>(n);
    if (be == Backend::openmp) {
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < n; ++r)
            row_loss[r] = softmax_xent_row(classes, logits + r * classes, targets[r],
                                           dlogits ? dlogits + r * classes : nullptr,
                                           probs ? probs + r * classes : nullptr, inv_n);
    } else {
        for (int64_t r = 0; r < n; ++r)
            row_loss[r] = softmax_xent_row(classes, logits + r * classes, targets[r],
                                           dlogits ? dlogits + r * classes : nullptr,
                                           probs ? probs + r * classes : nullptr, inv_n);
    }
    double total = 0.0;
    for (double v : row_loss) total += v;
    return static_cast<float>(total / static_cast<double>(n));
}

}  // namespace forge::kernels
