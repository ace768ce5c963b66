#include "forge/kernels/kernels.hpp"

namespace forge::kernels {

namespace {

inline void linear_forward_row(int64_t in_f, int64_t out_f, const float* xr,
                               const float* w, const float* bias, float* yr) {
    for (int64_t o = 0; o < out_f; ++o) {
        const float* wr = w + o * in_f;
        float acc = bias ? bias[o] : 0.0f;
        for (int64_t i = 0; i < in_f; ++i) acc += xr[i] * wr[i];
        yr[o] = acc;
    }
}

inline void linear_backward_input_row(int64_t in_f, int64_t out_f, const float* dyr,
                                      const float* w, float* dxr) {
    for (int64_t i = 0; i < in_f; ++i) dxr[i] = 0.0f;
    for (int64_t o = 0; o < out_f; ++o) {
        const float g = dyr[o];
        if (g == 0.0f) continue;
        const float* wr = w + o * in_f;
        for (int64_t i = 0; i < in_f; ++i) dxr[i] += g * wr[i];
    }
}

inline void linear_backward_params_row(int64_t n, int64_t in_f, const float* x,
                                       const float* dy, int64_t out_f, float* dwr,
                                       float* db, int64_t o) {
    for (int64_t i = 0; i < in_f; ++i) dwr[i] = 0.0f;
    float acc = 0.0f;
    for (int64_t r = 0; r < n; ++r) {
        const float g = dy[r * out_f + o];
        acc += g;
        if (g == 0.0f) continue;
        const float* xr = x + r * in_f;
        for (int64_t i = 0; i < in_f; ++i) dwr[i] += g * xr[i];
    }
    if (db) db[o] = acc;
}

}  // namespace

void linear_forward(int64_t n, int64_t in_f, int64_t out_f, const float* x,
                    const float* w, const float* bias, float* y, Backend be) {
    if (be == Backend::openmp) {
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < n; ++r)
            linear_forward_row(in_f, out_f, x + r * in_f, w, bias, y + r * out_f);
    } else {
        for (int64_t r = 0; r < n; ++r)
            linear_forward_row(in_f, out_f, x + r * in_f, w, bias, y + r * out_f);
    }
}

void linear_backward_input(int64_t n, int64_t in_f, int64_t out_f, const float* dy,
                           const float* w, float* dx, Backend be) {
    if (be == Backend::openmp) {
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < n; ++r)
            linear_backward_input_row(in_f, out_f, dy + r * out_f, w, dx + r * in_f);
    } else {
        for (int64_t r = 0; r < n; ++r)
            linear_backward_input_row(in_f, out_f, dy + r * out_f, w, dx + r * in_f);
    }
}

void linear_backward_params(int64_t n, int64_t in_f, int64_t out_f, const float* x,
                            const float* dy, float* dw, float* dbias, Backend be) {
    if (be == Backend::openmp) {
#pragma omp parallel for schedule(static)
        for (int64_t o = 0; o < out_f; ++o)
            linear_backward_params_row(n, in_f, x, dy, out_f, dw + o * in_f, dbias, o);
    } else {
        for (int64_t o = 0; o < out_f; ++o)
            linear_backward_params_row(n, in_f, x, dy, out_f, dw + o * in_f, dbias, o);
    }
}

}  // namespace forge::kernels
