#include "forge/kernels/kernels.hpp"

namespace forge::kernels {

namespace {

inline void maxpool2_forward_one(const Pool2Shape& s, const float* x, float* y,
                                 int32_t* argmax, int64_t n, int64_t c) {
    const int64_t oh_n = s.out_h(), ow_n = s.out_w();
    const int64_t plane = s.in_h * s.in_w;
    const float* xp = x + (n * s.c + c) * plane;
    float* yp = y + (n * s.c + c) * oh_n * ow_n;
    int32_t* ap = argmax + (n * s.c + c) * oh_n * ow_n;
    for (int64_t oh = 0; oh < oh_n; ++oh) {
        for (int64_t ow = 0; ow < ow_n; ++ow) {
            const int64_t ih = oh * 2, iw = ow * 2;
            int64_t best = ih * s.in_w + iw;
            float bv = xp[best];
            const int64_t cand[3] = {ih * s.in_w + iw + 1, (ih + 1) * s.in_w + iw,
                                     (ih + 1) * s.in_w + iw + 1};
            for (int64_t idx : cand) {
                if (xp[idx] > bv) {  // strict: first max wins on ties
                    bv = xp[idx];
                    best = idx;
                }
            }
            yp[oh * ow_n + ow] = bv;
            ap[oh * ow_n + ow] = static_cast<int32_t>(best);
        }
    }
}

}  // namespace

void maxpool2_forward(const Pool2Shape& s, const float* x, float* y,
                      int32_t* argmax, Backend be) {
    if (be == Backend::openmp) {
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t n = 0; n < s.n; ++n)
            for (int64_t c = 0; c < s.c; ++c)
                maxpool2_forward_one(s, x, y, argmax, n, c);
    } else {
        for (int64_t n = 0; n < s.n; ++n)
            for (int64_t c = 0; c < s.c; ++c)
                maxpool2_forward_one(s, x, y, argmax, n, c);
    }
}

namespace {

inline void maxpool2_backward_one(const Pool2Shape& s, const float* dy,
                                  const int32_t* argmax, float* dx, int64_t n, int64_t c) {
    const int64_t oh_n = s.out_h(), ow_n = s.out_w();
    const int64_t plane = s.in_h * s.in_w;
    const float* dyp = dy + (n * s.c + c) * oh_n * ow_n;
    const int32_t* ap = argmax + (n * s.c + c) * oh_n * ow_n;
    float* dxp = dx + (n * s.c + c) * plane;
    for (int64_t i = 0; i < plane; ++i) dxp[i] = 0.0f;
    for (int64_t o = 0; o < oh_n * ow_n; ++o) dxp[ap[o]] += dyp[o];
}

}  // namespace

void maxpool2_backward(const Pool2Shape& s, const float* dy, const int32_t* argmax,
                       float* dx, Backend be) {
    if (be == Backend::openmp) {
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t n = 0; n < s.n; ++n)
            for (int64_t c = 0; c < s.c; ++c)
                maxpool2_backward_one(s, dy, argmax, dx, n, c);
    } else {
        for (int64_t n = 0; n < s.n; ++n)
            for (int64_t c = 0; c < s.c; ++c)
                maxpool2_backward_one(s, dy, argmax, dx, n, c);
    }
}

void global_avgpool_forward(int64_t n, int64_t c, int64_t hw, const float* x,
                            float* y, Backend be) {
    const float inv = 1.0f / static_cast<float>(hw);
    if (be == Backend::openmp) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n * c; ++i) {
            float acc = 0.0f;
            for (int64_t j = 0; j < hw; ++j) acc += x[i * hw + j];
            y[i] = acc * inv;
        }
    } else {
        for (int64_t i = 0; i < n * c; ++i) {
            float acc = 0.0f;
            for (int64_t j = 0; j < hw; ++j) acc += x[i * hw + j];
            y[i] = acc * inv;
        }
    }
}

void global_avgpool_backward(int64_t n, int64_t c, int64_t hw, const float* dy,
                             float* dx, Backend be) {
    const float inv = 1.0f / static_cast<float>(hw);
    if (be == Backend::openmp) {
#pragma omp parallel for schedule(static)
        for (int64_t i = 0; i < n * c; ++i)
            for (int64_t j = 0; j < hw; ++j) dx[i * hw + j] = dy[i] * inv;
    } else {
        for (int64_t i = 0; i < n * c; ++i)
            for (int64_t j = 0; j < hw; ++j) dx[i * hw + j] = dy[i] * inv;
    }
}

}  // namespace forge::kernels
