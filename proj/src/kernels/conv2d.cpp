#include "forge/kernels/kernels.hpp"

#include <algorithm>

namespace forge::kernels {

namespace {

// Valid output-column range for one kernel column: iw = ow*stride - pad + kw
// must land in [0, in_w). Bounds are hoisted so the ow loops vectorize.
inline void ow_range(int64_t kw, int64_t stride, int64_t pad, int64_t in_w,
                     int64_t ow_n, int64_t& lo, int64_t& hi) {
    const int64_t shift = pad - kw;
    lo = shift > 0 ? (shift + stride - 1) / stride : 0;
    hi = std::min(ow_n, (in_w - 1 - kw + pad) / stride + 1);
}

inline void conv2d_forward_one(const Conv2dShape& s, const float* x, const float* w,
                               const float* bias, float* y, int64_t n, int64_t oc) {
    const int64_t oh_n = s.out_h(), ow_n = s.out_w();
    const float* xn = x + n * s.in_c * s.in_h * s.in_w;
    const float* wo = w + oc * s.in_c * s.kernel * s.kernel;
    float* yo = y + (n * s.out_c + oc) * oh_n * ow_n;

    const float b = bias ? bias[oc] : 0.0f;
    for (int64_t i = 0; i < oh_n * ow_n; ++i) yo[i] = b;

    for (int64_t oh = 0; oh < oh_n; ++oh) {
        float* yrow = yo + oh * ow_n;
        const int64_t ih_base = oh * s.stride - s.pad;
        const int64_t kh_lo = std::max<int64_t>(0, -ih_base);
        const int64_t kh_hi = std::min(s.kernel, s.in_h - ih_base);
        for (int64_t ic = 0; ic < s.in_c; ++ic) {
            const float* xc = xn + ic * s.in_h * s.in_w;
            const float* wc = wo + ic * s.kernel * s.kernel;
            for (int64_t kh = kh_lo; kh < kh_hi; ++kh) {
                const float* xrow = xc + (ih_base + kh) * s.in_w - s.pad;
                for (int64_t kw = 0; kw < s.kernel; ++kw) {
                    const float wv = wc[kh * s.kernel + kw];
                    int64_t lo, hi;
                    ow_range(kw, s.stride, s.pad, s.in_w, ow_n, lo, hi);
                    if (s.stride == 1) {
                        const float* xk = xrow + kw;
                        for (int64_t ow = lo; ow < hi; ++ow)
                            yrow[ow] += wv * xk[ow];
                    } else {
                        for (int64_t ow = lo; ow < hi; ++ow)
                            yrow[ow] += wv * xrow[ow * s.stride + kw];
                    }
                }
            }
        }
    }
}

inline void conv2d_backward_input_one(const Conv2dShape& s, const float* dy,
                                      const float* w, float* dx, int64_t n) {
    const int64_t oh_n = s.out_h(), ow_n = s.out_w();
    float* dxn = dx + n * s.in_c * s.in_h * s.in_w;
    for (int64_t i = 0; i < s.in_c * s.in_h * s.in_w; ++i) dxn[i] = 0.0f;

    for (int64_t oc = 0; oc < s.out_c; ++oc) {
        const float* dyo = dy + (n * s.out_c + oc) * oh_n * ow_n;
        const float* wo = w + oc * s.in_c * s.kernel * s.kernel;
        for (int64_t oh = 0; oh < oh_n; ++oh) {
            const float* grow = dyo + oh * ow_n;
            const int64_t ih_base = oh * s.stride - s.pad;
            const int64_t kh_lo = std::max<int64_t>(0, -ih_base);
            const int64_t kh_hi = std::min(s.kernel, s.in_h - ih_base);
            for (int64_t ic = 0; ic < s.in_c; ++ic) {
                float* dxc = dxn + ic * s.in_h * s.in_w;
                const float* wc = wo + ic * s.kernel * s.kernel;
                for (int64_t kh = kh_lo; kh < kh_hi; ++kh) {
                    float* dxrow = dxc + (ih_base + kh) * s.in_w - s.pad;
                    for (int64_t kw = 0; kw < s.kernel; ++kw) {
                        const float wv = wc[kh * s.kernel + kw];
                        int64_t lo, hi;
                        ow_range(kw, s.stride, s.pad, s.in_w, ow_n, lo, hi);
                        if (s.stride == 1) {
                            float* dxk = dxrow + kw;
                            for (int64_t ow = lo; ow < hi; ++ow)
                                dxk[ow] += wv * grow[ow];
                        } else {
                            for (int64_t ow = lo; ow < hi; ++ow)
                                dxrow[ow * s.stride + kw] += wv * grow[ow];
                        }
                    }
                }
            }
        }
    }
}

inline void conv2d_backward_params_one(const Conv2dShape& s, const float* x,
                                       const float* dy, float* dw, float* dbias,
                                       int64_t oc) {
    const int64_t oh_n = s.out_h(), ow_n = s.out_w();
    float* dwo = dw + oc * s.in_c * s.kernel * s.kernel;
    for (int64_t i = 0; i < s.in_c * s.kernel * s.kernel; ++i) dwo[i] = 0.0f;
    float db = 0.0f;

    for (int64_t n = 0; n < s.n; ++n) {
        const float* xn = x + n * s.in_c * s.in_h * s.in_w;
        const float* dyo = dy + (n * s.out_c + oc) * oh_n * ow_n;
        for (int64_t oh = 0; oh < oh_n; ++oh) {
            const float* grow = dyo + oh * ow_n;
            for (int64_t ow = 0; ow < ow_n; ++ow) db += grow[ow];
            const int64_t ih_base = oh * s.stride - s.pad;
            const int64_t kh_lo = std::max<int64_t>(0, -ih_base);
            const int64_t kh_hi = std::min(s.kernel, s.in_h - ih_base);
            for (int64_t ic = 0; ic < s.in_c; ++ic) {
                const float* xc = xn + ic * s.in_h * s.in_w;
                float* dwc = dwo + ic * s.kernel * s.kernel;
                for (int64_t kh = kh_lo; kh < kh_hi; ++kh) {
                    const float* xrow = xc + (ih_base + kh) * s.in_w - s.pad;
                    for (int64_t kw = 0; kw < s.kernel; ++kw) {
                        int64_t lo, hi;
                        ow_range(kw, s.stride, s.pad, s.in_w, ow_n, lo, hi);
                        float acc = 0.0f;
                        if (s.stride == 1) {
                            const float* xk = xrow + kw;
                            for (int64_t ow = lo; ow < hi; ++ow)
                                acc += grow[ow] * xk[ow];
                        } else {
                            for (int64_t ow = lo; ow < hi; ++ow)
                                acc += grow[ow] * xrow[ow * s.stride + kw];
                        }
                        dwc[kh * s.kernel + kw] += acc;
                    }
                }
            }
        }
    }
    if (dbias) dbias[oc] = db;
}

}  // namespace

void conv2d_forward(const Conv2dShape& s, const float* x, const float* w,
                    const float* bias, float* y, Backend be) {
    if (be == Backend::openmp) {
#pragma omp parallel for collapse(2) schedule(static)
        for (int64_t n = 0; n < s.n; ++n)
            for (int64_t oc = 0; oc < s.out_c; ++oc)
                conv2d_forward_one(s, x, w, bias, y, n, oc);
    } else {
        for (int64_t n = 0; n < s.n; ++n)
            for (int64_t oc = 0; oc < s.out_c; ++oc)
                conv2d_forward_one(s, x, w, bias, y, n, oc);
    }
}

void conv2d_backward_input(const Conv2dShape& s, const float* dy, const float* w,
                           float* dx, Backend be) {
    if (be == Backend::openmp) {
#pragma omp parallel for schedule(static)
        for (int64_t n = 0; n < s.n; ++n)
            conv2d_backward_input_one(s, dy, w, dx, n);
    } else {
        for (int64_t n = 0; n < s.n; ++n)
            conv2d_backward_input_one(s, dy, w, dx, n);
    }
}

void conv2d_backward_params(const Conv2dShape& s, const float* x, const float* dy,
                            float* dw, float* dbias, Backend be) {
    if (be == Backend::openmp) {
#pragma omp parallel for schedule(static)
        for (int64_t oc = 0; oc < s.out_c; ++oc)
            conv2d_backward_params_one(s, x, dy, dw, dbias, oc);
    } else {
        for (int64_t oc = 0; oc < s.out_c; ++oc)
            conv2d_backward_params_one(s, x, dy, dw, dbias, oc);
    }
}

}  // namespace forge::kernels
