#pragma once

#include <cstdint>

namespace forge::kernels {

/// Every kernel ships in two variants: a plain serial reference and an
/// OpenMP one. The parallel variants split work only across independent
/// output elements and keep each element's accumulation order identical
/// to the reference, so the two backends produce bit-identical results
/// and the whole training loop stays deterministic under any thread
/// count. Tests compare the backends element-for-element; the
/// bench_kernels tool compares their throughput.
enum class Backend { serial, openmp };

Backend default_backend();
void set_default_backend(Backend b);

struct Conv2dShape {
    int64_t n;      // batch
    int64_t in_c, in_h, in_w;
    int64_t out_c;
    int64_t kernel;
    int64_t stride = 1;
    int64_t pad = 0;

    int64_t out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
    int64_t out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
};

// x: [n, in_c, in_h, in_w]; w: [out_c, in_c, k, k]; bias: [out_c] or null.
void conv2d_forward(const Conv2dShape& s, const float* x, const float* w,
                    const float* bias, float* y, Backend be);
void conv2d_backward_input(const Conv2dShape& s, const float* dy, const float* w,
                           float* dx, Backend be);
void conv2d_backward_params(const Conv2dShape& s, const float* x, const float* dy,
                            float* dw, float* dbias, Backend be);

struct Pool2Shape {
    int64_t n, c, in_h, in_w;  // 2x2 window, stride 2; odd tails are dropped
    int64_t out_h() const { return in_h / 2; }
    int64_t out_w() const { return in_w / 2; }
};

// argmax holds the flat input offset of each window maximum (first max wins).
void maxpool2_forward(const Pool2Shape& s, const float* x, float* y,
                      int32_t* argmax, Backend be);
void maxpool2_backward(const Pool2Shape& s, const float* dy, const int32_t* argmax,
                       float* dx, Backend be);

// x: [n, in_f]; w: [out_f, in_f]; bias: [out_f] or null; y: [n, out_f].
void linear_forward(int64_t n, int64_t in_f, int64_t out_f, const float* x,
                    const float* w, const float* bias, float* y, Backend be);
void linear_backward_input(int64_t n, int64_t in_f, int64_t out_f, const float* dy,
                           const float* w, float* dx, Backend be);
void linear_backward_params(int64_t n, int64_t in_f, int64_t out_f, const float* x,
                            const float* dy, float* dw, float* dbias, Backend be);

void relu_forward(int64_t count, const float* x, float* y, Backend be);
void relu_backward(int64_t count, const float* x, const float* dy, float* dx, Backend be);

void global_avgpool_forward(int64_t n, int64_t c, int64_t hw, const float* x,
                            float* y, Backend be);
void global_avgpool_backward(int64_t n, int64_t c, int64_t hw, const float* dy,
                             float* dx, Backend be);

/// Softmax + cross-entropy over logits [n, classes]. Returns mean loss;
/// fills dlogits (scaled by 1/n) when non-null and probs when non-null.
float softmax_xent(int64_t n, int64_t classes, const float* logits,
                   const int32_t* targets, float* dlogits, float* probs, Backend be);

}  // namespace forge::kernels
