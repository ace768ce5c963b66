// Throughput comparison between the serial reference kernels and the
// OpenMP variants. Shapes mirror the training hot paths (lenet5 on
// 28x28, resnet18 stage sizes on 32x32).

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "forge/core/rng.hpp"
#include "forge/kernels/kernels.hpp"

using namespace forge;
using kernels::Backend;

namespace {

std::vector<float> random_vec(int64_t n, Rng& rng) {
    std::vector<float> v(static_cast<size_t>(n));
    for (auto& x : v) x = static_cast<float>(rng.next_normal());
    return v;
}

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double omp_ms) {
    std::printf("%-28s serial %8.2f ms   openmp %8.2f ms   speedup %.2fx\n", name,
                serial_ms, omp_ms, serial_ms / omp_ms);
}

void bench_conv(const char* name, kernels::Conv2dShape s, int reps, Rng& rng) {
    auto x = random_vec(s.n * s.in_c * s.in_h * s.in_w, rng);
    auto w = random_vec(s.out_c * s.in_c * s.kernel * s.kernel, rng);
    auto b = random_vec(s.out_c, rng);
    std::vector<float> y(static_cast<size_t>(s.n * s.out_c * s.out_h() * s.out_w()));
    std::vector<float> dx(x.size()), dw(w.size()), db(b.size());

    char label[64];
    std::snprintf(label, sizeof label, "%s fwd", name);
    report(label,
           time_ms([&] { conv2d_forward(s, x.data(), w.data(), b.data(), y.data(),
                                        Backend::serial); }, reps),
           time_ms([&] { conv2d_forward(s, x.data(), w.data(), b.data(), y.data(),
                                        Backend::openmp); }, reps));
    std::snprintf(label, sizeof label, "%s bwd_in", name);
    report(label,
           time_ms([&] { conv2d_backward_input(s, y.data(), w.data(), dx.data(),
                                               Backend::serial); }, reps),
           time_ms([&] { conv2d_backward_input(s, y.data(), w.data(), dx.data(),
                                               Backend::openmp); }, reps));
    std::snprintf(label, sizeof label, "%s bwd_par", name);
    report(label,
           time_ms([&] { conv2d_backward_params(s, x.data(), y.data(), dw.data(),
                                                db.data(), Backend::serial); }, reps),
           time_ms([&] { conv2d_backward_params(s, x.data(), y.data(), dw.data(),
                                                db.data(), Backend::openmp); }, reps));
}

}  // namespace

int main() {
    std::printf("threads available to OpenMP: %d\n\n", omp_get_max_threads());
    Rng rng(7);

    using kernels::conv2d_forward;
    bench_conv("conv 64x1x28x28 -> 6c5", {64, 1, 28, 28, 6, 5, 1, 2}, 10, rng);
    bench_conv("conv 64x6x14x14 -> 16c5", {64, 6, 14, 14, 16, 5, 1, 0}, 10, rng);
    bench_conv("conv 64x64x32x32 -> 64c3", {64, 64, 32, 32, 64, 3, 1, 1}, 2, rng);

    {
        const int64_t n = 256, in_f = 400, out_f = 120;
        auto x = random_vec(n * in_f, rng);
        auto w = random_vec(out_f * in_f, rng);
        auto b = random_vec(out_f, rng);
        std::vector<float> y(static_cast<size_t>(n * out_f));
        report("linear 256x400 -> 120",
               time_ms([&] { kernels::linear_forward(n, in_f, out_f, x.data(), w.data(),
                                                     b.data(), y.data(),
                                                     Backend::serial); }, 50),
               time_ms([&] { kernels::linear_forward(n, in_f, out_f, x.data(), w.data(),
                                                     b.data(), y.data(),
                                                     Backend::openmp); }, 50));
    }
    {
        const int64_t count = 1 << 22;
        auto x = random_vec(count, rng);
        std::vector<float> y(static_cast<size_t>(count));
        report("relu 4M",
               time_ms([&] { kernels::relu_forward(count, x.data(), y.data(),
                                                   Backend::serial); }, 20),
               time_ms([&] { kernels::relu_forward(count, x.data(), y.data(),
                                                   Backend::openmp); }, 20));
    }
    return 0;
}
