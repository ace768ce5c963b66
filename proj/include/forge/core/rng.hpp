#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace forge {

/// Deterministic RNG used everywhere keys, masks, or weights are produced.
/// Distributions are implemented by hand on top of mt19937_64 raw draws so
/// that identical seeds give identical streams on any standard library.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    /// Unbiased integer in [0, bound). bound must be > 0.
    uint64_t next_below(uint64_t bound);

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_real();

    /// Standard normal via Box-Muller on two uniform draws.
    double next_normal();

    bool next_bernoulli(double p_true) { return next_real() < p_true; }

    /// Fisher-Yates shuffle, deterministic under the stream.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; used to fan a master seed out to stage seeds.
uint64_t splitmix64(uint64_t x);

/// FNV-1a over a label, for name-keyed seed derivation.
uint64_t fnv1a64(std::string_view s);

/// Stage seed = splitmix64(master ^ fnv1a64(stage)). One master seed
/// reproduces a full run; each stage still gets an independent stream.
uint64_t derive_seed(uint64_t master, std::string_view stage);

}  // namespace forge
