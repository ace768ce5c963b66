#include "forge/core/rng.hpp"

#include <cmath>

namespace forge {

uint64_t Rng::next_below(uint64_t bound) {
    // Rejection sampling over the top range to stay unbiased.
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t v;
    do {
        v = engine_();
    } while (v >= limit);
    return v % bound;
}

double Rng::next_real() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::next_normal() {
    double u1 = next_real();
    double u2 = next_real();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t derive_seed(uint64_t master, std::string_view stage) {
    return splitmix64(master ^ fnv1a64(stage));
}

}  // namespace forge
