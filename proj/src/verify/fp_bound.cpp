#include <cmath>
#include <stdexcept>

#include "forge/verify/verify.hpp"

namespace forge::verify {

double false_positive_bound(int64_t n_classes, int64_t n_triggers, double threshold) {
    if (n_classes < 2) throw std::invalid_argument("need at least 2 classes");
    if (n_triggers < 1) throw std::invalid_argument("need at least 1 trigger");
    if (threshold <= 0.0 || threshold > 1.0)
        throw std::invalid_argument("threshold must be in (0,1]");

    const int64_t need = static_cast<int64_t>(
        std::ceil(threshold * static_cast<double>(n_triggers) - 1e-12));
    const long double q = 1.0L / static_cast<long double>(n_classes);

    // Exact tail sum over binomial terms; the k=n term seeds a backward
    // multiplicative recurrence, which keeps 1e-90-scale values accurate.
    // term(k) = C(n,k) q^k (1-q)^(n-k); term(k-1) = term(k) * k/(n-k+1) * (1-q)/q.
    long double term = std::pow(q, static_cast<long double>(n_triggers));
    long double tail = term;
    for (int64_t k = n_triggers; k > need; --k) {
        term *= static_cast<long double>(k) / static_cast<long double>(n_triggers - k + 1) *
                (1.0L - q) / q;
        tail += term;
    }
    return static_cast<double>(tail);
}

}  // namespace forge::verify
