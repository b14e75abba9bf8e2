#include "hetnet/rng.hpp"

#include <cmath>

namespace hetnet {

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    for (;;) {
        const auto x = next_u64();
        if (x < limit) return x % bound;
    }
}

namespace {

std::uint64_t poisson_mult(CounterRng& rng, double rate) {
    const double limit = std::exp(-rate);
    std::uint64_t k = 0;
    double prod = rng.uniform_open();
    while (prod > limit) {
        ++k;
        prod *= rng.uniform_open();
    }
    return k;
}

// W. Hoermann, "The transformed rejection method for generating Poisson random
// variables", Insurance: Mathematics and Economics 12 (1993).
std::uint64_t poisson_ptrs(CounterRng& rng, double rate) {
    const double slam = std::sqrt(rate);
    const double loglam = std::log(rate);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        const double u = rng.uniform_open() - 0.5;
        const double v = rng.uniform_open();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
        if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            -rate + k * loglam - std::lgamma(k + 1.0)) {
            return static_cast<std::uint64_t>(k);
        }
    }
}

}  // namespace

std::uint64_t sample_poisson(CounterRng& rng, double rate) {
    if (!(rate > 0.0)) return 0;
    return rate < 30.0 ? poisson_mult(rng, rate) : poisson_ptrs(rng, rate);
}

}  // namespace hetnet
