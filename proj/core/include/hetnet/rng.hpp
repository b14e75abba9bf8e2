#pragma once

#include <cstdint>

namespace hetnet {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014): a bijective 64-bit mix.
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   z =  z ^ (z >> 31)
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// Derives an independent stream key from a base seed and a stream index
/// (replication number, node index, ...).
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return splitmix64_mix(splitmix64_mix(base) + (index + 1) * kGoldenGamma);
}

/// Counter-based generator: the i-th output is splitmix64_mix(key + (i+1)*gamma).
/// Outputs depend only on (key, counter), so every stream is reproducible on any
/// platform and can be positioned with `seek`.
class CounterRng {
public:
    explicit constexpr CounterRng(std::uint64_t key) noexcept : key_(key) {}

    constexpr std::uint64_t next_u64() noexcept { return splitmix64_mix(key_ + (++counter_) * kGoldenGamma); }

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    constexpr double uniform_open() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on [0, 1).
    constexpr double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (lo, hi).
    constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform_open(); }

    /// Uniform integer in [0, bound) by rejection (bound > 0).
    std::uint64_t below(std::uint64_t bound) noexcept;

    constexpr std::uint64_t counter() const noexcept { return counter_; }
    constexpr void seek(std::uint64_t counter) noexcept { counter_ = counter; }

private:
    std::uint64_t key_;
    std::uint64_t counter_{0};
};

/// Poisson variate. Rates below 30 use the exponential-product (multiplication)
/// method; larger rates use Hoermann's PTRS transformed rejection.
std::uint64_t sample_poisson(CounterRng& rng, double rate);

}  // namespace hetnet
