#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>

#include "pra/special_functions.hpp"

namespace pra::rng {

// splitmix64 finalizer; bijective with good avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based stream: every value is a pure function of (key, indices),
// so a realization can be queried in any order and is reproducible from
// (seed, domain, indices) alone.
class Stream {
public:
    Stream() = default;
    explicit Stream(std::uint64_t seed, std::uint64_t domain = 0)
        : key_(mix64(mix64(seed) ^ mix64(domain + 0x632be59bd9b4e019ULL))) {}

    Stream substream(std::uint64_t domain) const {
        Stream s;
        s.key_ = mix64(key_ ^ mix64(domain + 0x9e3779b97f4a7c15ULL));
        return s;
    }

    std::uint64_t bits(std::uint64_t i0, std::uint64_t i1 = 0, std::uint64_t i2 = 0,
                       std::uint64_t i3 = 0) const noexcept {
        std::uint64_t h = key_;
        h = mix64(h ^ (i0 + 0xc2b2ae3d27d4eb4fULL));
        h = mix64(h ^ (i1 + 0x165667b19e3779f9ULL));
        h = mix64(h ^ (i2 + 0x27d4eb2f165667c5ULL));
        h = mix64(h ^ (i3 + 0x85ebca6b2e4ae35fULL));
        return h;
    }

    // Uniform draw in the open interval (0,1); never exactly 0 or 1, so it is
    // always safe under log() and normal_quantile().
    double uniform(std::uint64_t i0, std::uint64_t i1 = 0, std::uint64_t i2 = 0,
                   std::uint64_t i3 = 0) const noexcept {
        return (static_cast<double>(bits(i0, i1, i2, i3) >> 11) + 0.5) * 0x1p-53;
    }

private:
    std::uint64_t key_ = 0;
};

// Sequential adapter over a Stream; operator() yields the next uniform.
class Sequence {
public:
    Sequence() = default;
    explicit Sequence(Stream s) : stream_(s) {}
    Sequence(std::uint64_t seed, std::uint64_t domain) : stream_(seed, domain) {}

    double operator()() noexcept { return stream_.uniform(n_++); }
    std::uint64_t next_bits() noexcept { return stream_.bits(n_++); }

private:
    Stream stream_;
    std::uint64_t n_ = 0;
};

template <class S>
concept UniformSource = requires(S s) {
    { s() } -> std::convertible_to<double>;
};

inline double normal_from_uniform(double u) { return normal_quantile(u); }

// Gaussian truncated to [0, inf) via inverse CDF; exactly one uniform consumed.
inline double truncated_normal_nonneg(double mean, double sd, double u) {
    if (sd <= 0.0) return mean < 0.0 ? 0.0 : mean;
    const double p0 = normal_cdf(-mean / sd);
    return mean + sd * normal_quantile(p0 + u * (1.0 - p0));
}

inline double exponential_from_uniform(double u) { return -std::log(u); }

// Gamma(shape n, scale 1) for integer shape: sum of n unit exponentials.
template <UniformSource S>
double gamma_int(int shape, S& src) {
    double sum = 0.0;
    int remaining = shape;
    while (remaining > 0) {
        // batch as -log of a product to save log() calls; 16 uniforms keep the
        // product well above double underflow
        const int batch = remaining < 16 ? remaining : 16;
        double prod = 1.0;
        for (int i = 0; i < batch; ++i) prod *= src();
        sum -= std::log(prod);
        remaining -= batch;
    }
    return sum;
}

} // namespace pra::rng
