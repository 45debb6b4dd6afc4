#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pra/special_functions.hpp"

namespace pra::stats {

// Welford accumulator with exact order-independent merging.
class RunningMoments {
public:
    void add(double x) noexcept {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    void merge(const RunningMoments& o) noexcept {
        if (o.n_ == 0) return;
        if (n_ == 0) { *this = o; return; }
        const double d = o.mean_ - mean_;
        const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
        m2_ += o.m2_ + d * d * na * nb / (na + nb);
        mean_ += d * nb / (na + nb);
        n_ += o.n_;
    }

    std::size_t count() const noexcept { return n_; }
    double mean() const noexcept { return mean_; }
    double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_) : 0.0; }
    double sample_variance() const noexcept {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }
    double std_dev() const noexcept { return std::sqrt(variance()); }
    double std_error() const noexcept {
        return n_ > 1 ? std::sqrt(sample_variance() / static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Kolmogorov-Smirnov distance between the standardized sample and N(0,1).
// The input is standardized in place of a copy; degenerate samples return 1.
inline double ks_vs_standard_normal(std::span<const double> sample) {
    if (sample.empty()) throw std::invalid_argument("ks_vs_standard_normal: empty sample");
    RunningMoments m;
    for (double x : sample) m.add(x);
    const double sd = m.std_dev();
    if (sd <= 0.0) return 1.0;

    std::vector<double> z(sample.begin(), sample.end());
    for (double& x : z) x = (x - m.mean()) / sd;
    std::sort(z.begin(), z.end());

    const double n = static_cast<double>(z.size());
    double d = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double cdf = normal_cdf(z[i]);
        d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - cdf));
        d = std::max(d, std::abs(static_cast<double>(i) / n - cdf));
    }
    return d;
}

// Fixed-range density histogram of a standardized sample.
struct Histogram {
    double lo = -5.0;
    double hi = 5.0;
    std::vector<double> density;

    static Histogram standardized(std::span<const double> sample, int bins = 100,
                                  double lo = -5.0, double hi = 5.0) {
        Histogram h;
        h.lo = lo;
        h.hi = hi;
        h.density.assign(static_cast<std::size_t>(bins), 0.0);
        if (sample.empty()) return h;
        RunningMoments m;
        for (double x : sample) m.add(x);
        const double sd = m.std_dev();
        if (sd <= 0.0) return h;
        const double w = (hi - lo) / bins;
        for (double x : sample) {
            const double z = (x - m.mean()) / sd;
            const auto b = static_cast<long>(std::floor((z - lo) / w));
            if (b >= 0 && b < bins) h.density[static_cast<std::size_t>(b)] += 1.0;
        }
        const double norm = 1.0 / (static_cast<double>(sample.size()) * w);
        for (double& v : h.density) v *= norm;
        return h;
    }
};

// Empirical CDF evaluation points: sorted values with cumulative fractions.
inline std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> pts;
    const double n = static_cast<double>(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i + 1 < values.size() && values[i + 1] == values[i]) continue;
        pts.emplace_back(values[i], (static_cast<double>(i) + 1.0) / n);
    }
    return pts;
}

// One-sided sign test: P(X >= wins) for X ~ Binomial(wins+losses, 1/2).
// Ties must be excluded by the caller.
inline double sign_test_p(int wins, int losses) {
    const int n = wins + losses;
    if (n == 0) return 1.0;
    double logp = 0.0;
    // log of C(n,k)/2^n summed for k = wins..n, via stable log-gamma
    double tail = 0.0;
    for (int k = wins; k <= n; ++k) {
        logp = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) -
               n * std::log(2.0);
        tail += std::exp(logp);
    }
    return std::min(tail, 1.0);
}

// Spearman rank correlation (average ranks for ties).
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("spearman_rho: need two equally sized samples");
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < idx.size()) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    RunningMoments mx, my;
    for (double v : rx) mx.add(v);
    for (double v : ry) my.add(v);
    double cov = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i)
        cov += (rx[i] - mx.mean()) * (ry[i] - my.mean());
    const double denom = std::sqrt(mx.variance() * my.variance()) * static_cast<double>(rx.size());
    return denom > 0.0 ? cov / denom : 0.0;
}

} // namespace pra::stats
