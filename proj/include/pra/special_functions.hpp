#pragma once

#include <cmath>
#include <stdexcept>

namespace pra {

inline constexpr double euler_gamma = 0.57721566490153286060651209;
inline constexpr double pi_sq_over_6 = 1.64493406684822643647241516;

// digamma at positive integer arguments: psi(n) = -gamma + H_{n-1}.
inline double digamma_int(int n) {
    if (n < 1) throw std::domain_error("digamma_int: argument must be >= 1");
    double h = 0.0;
    for (int i = 1; i < n; ++i) h += 1.0 / i;
    return h - euler_gamma;
}

// trigamma at positive integer arguments: psi'(n) = pi^2/6 - sum_{i<n} 1/i^2.
inline double trigamma_int(int n) {
    if (n < 1) throw std::domain_error("trigamma_int: argument must be >= 1");
    double s = 0.0;
    for (int i = 1; i < n; ++i) s += 1.0 / (static_cast<double>(i) * i);
    return pi_sq_over_6 - s;
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

// Inverse standard normal CDF. Acklam's rational approximation refined by
// one Halley step, good to ~1e-15 over (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("normal_quantile: p must be in (0,1)");

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};

    constexpr double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement against the forward CDF.
    const double e = normal_cdf(x) - p;
    const double u = e * 2.50662827463100050242 * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

} // namespace pra
