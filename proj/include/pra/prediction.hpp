#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "pra/channel.hpp"
#include "pra/rng.hpp"
#include "pra/special_functions.hpp"
#include "pra/stats.hpp"

namespace pra {

enum class Dist { Gaussian, Uniform };

// Predicted average residual bandwidth of a frame.
struct BandwidthPrediction {
    double mean_hz = 0.0;   // mean of the predictor
    double std_dev_hz = 0.0;
    Dist dist = Dist::Gaussian;

    void validate() const {
        if (!(mean_hz > 0.0) || std_dev_hz < 0.0)
            throw std::invalid_argument("BandwidthPrediction: mean > 0, std_dev >= 0");
        if (dist == Dist::Uniform && std::sqrt(3.0) * std_dev_hz > mean_hz)
            throw std::invalid_argument("BandwidthPrediction: uniform support dips below zero");
    }

    // Draws are clipped at zero; for the default parameters the clip probability
    // is below 1e-6.
    double draw(double u) const {
        double v;
        if (dist == Dist::Gaussian) {
            v = mean_hz + std_dev_hz * normal_quantile(u);
        } else {
            const double hw = std::sqrt(3.0) * std_dev_hz;
            v = mean_hz + hw * (2.0 * u - 1.0);
        }
        return v > 0.0 ? v : 0.0;
    }
};

// Predicted average channel gain of a (user, frame): bounded uncertainty of
// half_width around the mean. The Gaussian variant matches mean and variance
// of the uniform one and is truncated at zero.
struct GainPrediction {
    double mean = 0.0;       // linear gain
    double half_width = 0.0; // delta/2
    Dist dist = Dist::Uniform;

    double delta() const { return 2.0 * half_width; }

    void validate() const {
        if (half_width < 0.0 || !(mean - half_width > 0.0))
            throw std::invalid_argument("GainPrediction: support must stay positive");
    }

    double draw(double u) const {
        if (dist == Dist::Uniform) return mean + half_width * (2.0 * u - 1.0);
        const double sd = half_width / std::sqrt(3.0); // variance delta^2/12
        return rng::truncated_normal_nonneg(mean, sd, u);
    }
};

// True frame-level channel state entering the error definition.
struct TrueFrameState {
    double mean_bandwidth_hz = 0.0; // E{W_{j,t}}
    double gain = 0.0;              // true large-scale gain

    void validate() const {
        if (!(mean_bandwidth_hz > 0.0) || !(gain > 0.0))
            throw std::invalid_argument("TrueFrameState: fields must be positive");
    }
};

struct RateErrorStats {
    double mean = 0.0;         // bit/s
    double variance = 0.0;     // (bit/s)^2
    double mu_hat = 0.0;       // bit/s/Hz
    double sigma_hat_sq = 0.0; // (bit/s/Hz)^2
    bool high_snr_ok = false;
};

// Predicted time-average rate of a frame from drawn predictions:
// W_hat * log2(1 + a_hat * N_t * P_max / sigma^2).
inline double predicted_avg_rate(double bandwidth_hat_hz, double gain_hat,
                                 const RadioParams& radio) {
    if (bandwidth_hat_hz <= 0.0) return 0.0;
    return bandwidth_hat_hz *
           std::log2(1.0 + gain_hat * radio.num_antennas * radio.snr_per_gain());
}

// Applicability of the high-SNR closed forms: the lowest gain in the predicted
// support must keep the average SNR at or above 15 dB.
inline bool high_snr_applicable(const GainPrediction& gain, const RadioParams& radio) {
    return (gain.mean - gain.half_width) * radio.snr_per_gain() >= 31.622776601683793;
}

// Mean spectral efficiency under a uniform gain prediction (high-SNR form).
// The delta -> 0 limit is log2(mean * P/sigma^2) + psi(N_t)/ln 2.
inline double mu_hat(const GainPrediction& gain, const RadioParams& radio) {
    gain.validate();
    constexpr double ln2 = 0.69314718055994530942;
    const double rho = radio.snr_per_gain();
    const double psi = digamma_int(radio.num_antennas);
    const double a = gain.mean;
    const double d = gain.delta();
    if (d == 0.0) return std::log2(a * rho) + psi / ln2;

    const double log_ratio = std::log1p(d / (a - 0.5 * d)); // ln((a+d/2)/(a-d/2))
    return (a * log_ratio + 0.5 * d * std::log((a * a - 0.25 * d * d) * rho * rho) +
            d * (psi - 1.0)) /
           (d * ln2);
}

// Variance of the T_s-slot average spectral efficiency under a uniform gain
// prediction. time_slots == 0 means the T_s -> infinity limit (the fading term
// vanishes).
inline double sigma_hat_sq(const GainPrediction& gain, int time_slots,
                           const RadioParams& radio) {
    gain.validate();
    constexpr double ln2_sq = 0.48045301391820142467;
    const double fading = time_slots > 0
                              ? trigamma_int(radio.num_antennas) / (time_slots * ln2_sq)
                              : 0.0;
    const double a = gain.mean;
    const double d = gain.delta();
    if (d == 0.0) return fading;

    const double u = d / a;
    double bracket; // ((d^2/4 - a^2) ln^2(ratio) + d^2) / d^2
    if (u < 1e-3) {
        // direct evaluation cancels catastrophically for small u
        const double u2 = u * u;
        bracket = (u2 / 12.0) * (1.0 + 7.0 * u2 / 60.0 + 29.0 * u2 * u2 / 1680.0);
    } else {
        const double lr = std::log1p(d / (a - 0.5 * d));
        bracket = ((0.25 * d * d - a * a) * lr * lr) / (d * d) + 1.0;
    }
    return bracket / ln2_sq + fading;
}

// Closed-form mean and variance of the average-rate prediction error
// R_hat - R for one frame.
inline RateErrorStats rate_error_stats(const BandwidthPrediction& bw,
                                       const GainPrediction& gain,
                                       const TrueFrameState& truth, int time_slots,
                                       const RadioParams& radio) {
    bw.validate();
    truth.validate();
    constexpr double ln2 = 0.69314718055994530942;
    RateErrorStats out;
    out.mu_hat = mu_hat(gain, radio);
    out.sigma_hat_sq = sigma_hat_sq(gain, time_slots, radio);
    out.high_snr_ok = high_snr_applicable(gain, radio);

    const double true_se = std::log2(truth.gain * radio.snr_per_gain()) +
                           digamma_int(radio.num_antennas) / ln2;
    out.mean = bw.mean_hz * out.mu_hat - truth.mean_bandwidth_hz * true_se;

    const double w2 = bw.mean_hz * bw.mean_hz;
    const double sw2 = bw.std_dev_hz * bw.std_dev_hz;
    out.variance = (sw2 + w2) * (out.sigma_hat_sq + out.mu_hat * out.mu_hat) -
                   w2 * out.mu_hat * out.mu_hat;
    return out;
}

enum class BiasKind { Bandwidth, Gain };

// Asymptotic impact of a biased prediction on the mean rate error:
// linear in (eta - 1) for bandwidth bias, logarithmic in eta for gain bias.
inline double bias_propagation(BiasKind kind, double eta, const TrueFrameState& truth,
                               const RadioParams& radio) {
    if (!(eta > 0.0)) throw std::domain_error("bias_propagation: eta must be > 0");
    truth.validate();
    if (kind == BiasKind::Bandwidth)
        return truth.mean_bandwidth_hz * std::log2(truth.gain * radio.snr_per_gain()) *
               std::abs(eta - 1.0);
    return truth.mean_bandwidth_hz * std::log2(eta);
}

struct OracleResult {
    double mean = 0.0;
    double variance = 0.0;
    double std_error = 0.0;
    double ks_normal = 1.0; // KS distance of the standardized errors vs N(0,1)
    stats::Histogram histogram;
    std::vector<double> errors; // one entry per sample
};

// Monte Carlo reference for rate_error_stats: samples the error
// R_hat - R directly from the per-slot model. The predicted side draws
// (W_hat, a_hat, fading per slot); the true side evaluates the frame average
// at the true mean bandwidth with its own independent fading draws.
//
// Work is split into fixed-size chunks whose streams are keyed by chunk index,
// so the samples do not depend on the worker count.
inline OracleResult monte_carlo_error_oracle(const BandwidthPrediction& bw,
                                             const GainPrediction& gain,
                                             const TrueFrameState& truth, int time_slots,
                                             const RadioParams& radio, std::size_t samples,
                                             std::uint64_t seed, int workers = 1) {
    if (samples < 1) throw std::invalid_argument("oracle: need at least one sample");
    if (time_slots < 1) throw std::invalid_argument("oracle: time_slots must be >= 1");
    bw.validate();
    gain.validate();
    truth.validate();

    OracleResult out;
    out.errors.resize(samples);
    const double rho = radio.snr_per_gain();
    const int nt = radio.num_antennas;
    const double ts_inv = 1.0 / time_slots;

    constexpr std::size_t chunk_size = 4096;
    const std::size_t num_chunks = (samples + chunk_size - 1) / chunk_size;

    auto run_chunk = [&](std::size_t chunk) {
        rng::Sequence seq(rng::Stream(seed, 0xf17e0000 + chunk));
        const std::size_t begin = chunk * chunk_size;
        const std::size_t end = std::min(samples, begin + chunk_size);
        for (std::size_t s = begin; s < end; ++s) {
            const double w_hat = bw.draw(seq());
            const double a_hat = gain.draw(seq());
            double se_pred = 0.0, se_true = 0.0;
            for (int t = 0; t < time_slots; ++t) {
                se_pred += std::log2(1.0 + a_hat * rng::gamma_int(nt, seq) * rho);
                se_true += std::log2(1.0 + truth.gain * rng::gamma_int(nt, seq) * rho);
            }
            out.errors[s] = w_hat * se_pred * ts_inv -
                            truth.mean_bandwidth_hz * se_true * ts_inv;
        }
    };

    const int nw = std::max(1, workers);
    if (nw == 1 || num_chunks == 1) {
        for (std::size_t c = 0; c < num_chunks; ++c) run_chunk(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        for (int w = 0; w < nw; ++w)
            threads.emplace_back([&] {
                for (std::size_t c; (c = next.fetch_add(1)) < num_chunks;) run_chunk(c);
            });
        for (auto& t : threads) t.join();
    }

    stats::RunningMoments m;
    for (double e : out.errors) m.add(e);
    out.mean = m.mean();
    out.variance = m.variance();
    out.std_error = m.std_error();
    out.ks_normal = stats::ks_vs_standard_normal(out.errors);
    out.histogram = stats::Histogram::standardized(out.errors, 100);
    return out;
}

} // namespace pra
