#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "pra/rng.hpp"

namespace pra {

// Frame/slot discretization of a prediction window.
struct TimeGrid {
    int frames_per_window = 0; // T_f
    int slots_per_frame = 0;   // T_s
    double frame_duration_s = 0.0;
    int segment_frames = 0; // playback duration of one segment, in frames

    double slot_duration_s() const { return frame_duration_s / slots_per_frame; }

    void validate() const {
        if (segment_frames < 1 || frames_per_window < segment_frames)
            throw std::invalid_argument("TimeGrid: need frames_per_window >= segment_frames >= 1");
        if (slots_per_frame < 1) throw std::invalid_argument("TimeGrid: slots_per_frame >= 1");
        if (!(frame_duration_s > 0.0)) throw std::invalid_argument("TimeGrid: frame_duration > 0");
    }
};

struct RadioParams {
    int num_antennas = 8;         // N_t
    double max_bandwidth_hz = 0;  // W_max
    double max_power_w = 0;       // P_max
    double noise_psd_w_hz = 0;    // N_0

    double noise_power_w() const { return noise_psd_w_hz * max_bandwidth_hz; } // sigma^2
    // P_max / sigma^2: multiplying by a linear channel gain yields the SNR that
    // appears inside the rate log.
    double snr_per_gain() const { return max_power_w / noise_power_w(); }

    void validate() const {
        if (num_antennas < 1 || !(max_bandwidth_hz > 0.0) || !(max_power_w > 0.0) ||
            !(noise_psd_w_hz > 0.0))
            throw std::invalid_argument("RadioParams: all parameters must be positive");
    }
};

struct LargeScaleGain {
    double value = 0.0; // linear power gain
};

// Per-slot channel and residual-resource state. Residual transmit power is
// proportional to residual bandwidth.
struct SlotState {
    double small_scale_gain = 0.0;     // ||h||^2
    double residual_bandwidth_hz = 0.0;
    double residual_power_w = 0.0;
};

inline SlotState make_slot(double residual_bandwidth_hz, double small_scale_gain,
                           const RadioParams& radio) {
    if (residual_bandwidth_hz < 0.0 || small_scale_gain < 0.0)
        throw std::invalid_argument("make_slot: negative bandwidth or gain");
    return {small_scale_gain, residual_bandwidth_hz,
            residual_bandwidth_hz * radio.max_power_w / radio.max_bandwidth_hz};
}

// 36.8 + 36.7*log10(d) dB path loss, returned as a linear power gain.
inline double path_loss_gain(double distance_m) {
    if (!(distance_m > 0.0)) throw std::domain_error("path_loss_gain: distance must be > 0");
    return std::pow(10.0, -(36.8 + 36.7 * std::log10(distance_m)) / 10.0);
}

// Scale factor c such that c * path_loss_gain(edge) * P_max / sigma^2 equals the
// target edge SNR. All large-scale gains are multiplied by c afterwards.
inline double calibrate_snr(double edge_distance_m, double target_edge_snr_db,
                            const RadioParams& radio) {
    const double target_linear = std::pow(10.0, target_edge_snr_db / 10.0);
    return target_linear / (path_loss_gain(edge_distance_m) * radio.snr_per_gain());
}

// ||h||^2 for an N_t-antenna i.i.d. Rayleigh vector: Gamma(N_t, 1), so both the
// mean and the variance equal N_t.
template <rng::UniformSource S>
double draw_small_scale(int num_antennas, S& src) {
    if (num_antennas < 1) throw std::domain_error("draw_small_scale: num_antennas >= 1");
    return rng::gamma_int(num_antennas, src);
}

inline double instantaneous_rate(const SlotState& slot, LargeScaleGain gain,
                                 const RadioParams& radio) {
    if (slot.residual_bandwidth_hz <= 0.0) return 0.0; // idle slot
    const double snr = gain.value * slot.small_scale_gain * slot.residual_power_w /
                       (radio.noise_psd_w_hz * slot.residual_bandwidth_hz);
    return slot.residual_bandwidth_hz * std::log2(1.0 + snr);
}

inline double frame_average_rate(std::span<const SlotState> slots, LargeScaleGain gain,
                                 const RadioParams& radio) {
    if (slots.empty()) throw std::domain_error("frame_average_rate: empty slot list");
    double sum = 0.0;
    for (const auto& s : slots) sum += instantaneous_rate(s, gain, radio);
    return sum / static_cast<double>(slots.size());
}

// Per-slot residual bandwidth process: i.i.d. within a frame around the frame
// mean. Modeled as a zero-truncated Gaussian; cv = 0 gives the deterministic
// limit W_{j,t} = mean.
struct ResidualBandwidthModel {
    double mean_hz = 0.0;
    double cv = 0.0;

    double draw(double u) const {
        if (cv <= 0.0) return mean_hz;
        return rng::truncated_normal_nonneg(mean_hz, cv * mean_hz, u);
    }
};

} // namespace pra
