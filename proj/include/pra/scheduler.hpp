#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "pra/channel.hpp"
#include "pra/planner.hpp"

namespace pra {

// Cumulative bits the plan promises each user by the end of each frame:
// Lambda(k, J) = sum_{j <= J} s_j^k * Rhat_j^k * frame_duration.
class ProgressTable {
public:
    ProgressTable() = default;

    ProgressTable(const Plan& plan, const std::vector<UserPlanInput>& inputs,
                  const TimeGrid& grid) {
        const int tf = grid.frames_per_window;
        lambda_.assign(plan.user_ids.size(), std::vector<double>(tf + 1, 0.0));
        for (std::size_t k = 0; k < plan.user_ids.size(); ++k) {
            double acc = 0.0;
            for (int j = 0; j < tf; ++j) {
                acc += plan.fractions[k][j] * inputs[k].predicted_rates_bps[j] *
                       grid.frame_duration_s;
                lambda_[k][static_cast<std::size_t>(j) + 1] = acc;
            }
        }
    }

    // target through the END of `frame` (0-based); frame = -1 gives 0
    double target(std::size_t user, int frame) const {
        if (lambda_.empty() || frame < 0) return 0.0;
        const auto& l = lambda_[user];
        const std::size_t idx = std::min(static_cast<std::size_t>(frame) + 1, l.size() - 1);
        return l[idx];
    }

    std::size_t users() const { return lambda_.size(); }

private:
    std::vector<std::vector<double>> lambda_;
};

// Users in a BS's coverage that are strictly behind the transmission progress
// target of the current frame.
inline std::vector<int> lagging_set(std::span<const int> coverage, int frame,
                                    const ProgressTable& progress,
                                    std::span<const double> delivered_bits) {
    std::vector<int> out;
    for (int k : coverage)
        if (progress.target(static_cast<std::size_t>(k), frame) - delivered_bits[k] > 0.0)
            out.push_back(k);
    return out;
}

// Max-instantaneous-rate selection among lagging users, restricted to those the
// plan scheduled in this frame (s > 0) or that carry catch-up debt. Debt
// holders outrank plan-only candidates. Returns -1 when no one is eligible.
inline int select_user(std::span<const int> lagging, std::span<const double> inst_rate_bps,
                       std::span<const double> plan_fraction,
                       std::span<const std::uint8_t> has_debt) {
    int best = -1;
    bool best_debt = false;
    double best_rate = -1.0;
    for (int k : lagging) {
        const bool debt = has_debt[k] != 0;
        if (!(debt || plan_fraction[k] > 0.0)) continue;
        const double r = inst_rate_bps[k];
        if (best < 0 || (debt && !best_debt) ||
            (debt == best_debt && (r > best_rate || (r == best_rate && k < best)))) {
            best = k;
            best_debt = debt;
            best_rate = r;
        }
    }
    return best;
}

// Shortfall against the progress target at a frame boundary; served with
// priority at the start of the next frame.
inline std::vector<double> catch_up(int frame_just_ended, const ProgressTable& progress,
                                    std::span<const double> delivered_bits) {
    std::vector<double> debt(delivered_bits.size(), 0.0);
    for (std::size_t k = 0; k < delivered_bits.size(); ++k) {
        const double short_by = progress.target(k, frame_just_ended) - delivered_bits[k];
        if (short_by > 0.0) debt[k] = short_by;
    }
    return debt;
}

// Non-predictive baseline: highest instantaneous rate among covered users with
// bits still pending.
inline int baseline_best_effort(std::span<const int> coverage,
                                std::span<const double> inst_rate_bps,
                                std::span<const double> remaining_bits) {
    int best = -1;
    double best_rate = -1.0;
    for (int k : coverage) {
        if (remaining_bits[k] <= 0.0) continue;
        if (inst_rate_bps[k] > best_rate || (inst_rate_bps[k] == best_rate && best >= 0 && k < best)) {
            best = k;
            best_rate = inst_rate_bps[k];
        }
    }
    return best;
}

// Non-predictive QoS baseline: earliest playout deadline, then most remaining
// bits, then lowest user id.
inline int baseline_earliest_deadline(std::span<const int> coverage,
                                      std::span<const int> next_deadline_frame,
                                      std::span<const double> remaining_bits) {
    int best = -1;
    for (int k : coverage) {
        if (remaining_bits[k] <= 0.0) continue;
        if (best < 0) { best = k; continue; }
        if (next_deadline_frame[k] != next_deadline_frame[best]) {
            if (next_deadline_frame[k] < next_deadline_frame[best]) best = k;
        } else if (remaining_bits[k] != remaining_bits[best]) {
            if (remaining_bits[k] > remaining_bits[best]) best = k;
        } else if (k < best) {
            best = k;
        }
    }
    return best;
}

// CSI-free execution of one frame of the plan: contiguous slot blocks sized
// round(s * T_s) in user-id order, with the rounding remainder absorbed by the
// last scheduled user. Entries of -1 mark idle slots.
inline std::vector<int> sequential_no_csi(std::span<const std::pair<int, double>> user_fractions,
                                          int slots_per_frame) {
    std::vector<int> owner(static_cast<std::size_t>(slots_per_frame), -1);
    double total_frac = 0.0;
    std::vector<std::pair<int, double>> active;
    for (const auto& [k, s] : user_fractions)
        if (s > 0.0) {
            active.emplace_back(k, s);
            total_frac += s;
        }
    if (active.empty()) return owner;
    std::sort(active.begin(), active.end());
    const int total_slots =
        std::min(slots_per_frame, static_cast<int>(std::lround(total_frac * slots_per_frame)));
    int used = 0;
    for (std::size_t i = 0; i < active.size(); ++i) {
        int len;
        if (i + 1 == active.size()) len = total_slots - used;
        else len = static_cast<int>(std::lround(active[i].second * slots_per_frame));
        len = std::clamp(len, 0, slots_per_frame - used);
        for (int t = 0; t < len; ++t) owner[static_cast<std::size_t>(used + t)] = active[i].first;
        used += len;
    }
    return owner;
}

// Frame-boundary playback bookkeeping for one user. Segments start only at
// frame boundaries and only once fully delivered; waiting for an undelivered
// segment accrues stalling.
class PlaybackTracker {
public:
    PlaybackTracker() = default;

    // prefix_bits[i] = bits required before segment i (0-based) can play,
    // i.e. cumulative size of segments 0..i.
    PlaybackTracker(std::vector<double> prefix_bits, int first_play_frame, int segment_frames)
        : prefix_bits_(std::move(prefix_bits)),
          due_frame_(first_play_frame),
          segment_frames_(segment_frames) {}

    // Call once per frame in increasing order with bits delivered through the
    // end of the previous frame.
    void on_frame_start(int frame, double delivered_bits) {
        if (finished() || frame < due_frame_) return;
        const double need = prefix_bits_[static_cast<std::size_t>(next_segment_)];
        if (delivered_bits >= need - 1e-9 * std::max(1.0, need)) {
            const int stalled = frame - due_frame_;
            if (stalled > 0) {
                stall_frames_ += stalled;
                ++stall_events_;
                max_single_stall_ = std::max(max_single_stall_, stalled);
            }
            ++next_segment_;
            due_frame_ = frame + segment_frames_;
        }
    }

    // close the books for a user that never finished by the simulation horizon
    void account_unfinished(int horizon_frame) {
        if (finished() || horizon_frame <= due_frame_) return;
        const int stalled = horizon_frame - due_frame_;
        stall_frames_ += stalled;
        ++stall_events_;
        max_single_stall_ = std::max(max_single_stall_, stalled);
        due_frame_ = horizon_frame;
    }

    bool finished() const {
        return next_segment_ >= static_cast<int>(prefix_bits_.size());
    }
    bool stalled_at(int frame) const { return !finished() && frame > due_frame_; }

    // frame at which the next undelivered segment wants to start
    int next_due_frame() const { return due_frame_; }
    int segments_played() const { return next_segment_; }
    int stall_frames() const { return stall_frames_; }
    int stall_events() const { return stall_events_; }
    int max_single_stall_frames() const { return max_single_stall_; }

    // T_1 for a re-plan anchored at `frame`: residual playback of the current
    // segment, or zero when the user is already waiting on a segment.
    int frames_until_next_play(int frame) const {
        return std::max(0, due_frame_ - frame);
    }

    // Cumulative bits a demand-driven (non-predictive) client has requested by
    // `frame`: every segment projected to start within the look-ahead horizon.
    // Overdue segments of a stalled user are all requestable at once.
    double requestable_prefix_bits(int frame, int horizon_frames) const {
        int last = next_segment_ - 1;
        if (!finished() && frame + horizon_frames >= due_frame_)
            last = std::min(static_cast<int>(prefix_bits_.size()) - 1,
                            next_segment_ +
                                (frame + horizon_frames - due_frame_) / segment_frames_);
        return last < 0 ? 0.0 : prefix_bits_[static_cast<std::size_t>(last)];
    }

private:
    std::vector<double> prefix_bits_;
    int due_frame_ = 0;
    int segment_frames_ = 1;
    int next_segment_ = 0;
    int stall_frames_ = 0;
    int stall_events_ = 0;
    int max_single_stall_ = 0;
};

} // namespace pra
