#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "pra/channel.hpp"
#include "pra/config.hpp"
#include "pra/planner.hpp"
#include "pra/prediction.hpp"
#include "pra/rng.hpp"
#include "pra/scheduler.hpp"
#include "pra/stats.hpp"

namespace pra {

enum class Scheme { Proposed, MaxThroughput, MinTime, NonpredQos, NonpredBestEffort };
enum class ServiceType { VoD, VoR };

inline const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Proposed: return "proposed";
        case Scheme::MaxThroughput: return "max-throughput";
        case Scheme::MinTime: return "min-time";
        case Scheme::NonpredQos: return "nonpred-qos";
        case Scheme::NonpredBestEffort: return "nonpred-best-effort";
    }
    return "?";
}

inline bool scheme_is_predictive(Scheme s) {
    return s == Scheme::Proposed || s == Scheme::MaxThroughput || s == Scheme::MinTime;
}

// Full experiment description. Defaults follow the reference setup: six BSs on
// a line alternating idle/busy, three parallel roads, 20-Mbyte videos in ten
// segments, Poisson VoD arrivals over the first 100 frames.
struct ScenarioConfig {
    // topology
    int num_bs = 6;
    double cell_radius_m = 250.0;
    std::vector<double> road_offsets_m{50.0, 100.0, 150.0};
    double idle_bandwidth_hz = 10e6;
    double busy_bandwidth_hz = 1e6;
    std::vector<double> bs_mean_bandwidth_hz; // explicit override; else alternating

    // radio
    RadioParams radio{8, 10e6, 40.0, 3.9810717055349695e-21}; // N0 = -174 dBm/Hz
    double edge_snr_db = 5.0;

    // time
    TimeGrid grid{300, 100, 1.0, 10};

    // video
    int num_segments = 10;
    double video_bits = 20.0 * 8.0e6; // 20 Mbyte

    // arrivals & mobility
    double arrival_rate_per_s = 0.5;
    int arrival_window_frames = 100;
    double speed_min_mps = 10.0;
    double speed_max_mps = 20.0;

    // prediction-error knobs
    double bandwidth_cv = 0.2;     // sigma_What / Wbar
    double gain_delta_ratio = 1.0; // delta / mean predicted gain
    double bandwidth_bias = 1.0;   // eta_W
    double gain_bias = 1.0;        // eta_alpha

    // realized channel
    double slot_bandwidth_cv = 0.2;    // W_{j,t} spread within a frame
    bool deterministic_fading = false; // ||h||^2 fixed at N_t

    // service & scheme
    ServiceType service = ServiceType::VoD;
    int initial_delay_frames = -1;    // VoD T_w; -1 means segment_frames
    int reservation_lead_frames = 10; // VoR lead
    Scheme scheme = Scheme::Proposed;
    bool use_csi = true;

    // experiment
    int trials = 100;
    std::uint64_t seed = 1;
    double waiting_tolerance_s = 20.0;
    int workers = 1;

    int vod_initial_delay() const {
        return initial_delay_frames >= 0 ? initial_delay_frames : grid.segment_frames;
    }

    double strip_length_m() const { return 2.0 * num_bs * cell_radius_m; }
    double bs_position_m(int i) const { return (2.0 * i + 1.0) * cell_radius_m; }

    std::vector<double> bs_bandwidths() const {
        if (!bs_mean_bandwidth_hz.empty()) {
            if (static_cast<int>(bs_mean_bandwidth_hz.size()) != num_bs)
                throw std::invalid_argument("bs_mean_bandwidth list must match num_bs");
            return bs_mean_bandwidth_hz;
        }
        std::vector<double> w(static_cast<std::size_t>(num_bs));
        for (int i = 0; i < num_bs; ++i)
            w[static_cast<std::size_t>(i)] = i % 2 == 0 ? idle_bandwidth_hz : busy_bandwidth_hz;
        return w;
    }

    double segment_bits() const { return video_bits / num_segments; }

    void validate() const {
        grid.validate();
        radio.validate();
        if (num_bs < 1 || !(cell_radius_m > 0.0) || road_offsets_m.empty())
            throw std::invalid_argument("ScenarioConfig: bad topology");
        if (arrival_window_frames < 1 || arrival_window_frames > grid.frames_per_window)
            throw std::invalid_argument("ScenarioConfig: arrival window outside [1, T_f]");
        if (num_segments < 1 || !(video_bits > 0.0))
            throw std::invalid_argument("ScenarioConfig: bad video");
        if (trials < 1) throw std::invalid_argument("ScenarioConfig: trials >= 1");
        if (arrival_rate_per_s < 0.0) throw std::invalid_argument("ScenarioConfig: negative rate");
    }
};

struct UserRecord {
    int id = 0;
    int arrival_frame = 0; // request (VoD) or reservation (VoR) frame, 0-based
    int road = 0;
    double x0_m = 0.0;
    double speed_mps = 0.0;
    int direction = 1;
};

// One trial's sampled world: the user population plus lazily evaluated channel
// and prediction draws. Every draw is a pure function of (seed, trial, indices),
// so realizations are identical across schemes and worker counts.
class TrialWorld {
public:
    TrialWorld(const ScenarioConfig& cfg, int trial)
        : cfg_(&cfg),
          bw_(cfg.bs_bandwidths()),
          arrivals_(rng::Stream(cfg.seed, 0xa441).substream(static_cast<std::uint64_t>(trial))),
          fading_(rng::Stream(cfg.seed, 0xfade).substream(static_cast<std::uint64_t>(trial))),
          slot_bw_(rng::Stream(cfg.seed, 0x51b1).substream(static_cast<std::uint64_t>(trial))),
          pred_bw_(rng::Stream(cfg.seed, 0x9bde).substream(static_cast<std::uint64_t>(trial))),
          pred_gain_(rng::Stream(cfg.seed, 0x96de).substream(static_cast<std::uint64_t>(trial))) {
        gain_scale_ = calibrate_snr(cfg.cell_radius_m, cfg.edge_snr_db, cfg.radio);
        generate_users();
    }

    const std::vector<UserRecord>& users() const { return users_; }
    const ScenarioConfig& config() const { return *cfg_; }

    double user_position_m(const UserRecord& u, int frame) const {
        const double t = (frame - u.arrival_frame) * cfg_->grid.frame_duration_s;
        double x = std::fmod(u.x0_m + u.direction * u.speed_mps * t, cfg_->strip_length_m());
        if (x < 0.0) x += cfg_->strip_length_m();
        return x;
    }

    int serving_bs(const UserRecord& u, int frame) const {
        const double x = user_position_m(u, frame);
        int best = 0;
        double best_d = wrap_dx(x, 0);
        for (int i = 1; i < cfg_->num_bs; ++i) {
            const double d = wrap_dx(x, i);
            if (d < best_d) { best_d = d; best = i; }
        }
        return best;
    }

    // true large-scale gain (calibrated path loss to the serving BS)
    double true_gain(const UserRecord& u, int frame) const {
        const int bs = serving_bs(u, frame);
        return true_gain_to(u, frame, bs);
    }

    double true_gain_to(const UserRecord& u, int frame, int bs) const {
        const double x = user_position_m(u, frame);
        const double off = cfg_->road_offsets_m[static_cast<std::size_t>(u.road)];
        const double d = std::max(1.0, std::hypot(wrap_dx(x, bs), off));
        return gain_scale_ * path_loss_gain(d);
    }

    // realized small-scale gain of a (user, frame, slot)
    double fading_gain(int user, int frame, int slot) const {
        const int nt = cfg_->radio.num_antennas;
        if (cfg_->deterministic_fading) return static_cast<double>(nt);
        double sum = 0.0;
        double prod = 1.0;
        for (int lane = 0; lane < nt; ++lane) {
            prod *= fading_.uniform(static_cast<std::uint64_t>(user),
                                    static_cast<std::uint64_t>(frame),
                                    static_cast<std::uint64_t>(slot),
                                    static_cast<std::uint64_t>(lane));
            if (lane % 16 == 15) { sum -= std::log(prod); prod = 1.0; }
        }
        return sum - std::log(prod);
    }

    // realized residual bandwidth at a (BS, frame, slot)
    double slot_bandwidth(int bs, int frame, int slot) const {
        const double mean = bw_[static_cast<std::size_t>(bs)];
        if (cfg_->slot_bandwidth_cv <= 0.0) return mean;
        const double u = slot_bw_.uniform(static_cast<std::uint64_t>(bs),
                                          static_cast<std::uint64_t>(frame),
                                          static_cast<std::uint64_t>(slot));
        return rng::truncated_normal_nonneg(mean, cfg_->slot_bandwidth_cv * mean, u);
    }

    // predicted average residual bandwidth of a (BS, frame)
    double predicted_bandwidth(int bs, int frame) const {
        const double mean = bw_[static_cast<std::size_t>(bs)];
        if (cfg_->bandwidth_cv <= 0.0 && cfg_->bandwidth_bias == 1.0) return mean;
        const double u = pred_bw_.uniform(static_cast<std::uint64_t>(bs),
                                          static_cast<std::uint64_t>(frame));
        const double v = cfg_->bandwidth_bias * mean +
                         cfg_->bandwidth_cv * mean * normal_quantile(u);
        return std::max(v, 0.0);
    }

    // predicted average gain of a (user, frame) toward the serving BS
    double predicted_gain(const UserRecord& u, int frame) const {
        const double truth = true_gain(u, frame);
        const double mean = cfg_->gain_bias * truth;
        const double delta = cfg_->gain_delta_ratio * mean;
        if (delta <= 0.0) return mean;
        const double v = pred_gain_.uniform(static_cast<std::uint64_t>(u.id),
                                            static_cast<std::uint64_t>(frame));
        return mean + 0.5 * delta * (2.0 * v - 1.0);
    }

    // predicted average rate of a user in an absolute frame
    double predicted_rate(const UserRecord& u, int frame) const {
        const int bs = serving_bs(u, frame);
        return predicted_avg_rate(predicted_bandwidth(bs, frame), predicted_gain(u, frame),
                                  cfg_->radio);
    }

    double realized_rate(const UserRecord& u, int frame, int slot, double slot_bw) const {
        if (slot_bw <= 0.0) return 0.0;
        const double snr = true_gain(u, frame) * fading_gain(u.id, frame, slot) *
                           cfg_->radio.snr_per_gain();
        return slot_bw * std::log2(1.0 + snr);
    }

    double peak_gain() const {
        double min_off = cfg_->road_offsets_m[0];
        for (double o : cfg_->road_offsets_m) min_off = std::min(min_off, o);
        return gain_scale_ * path_loss_gain(std::max(1.0, min_off));
    }

private:
    double wrap_dx(double x, int bs) const {
        const double L = cfg_->strip_length_m();
        double dx = std::abs(x - cfg_->bs_position_m(bs));
        return std::min(dx, L - dx);
    }

    void generate_users() {
        rng::Sequence seq(arrivals_);
        const double lambda = cfg_->arrival_rate_per_s;
        const double window_s = cfg_->arrival_window_frames * cfg_->grid.frame_duration_s;
        double t = 0.0;
        int id = 0;
        if (lambda > 0.0) {
            for (;;) {
                t += rng::exponential_from_uniform(seq()) / lambda;
                if (t >= window_s) break;
                UserRecord u;
                u.id = id++;
                u.arrival_frame = static_cast<int>(t / cfg_->grid.frame_duration_s);
                u.road = static_cast<int>(seq() * cfg_->road_offsets_m.size());
                u.road = std::min(u.road, static_cast<int>(cfg_->road_offsets_m.size()) - 1);
                u.x0_m = seq() * cfg_->strip_length_m();
                u.speed_mps = cfg_->speed_min_mps +
                              seq() * (cfg_->speed_max_mps - cfg_->speed_min_mps);
                u.direction = seq() < 0.5 ? -1 : 1;
                users_.push_back(u);
            }
        }
    }

    const ScenarioConfig* cfg_;
    std::vector<double> bw_;
    rng::Stream arrivals_, fading_, slot_bw_, pred_bw_, pred_gain_;
    double gain_scale_ = 1.0;
    std::vector<UserRecord> users_;
};

struct QosRecord {
    int trial = 0;
    int user_id = 0;
    double stall_time_s = 0.0;
    int stall_count = 0;
    double max_single_stall_s = 0.0;
    double initial_delay_s = 0.0;
    bool satisfied = false;
    bool finished = true;

    double total_waiting_s() const { return initial_delay_s + stall_time_s; }
};

struct TrialSummary {
    std::vector<QosRecord> users;
    bool degraded = false;   // planner overload fallback engaged
    bool unfinished = false; // horizon reached with pending playback
    int replans = 0;

    double mean_total_stall_s() const {
        if (users.empty()) return 0.0;
        double s = 0.0;
        for (const auto& u : users) s += u.stall_time_s;
        return s / static_cast<double>(users.size());
    }
};

struct QosReport {
    std::vector<QosRecord> users; // pooled over trials
    int trials = 0;
    int degraded_trials = 0;

    double mean_total_stall_s() const {
        if (users.empty()) return 0.0;
        double s = 0.0;
        for (const auto& u : users) s += u.stall_time_s;
        return s / static_cast<double>(users.size());
    }

    double satisfaction_fraction() const {
        if (users.empty()) return 1.0;
        std::size_t n = 0;
        for (const auto& u : users) n += u.satisfied ? 1 : 0;
        return static_cast<double>(n) / static_cast<double>(users.size());
    }
};

// Executes one Monte Carlo trial of the configured scheme.
class TrialRunner {
public:
    TrialRunner(const ScenarioConfig& cfg, int trial)
        : cfg_(cfg), trial_(trial), world_(cfg, trial) {}

    TrialSummary run() {
        const auto& users = world_.users();
        const int n = static_cast<int>(users.size());
        summary_.users.clear();
        if (n == 0) return summary_;

        delivered_.assign(n, 0.0);
        audit_bound_.assign(n, 0.0);
        trackers_.clear();
        active_.assign(n, false);
        unplanned_.assign(n, false);

        std::vector<double> prefix(static_cast<std::size_t>(cfg_.num_segments));
        for (int i = 0; i < cfg_.num_segments; ++i)
            prefix[static_cast<std::size_t>(i)] = cfg_.segment_bits() * (i + 1);

        for (int k = 0; k < n; ++k) {
            const int first_play =
                users[k].arrival_frame + (cfg_.service == ServiceType::VoD
                                              ? cfg_.vod_initial_delay()
                                              : cfg_.reservation_lead_frames);
            trackers_.emplace_back(prefix, first_play, cfg_.grid.segment_frames);
        }

        const int last_arrival = users.back().arrival_frame;
        const int horizon = last_arrival + 20 * cfg_.grid.frames_per_window;

        int next_arrival_idx = 0;
        for (int frame = users.front().arrival_frame; frame < horizon; ++frame) {
            // 1) frame-boundary playback using bits through the end of frame-1
            for (int k = 0; k < n; ++k)
                if (active_[k]) trackers_[static_cast<std::size_t>(k)].on_frame_start(frame, delivered_[k]);

            // 2) arrivals and re-planning
            bool arrived = false;
            while (next_arrival_idx < n && users[next_arrival_idx].arrival_frame == frame) {
                active_[next_arrival_idx] = true;
                ++next_arrival_idx;
                arrived = true;
            }
            if (scheme_is_predictive(cfg_.scheme)) {
                const bool window_done = has_plan_ && frame >= window_anchor_ + cfg_.grid.frames_per_window;
                if (arrived || (window_done && pending_bits_exist()))
                    make_plan(frame);
            }

            // 3) slot execution
            run_frame_slots(frame);

            // 4) termination check
            if (next_arrival_idx >= n && all_finished()) break;
        }

        for (int k = 0; k < n; ++k) {
            auto& tr = trackers_[static_cast<std::size_t>(k)];
            QosRecord rec;
            rec.trial = trial_;
            rec.user_id = users[k].id;
            rec.finished = tr.finished();
            if (!rec.finished) {
                tr.account_unfinished(horizon);
                summary_.unfinished = true;
            }
            rec.stall_time_s = tr.stall_frames() * cfg_.grid.frame_duration_s;
            rec.stall_count = tr.stall_events();
            rec.max_single_stall_s = tr.max_single_stall_frames() * cfg_.grid.frame_duration_s;
            rec.initial_delay_s = cfg_.service == ServiceType::VoD
                                      ? cfg_.vod_initial_delay() * cfg_.grid.frame_duration_s
                                      : 0.0;
            rec.satisfied = rec.finished &&
                            rec.total_waiting_s() <= cfg_.waiting_tolerance_s + 1e-9;
            summary_.users.push_back(rec);

            if (delivered_[k] > audit_bound_[k] * (1.0 + 1e-9))
                throw std::logic_error("trial: delivered bits exceed the physical bound");
        }
        return summary_;
    }

private:
    bool pending_bits_exist() const {
        for (std::size_t k = 0; k < delivered_.size(); ++k)
            if (active_[k] && delivered_[k] < cfg_.video_bits - 1e-6) return true;
        return false;
    }

    bool all_finished() const {
        for (std::size_t k = 0; k < trackers_.size(); ++k)
            if (active_[k] && !trackers_[k].finished()) return false;
        return true;
    }

    // residual bits of each unplayed segment given cumulative delivery
    std::vector<double> residual_segments(int k) const {
        const auto& tr = trackers_[static_cast<std::size_t>(k)];
        std::vector<double> out;
        const double seg = cfg_.segment_bits();
        for (int i = tr.segments_played(); i < cfg_.num_segments; ++i) {
            const double hi = seg * (i + 1);
            const double lo = seg * i;
            out.push_back(std::clamp(hi - std::max(delivered_[k], lo), 0.0, seg));
        }
        return out;
    }

    void make_plan(int frame) {
        const auto& users = world_.users();
        const int tf = cfg_.grid.frames_per_window;
        window_anchor_ = frame;
        ++summary_.replans;

        std::vector<ReplanUserState> states;
        std::vector<int> state_user; // user index per state
        for (int k = 0; k < static_cast<int>(users.size()); ++k) {
            if (!active_[k]) continue;
            unplanned_[k] = false;
            ReplanUserState st;
            st.user_id = users[k].id;
            st.residual_segment_bits = residual_segments(k);
            const auto& tr = trackers_[static_cast<std::size_t>(k)];
            st.frames_until_next_play = tr.frames_until_next_play(frame);
            const int t_w0 = cfg_.service == ServiceType::VoD ? cfg_.vod_initial_delay() : 0;
            st.waiting_consumed_frames = t_w0 + tr.stall_frames();
            st.predicted_rates_bps.resize(static_cast<std::size_t>(tf));
            st.serving_bs.resize(static_cast<std::size_t>(tf));
            for (int j = 0; j < tf; ++j) {
                st.predicted_rates_bps[static_cast<std::size_t>(j)] =
                    world_.predicted_rate(users[k], frame + j);
                st.serving_bs[static_cast<std::size_t>(j)] = world_.serving_bs(users[k], frame + j);
            }
            states.push_back(std::move(st));
            state_user.push_back(k);
        }

        // overload fallback: drop the user behind the binding constraint and
        // serve it best-effort by earliest deadline
        PlanObjective obj = PlanObjective::WeightedTime;
        if (cfg_.scheme == Scheme::MaxThroughput) obj = PlanObjective::MaxThroughput;
        else if (cfg_.scheme == Scheme::MinTime) obj = PlanObjective::MinTime;

        while (!states.empty()) {
            try {
                auto result = replan(ReplanEvent::NewArrival, states, cfg_.grid, obj);
                plan_ = std::move(result.plan);
                inputs_ = make_replan_inputs(states); // may drop zero-residual users
                progress_ = ProgressTable(plan_, inputs_, cfg_.grid);
                base_delivered_ = delivered_;
                has_plan_ = true;
                plan_state_of_user_.assign(users.size(), -1);
                plan_user_of_state_.assign(plan_.user_ids.size(), -1);
                for (std::size_t s = 0; s < plan_.user_ids.size(); ++s) {
                    for (int k = 0; k < static_cast<int>(users.size()); ++k)
                        if (users[static_cast<std::size_t>(k)].id == plan_.user_ids[s]) {
                            plan_user_of_state_[s] = k;
                            plan_state_of_user_[static_cast<std::size_t>(k)] = static_cast<int>(s);
                            break;
                        }
                }
                return;
            } catch (const PlanInfeasibleError& e) {
                summary_.degraded = true;
                const int victim = parse_victim(e.binding_row, states);
                unplanned_[state_user[static_cast<std::size_t>(victim)]] = true;
                states.erase(states.begin() + victim);
                state_user.erase(state_user.begin() + victim);
            } catch (const PlanStructureError&) {
                // window cannot host these deadlines at all; degrade everyone
                summary_.degraded = true;
                for (int k : state_user) unplanned_[k] = true;
                states.clear();
            }
        }
        has_plan_ = false;
    }

    static int parse_victim(const std::string& row_label,
                            const std::vector<ReplanUserState>& states) {
        // labels look like "user 7 segment 2 by frame 40"
        int uid = -1;
        if (row_label.rfind("user ", 0) == 0) uid = std::atoi(row_label.c_str() + 5);
        for (std::size_t s = 0; s < states.size(); ++s)
            if (states[s].user_id == uid) return static_cast<int>(s);
        return static_cast<int>(states.size()) - 1; // fall back to the latest arrival
    }

    void run_frame_slots(int frame) {
        const auto& users = world_.users();
        const int n = static_cast<int>(users.size());
        const int ts = cfg_.grid.slots_per_frame;
        const double slot_s = cfg_.grid.slot_duration_s();

        // coverage and per-frame channel constants
        std::vector<int> bs_of(static_cast<std::size_t>(n), -1);
        std::vector<double> gain_of(static_cast<std::size_t>(n), 0.0);
        for (int k = 0; k < n; ++k) {
            if (!active_[k] || delivered_[k] >= cfg_.video_bits - 1e-6) continue;
            bs_of[static_cast<std::size_t>(k)] = world_.serving_bs(users[k], frame);
            gain_of[static_cast<std::size_t>(k)] = world_.true_gain(users[k], frame);
        }

        std::vector<std::vector<int>> coverage(static_cast<std::size_t>(cfg_.num_bs));
        for (int k = 0; k < n; ++k)
            if (bs_of[static_cast<std::size_t>(k)] >= 0)
                coverage[static_cast<std::size_t>(bs_of[static_cast<std::size_t>(k)])].push_back(k);

        const bool predictive = scheme_is_predictive(cfg_.scheme) && has_plan_;
        const int rel = frame - window_anchor_;
        const bool in_window = predictive && rel >= 0 && rel < cfg_.grid.frames_per_window;

        // frame fractions and no-CSI slot ownership
        std::vector<double> frac(static_cast<std::size_t>(n), 0.0);
        std::vector<std::vector<int>> nocsi_owner;
        if (in_window) {
            for (std::size_t s = 0; s < plan_user_of_state_.size(); ++s) {
                const int k = plan_user_of_state_[s];
                if (k >= 0)
                    frac[static_cast<std::size_t>(k)] =
                        plan_.fractions[s][static_cast<std::size_t>(rel)];
            }
            if (!cfg_.use_csi) {
                nocsi_owner.assign(static_cast<std::size_t>(cfg_.num_bs), {});
                for (int b = 0; b < cfg_.num_bs; ++b) {
                    std::vector<std::pair<int, double>> uf;
                    for (int k : coverage[static_cast<std::size_t>(b)])
                        if (frac[static_cast<std::size_t>(k)] > 0.0)
                            uf.emplace_back(k, frac[static_cast<std::size_t>(k)]);
                    nocsi_owner[static_cast<std::size_t>(b)] =
                        sequential_no_csi(uf, ts);
                }
            }
        }

        const double peak_gain = world_.peak_gain();
        const double rho = cfg_.radio.snr_per_gain();

        for (int t = 0; t < ts; ++t) {
            for (int b = 0; b < cfg_.num_bs; ++b) {
                const auto& cov = coverage[static_cast<std::size_t>(b)];
                if (cov.empty()) continue;
                const double w = world_.slot_bandwidth(b, frame, t);
                if (w <= 0.0) continue;

                int chosen = -1;
                if (!predictive) {
                    chosen = choose_nonpredictive(cfg_.scheme, cov, frame, t, w);
                } else if (!cfg_.use_csi) {
                    if (in_window) {
                        const int owner = nocsi_owner[static_cast<std::size_t>(b)]
                                                     [static_cast<std::size_t>(t)];
                        if (owner >= 0 && delivered_[owner] < cfg_.video_bits - 1e-6)
                            chosen = owner;
                    }
                } else {
                    chosen = choose_predictive(cov, frame, rel, t, w, frac);
                }
                if (chosen < 0) continue;

                const double h2 = world_.fading_gain(users[chosen].id, frame, t);
                const double rate = w * std::log2(1.0 + gain_of[static_cast<std::size_t>(chosen)] * h2 * rho);
                delivered_[chosen] += rate * slot_s;
                audit_bound_[chosen] += w * slot_s * std::log2(1.0 + peak_gain * h2 * rho);
            }
        }
    }

    // Demand-driven backlog of a client without a plan: bits of the segments
    // it has requested so far (one segment of look-ahead) and not yet received.
    double requested_backlog(int k, int frame) const {
        const double req = trackers_[static_cast<std::size_t>(k)].requestable_prefix_bits(
            frame, cfg_.grid.segment_frames);
        return std::max(0.0, req - delivered_[k]);
    }

    int choose_nonpredictive(Scheme scheme, const std::vector<int>& cov, int frame, int slot,
                             double w) {
        const auto& users = world_.users();
        std::vector<double> remaining(delivered_.size(), 0.0);
        for (int k : cov) remaining[static_cast<std::size_t>(k)] = requested_backlog(k, frame);
        if (scheme == Scheme::NonpredBestEffort) {
            std::vector<double> rates(delivered_.size(), 0.0);
            for (int k : cov)
                rates[static_cast<std::size_t>(k)] =
                    world_.realized_rate(users[k], frame, slot, w);
            return baseline_best_effort(cov, rates, remaining);
        }
        std::vector<int> deadline(delivered_.size(), 0);
        for (int k : cov)
            deadline[static_cast<std::size_t>(k)] =
                trackers_[static_cast<std::size_t>(k)].next_due_frame();
        return baseline_earliest_deadline(cov, deadline, remaining);
    }

    int choose_predictive(const std::vector<int>& cov, int frame, int rel, int slot, double w,
                          const std::vector<double>& frac) {
        const auto& users = world_.users();
        // lagging set against the current window's progress targets
        std::vector<int> lag;
        std::vector<std::uint8_t> debt(delivered_.size(), 0);
        for (int k : cov) {
            if (unplanned_[k]) continue;
            const int s = plan_state_of_user_[static_cast<std::size_t>(k)];
            if (s < 0) continue;
            const double since = delivered_[k] - base_delivered_[k];
            const double lam_now = progress_.target(static_cast<std::size_t>(s), rel);
            if (lam_now - since > 0.0) lag.push_back(k);
            const double lam_prev = progress_.target(static_cast<std::size_t>(s), rel - 1);
            if (lam_prev - since > 0.0) debt[static_cast<std::size_t>(k)] = 1;
        }
        std::vector<double> rates(delivered_.size(), 0.0);
        for (int k : lag)
            rates[static_cast<std::size_t>(k)] = world_.realized_rate(users[k], frame, slot, w);
        const int pick = select_user(lag, rates, frac, debt);
        if (pick >= 0) return pick;

        // leftover slots go to degraded users, earliest deadline first
        std::vector<int> degraded;
        for (int k : cov)
            if (unplanned_[k]) degraded.push_back(k);
        if (degraded.empty()) return -1;
        std::vector<double> remaining(delivered_.size(), 0.0);
        std::vector<int> deadline(delivered_.size(), 0);
        for (int k : degraded) {
            remaining[static_cast<std::size_t>(k)] = requested_backlog(k, frame);
            deadline[static_cast<std::size_t>(k)] =
                trackers_[static_cast<std::size_t>(k)].next_due_frame();
        }
        return baseline_earliest_deadline(degraded, deadline, remaining);
    }

    const ScenarioConfig& cfg_;
    int trial_;
    TrialWorld world_;
    TrialSummary summary_;

    std::vector<double> delivered_;
    std::vector<double> audit_bound_;
    std::vector<PlaybackTracker> trackers_;
    std::vector<bool> active_;
    std::vector<bool> unplanned_;

    bool has_plan_ = false;
    int window_anchor_ = 0;
    Plan plan_;
    std::vector<UserPlanInput> inputs_;
    ProgressTable progress_;
    std::vector<double> base_delivered_;
    std::vector<int> plan_user_of_state_; // plan position -> user index
    std::vector<int> plan_state_of_user_; // user index -> plan position or -1
};

inline TrialSummary run_trial(const ScenarioConfig& cfg, int trial) {
    return TrialRunner(cfg, trial).run();
}

// Runs all trials (optionally on a worker pool) and pools the per-user records.
// Trials are merged in index order, so the report does not depend on the
// worker count.
inline QosReport run_experiment(const ScenarioConfig& cfg) {
    cfg.validate();
    std::vector<TrialSummary> summaries(static_cast<std::size_t>(cfg.trials));
    const int nw = std::max(1, cfg.workers);
    if (nw == 1) {
        for (int t = 0; t < cfg.trials; ++t) summaries[static_cast<std::size_t>(t)] = run_trial(cfg, t);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < nw; ++w)
            pool.emplace_back([&] {
                for (int t; (t = next.fetch_add(1)) < cfg.trials;)
                    summaries[static_cast<std::size_t>(t)] = run_trial(cfg, t);
            });
        for (auto& th : pool) th.join();
    }
    QosReport report;
    report.trials = cfg.trials;
    for (const auto& s : summaries) {
        report.users.insert(report.users.end(), s.users.begin(), s.users.end());
        report.degraded_trials += s.degraded ? 1 : 0;
    }
    return report;
}

struct SweepPoint {
    double arrival_rate_per_s = 0.0;
    double mean_total_stall_s = 0.0;
    double satisfaction_fraction = 0.0;
    std::size_t num_users = 0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    double max_supportable_rate = 0.0; // largest rate meeting the quantile
};

// Mean-stall and satisfaction curve over arrival rates; the maximal supportable
// rate is the largest swept rate whose satisfaction fraction meets `quantile`.
inline SweepResult sweep_arrival_rate(ScenarioConfig cfg, const std::vector<double>& rates,
                                      double tolerance_s, double quantile = 0.99) {
    SweepResult out;
    cfg.waiting_tolerance_s = tolerance_s;
    for (double r : rates) {
        cfg.arrival_rate_per_s = r;
        const QosReport rep = run_experiment(cfg);
        SweepPoint p;
        p.arrival_rate_per_s = r;
        p.mean_total_stall_s = rep.mean_total_stall_s();
        p.satisfaction_fraction = rep.satisfaction_fraction();
        p.num_users = rep.users.size();
        out.points.push_back(p);
        if (p.satisfaction_fraction >= quantile) out.max_supportable_rate = r;
    }
    return out;
}

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "proposed") return Scheme::Proposed;
    if (s == "max-throughput") return Scheme::MaxThroughput;
    if (s == "min-time") return Scheme::MinTime;
    if (s == "nonpred-qos") return Scheme::NonpredQos;
    if (s == "nonpred-best-effort") return Scheme::NonpredBestEffort;
    throw std::invalid_argument("unknown scheme: " + s);
}

// Maps the flat key-value config onto a scenario; absent keys keep defaults.
// Bandwidths come in MHz and video sizes in Mbyte, as the key names say.
inline ScenarioConfig scenario_from_config(const Config& c) {
    ScenarioConfig s;
    s.num_bs = static_cast<int>(c.get_int("num_bs", s.num_bs));
    s.cell_radius_m = c.get_double("cell_radius_m", s.cell_radius_m);
    s.road_offsets_m = c.get_list("road_offsets_m", s.road_offsets_m);
    s.idle_bandwidth_hz = c.get_double("idle_bandwidth_mhz", s.idle_bandwidth_hz / 1e6) * 1e6;
    s.busy_bandwidth_hz = c.get_double("busy_bandwidth_mhz", s.busy_bandwidth_hz / 1e6) * 1e6;
    if (c.has("bs_mean_bandwidth_mhz")) {
        s.bs_mean_bandwidth_hz = c.get_list("bs_mean_bandwidth_mhz");
        for (double& w : s.bs_mean_bandwidth_hz) w *= 1e6;
    }

    s.radio.num_antennas = static_cast<int>(c.get_int("num_antennas", s.radio.num_antennas));
    s.radio.max_power_w = c.get_double("max_power_w", s.radio.max_power_w);
    s.radio.max_bandwidth_hz =
        c.get_double("max_bandwidth_mhz", s.radio.max_bandwidth_hz / 1e6) * 1e6;
    s.edge_snr_db = c.get_double("edge_snr_db", s.edge_snr_db);

    s.grid.frames_per_window =
        static_cast<int>(c.get_int("frames_per_window", s.grid.frames_per_window));
    s.grid.slots_per_frame =
        static_cast<int>(c.get_int("slots_per_frame", s.grid.slots_per_frame));
    s.grid.frame_duration_s = c.get_double("frame_duration_s", s.grid.frame_duration_s);
    s.grid.segment_frames = static_cast<int>(c.get_int("segment_frames", s.grid.segment_frames));

    s.num_segments = static_cast<int>(c.get_int("num_segments", s.num_segments));
    s.video_bits = c.get_double("video_mbyte", s.video_bits / 8e6) * 8e6;

    s.arrival_rate_per_s = c.get_double("arrival_rate_per_s", s.arrival_rate_per_s);
    s.arrival_window_frames =
        static_cast<int>(c.get_int("arrival_window_frames", s.arrival_window_frames));
    s.speed_min_mps = c.get_double("speed_min_mps", s.speed_min_mps);
    s.speed_max_mps = c.get_double("speed_max_mps", s.speed_max_mps);

    s.bandwidth_cv = c.get_double("bandwidth_cv", s.bandwidth_cv);
    s.gain_delta_ratio = c.get_double("gain_delta_ratio", s.gain_delta_ratio);
    s.bandwidth_bias = c.get_double("bandwidth_bias", s.bandwidth_bias);
    s.gain_bias = c.get_double("gain_bias", s.gain_bias);
    s.slot_bandwidth_cv = c.get_double("slot_bandwidth_cv", s.slot_bandwidth_cv);
    s.deterministic_fading = c.get_int("deterministic_fading", s.deterministic_fading ? 1 : 0) != 0;

    const std::string service = c.get_string("service", "vod");
    if (service == "vod") s.service = ServiceType::VoD;
    else if (service == "vor") s.service = ServiceType::VoR;
    else throw std::invalid_argument("config: service must be vod or vor");
    s.initial_delay_frames =
        static_cast<int>(c.get_int("initial_delay_frames", s.initial_delay_frames));
    const double lead_s =
        c.get_double("reservation_lead_s", s.reservation_lead_frames * s.grid.frame_duration_s);
    s.reservation_lead_frames = static_cast<int>(std::lround(lead_s / s.grid.frame_duration_s));

    s.scheme = scheme_from_string(c.get_string("scheme", "proposed"));
    s.use_csi = c.get_int("use_csi", s.use_csi ? 1 : 0) != 0;

    s.trials = static_cast<int>(c.get_int("trials", s.trials));
    s.seed = static_cast<std::uint64_t>(c.get_int("seed", static_cast<long>(s.seed)));
    s.waiting_tolerance_s = c.get_double("waiting_tolerance_s", s.waiting_tolerance_s);
    s.workers = static_cast<int>(c.get_int("workers", s.workers));
    s.validate();
    return s;
}

} // namespace pra
