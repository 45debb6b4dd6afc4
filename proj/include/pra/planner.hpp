#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pra/channel.hpp"
#include "pra/csv.hpp"
#include "pra/lp.hpp"

namespace pra {

// Planner input for one user: segments still to deliver, timing offsets and
// the predicted per-frame average rates over the window. Frames are 0-based.
struct UserPlanInput {
    int user_id = 0;
    std::vector<double> segment_bits;        // B_k^i, in play order (zeros allowed after replan)
    int initial_delay_frames = 0;            // T_w: waiting budget already committed
    int first_play_offset_frames = 0;        // T_1: frames until the first segment plays
    std::vector<double> predicted_rates_bps; // per frame of the window
    std::vector<int> serving_bs;             // BS id per frame

    double total_bits() const {
        return std::accumulate(segment_bits.begin(), segment_bits.end(), 0.0);
    }
};

struct Plan {
    int t_mw_frames = 0;
    double objective_value = 0.0;
    std::vector<int> user_ids;
    std::vector<std::vector<double>> fractions;  // [user][frame] in [0,1]
    std::vector<std::vector<int>> serving_bs;    // [user][frame]

    int user_index(int user_id) const {
        for (std::size_t i = 0; i < user_ids.size(); ++i)
            if (user_ids[i] == user_id) return static_cast<int>(i);
        return -1;
    }
};

enum class PlanObjective { WeightedTime, MinTime, MaxThroughput };

// Deadline index structure broken (outside the window); distinct from LP
// infeasibility.
struct PlanStructureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// No feasible plan even at the largest admissible waiting time.
struct PlanInfeasibleError : std::runtime_error {
    PlanInfeasibleError(const std::string& msg, std::string row, double violation)
        : std::runtime_error(msg), binding_row(std::move(row)), violation_bits(violation) {}
    std::string binding_row;
    double violation_bits = 0.0;
};

// Frame count available for delivering segment n (1-based) of a user at a
// given maximal waiting time.
inline int segment_deadline_frames(const UserPlanInput& u, int t_mw, int segment_frames,
                                   int n) {
    return t_mw - u.initial_delay_frames + u.first_play_offset_frames +
           (n - 1) * segment_frames;
}

struct P2Build {
    LpProblem lp;
    std::vector<std::pair<int, int>> var_user_frame;  // var -> (user index, frame)
    std::vector<std::vector<int>> user_frame_var;     // [user][frame] -> var or -1
    std::vector<int> final_deadline;                  // frames usable per user
    std::vector<std::string> row_labels;
};

// Assembles problem P2 for a fixed maximal waiting time: per-segment cumulative
// delivery constraints (the last one an equality), one capacity row per
// (BS, frame) shared by two or more users, box bounds [0,1]. Variables exist
// only up to each user's final deadline; beyond it the fractions are zero by
// construction.
inline P2Build build_p2(const std::vector<UserPlanInput>& inputs, int t_mw,
                        const TimeGrid& grid, PlanObjective objective) {
    grid.validate();
    const int tf = grid.frames_per_window;
    const double dt = grid.frame_duration_s;

    P2Build b;
    b.user_frame_var.assign(inputs.size(), {});
    b.final_deadline.assign(inputs.size(), 0);

    double max_rate_bits = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto& u = inputs[k];
        const int nseg = static_cast<int>(u.segment_bits.size());
        b.user_frame_var[k].assign(tf, -1);
        if (nseg == 0 || u.total_bits() <= 0.0) continue;
        if (static_cast<int>(u.predicted_rates_bps.size()) < tf ||
            static_cast<int>(u.serving_bs.size()) < tf)
            throw std::invalid_argument("build_p2: rates/serving_bs shorter than the window");
        for (int n = 1; n <= nseg; ++n) {
            const int d = segment_deadline_frames(u, t_mw, grid.segment_frames, n);
            if (d < 1 || d > tf)
                throw PlanStructureError("build_p2: deadline for user " +
                                         std::to_string(u.user_id) + " segment " +
                                         std::to_string(n) + " outside the window");
        }
        b.final_deadline[k] = segment_deadline_frames(u, t_mw, grid.segment_frames, nseg);
        for (int j = 0; j < b.final_deadline[k]; ++j) {
            const int var = b.lp.add_variable(0.0, 0.0, 1.0);
            b.var_user_frame.emplace_back(static_cast<int>(k), j);
            b.user_frame_var[k][j] = var;
            max_rate_bits = std::max(max_rate_bits, u.predicted_rates_bps[j] * dt);
        }
    }

    // objective
    const double throughput_scale = max_rate_bits > 0.0 ? 1.0 / max_rate_bits : 1.0;
    for (int v = 0; v < b.lp.num_vars; ++v) {
        const auto [k, j] = b.var_user_frame[v];
        switch (objective) {
            case PlanObjective::WeightedTime: b.lp.objective[v] = j + 1; break;
            case PlanObjective::MinTime: b.lp.objective[v] = 1.0; break;
            case PlanObjective::MaxThroughput:
                b.lp.objective[v] =
                    -inputs[k].predicted_rates_bps[j] * dt * throughput_scale;
                break;
        }
    }

    // cumulative delivery rows
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto& u = inputs[k];
        const int nseg = static_cast<int>(u.segment_bits.size());
        if (b.final_deadline[k] == 0) continue;
        double prefix = 0.0;
        for (int n = 1; n <= nseg; ++n) {
            prefix += u.segment_bits[n - 1];
            const bool last = n == nseg;
            if (prefix <= 0.0) continue; // nothing due yet, row is vacuous
            if (!last && u.segment_bits[n - 1] <= 0.0 &&
                segment_deadline_frames(u, t_mw, grid.segment_frames, n) >=
                    b.final_deadline[k])
                continue;
            LpProblem::Row row;
            row.sense = last ? RowSense::Equal : RowSense::GreaterEq;
            row.rhs = prefix;
            const int d = segment_deadline_frames(u, t_mw, grid.segment_frames, n);
            for (int j = 0; j < d; ++j) {
                const int var = b.user_frame_var[k][j];
                const double coef = u.predicted_rates_bps[j] * dt;
                if (var >= 0 && coef > 0.0) row.coeffs.emplace_back(var, coef);
            }
            b.lp.rows.push_back(std::move(row));
            b.row_labels.push_back("user " + std::to_string(u.user_id) + " segment " +
                                   std::to_string(n) + " by frame " + std::to_string(d));
        }
    }

    // per-(BS, frame) capacity rows where two or more planned users share a BS
    if (!inputs.empty()) {
        int max_bs = 0;
        for (const auto& u : inputs)
            for (int bs : u.serving_bs) max_bs = std::max(max_bs, bs);
        for (int j = 0; j < tf; ++j) {
            std::vector<std::vector<int>> by_bs(static_cast<std::size_t>(max_bs) + 1);
            for (std::size_t k = 0; k < inputs.size(); ++k) {
                const int var = j < tf ? b.user_frame_var[k].empty() ? -1
                                                                     : b.user_frame_var[k][j]
                                       : -1;
                if (var >= 0) by_bs[static_cast<std::size_t>(inputs[k].serving_bs[j])].push_back(var);
            }
            for (std::size_t bs = 0; bs < by_bs.size(); ++bs) {
                if (by_bs[bs].size() < 2) continue;
                LpProblem::Row row;
                row.sense = RowSense::LessEq;
                row.rhs = 1.0;
                for (int var : by_bs[bs]) row.coeffs.emplace_back(var, 1.0);
                b.lp.rows.push_back(std::move(row));
                b.row_labels.push_back("capacity bs " + std::to_string(bs) + " frame " +
                                       std::to_string(j));
            }
        }
    }
    return b;
}

struct GreedyResult {
    bool feasible = false;
    std::vector<double> fractions;
    double total_time_frames = 0.0;
    double delivered_bits = 0.0;
};

// Single-user closed form: fill the highest-rate frames inside the deadline
// first (lowest frame index wins ties), each to the fraction that exhausts the
// remaining bits.
inline GreedyResult greedy_single_user(std::span<const double> rates_bps,
                                       int deadline_frames, double bits,
                                       double frame_duration_s) {
    if (deadline_frames < 0 || deadline_frames > static_cast<int>(rates_bps.size()))
        throw std::invalid_argument("greedy_single_user: bad deadline");
    GreedyResult g;
    g.fractions.assign(rates_bps.size(), 0.0);
    std::vector<int> order(static_cast<std::size_t>(deadline_frames));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (rates_bps[a] != rates_bps[b]) return rates_bps[a] > rates_bps[b];
        return a < b;
    });
    double remaining = bits;
    for (int j : order) {
        if (remaining <= 0.0) break;
        const double frame_bits = rates_bps[j] * frame_duration_s;
        if (frame_bits <= 0.0) continue;
        const double s = std::min(1.0, remaining / frame_bits);
        g.fractions[j] = s;
        g.delivered_bits += s * frame_bits;
        g.total_time_frames += s;
        remaining -= s * frame_bits;
    }
    g.feasible = remaining <= 1e-9 * std::max(1.0, bits);
    return g;
}

namespace detail {

inline Plan plan_from_solution(const std::vector<UserPlanInput>& inputs, const P2Build& b,
                               const LpResult& sol, int t_mw, const TimeGrid& grid) {
    Plan plan;
    plan.t_mw_frames = t_mw;
    plan.objective_value = sol.objective;
    const int tf = grid.frames_per_window;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        plan.user_ids.push_back(inputs[k].user_id);
        std::vector<double> f(tf, 0.0);
        for (int j = 0; j < tf; ++j) {
            const int var = b.user_frame_var[k].empty() ? -1 : b.user_frame_var[k][j];
            if (var >= 0) f[j] = std::clamp(sol.x[var], 0.0, 1.0);
        }
        plan.fractions.push_back(std::move(f));
        plan.serving_bs.push_back(
            std::vector<int>(inputs[k].serving_bs.begin(),
                             inputs[k].serving_bs.begin() + tf));
    }
    return plan;
}

} // namespace detail

// Post-solve legality check, independent of solver internals.
inline void validate_plan(const Plan& plan, const std::vector<UserPlanInput>& inputs,
                          const TimeGrid& grid, double eps = 1e-7) {
    const int tf = grid.frames_per_window;
    const double dt = grid.frame_duration_s;
    for (std::size_t k = 0; k < plan.fractions.size(); ++k) {
        for (double s : plan.fractions[k])
            if (s < -eps || s > 1.0 + eps) throw std::logic_error("plan: fraction out of [0,1]");
        const auto& u = inputs[k];
        const int nseg = static_cast<int>(u.segment_bits.size());
        double prefix = 0.0;
        for (int n = 1; n <= nseg; ++n) {
            prefix += u.segment_bits[n - 1];
            if (prefix <= 0.0) continue;
            const int d = segment_deadline_frames(u, plan.t_mw_frames, grid.segment_frames, n);
            double got = 0.0;
            for (int j = 0; j < std::min(d, tf); ++j)
                got += plan.fractions[k][j] * u.predicted_rates_bps[j] * dt;
            const double tol = eps * std::max(1.0, prefix);
            if (got < prefix - tol) throw std::logic_error("plan: delivery constraint violated");
            if (n == nseg && got > prefix + tol)
                throw std::logic_error("plan: final segment over-delivered");
        }
    }
    // capacity per (bs, frame)
    for (int j = 0; j < tf; ++j) {
        std::vector<std::pair<int, double>> load; // (bs, sum)
        for (std::size_t k = 0; k < plan.fractions.size(); ++k) {
            const int bs = plan.serving_bs[k][j];
            bool found = false;
            for (auto& [b, s] : load)
                if (b == bs) { s += plan.fractions[k][j]; found = true; }
            if (!found) load.emplace_back(bs, plan.fractions[k][j]);
        }
        for (const auto& [b, s] : load)
            if (s > 1.0 + eps) throw std::logic_error("plan: BS capacity exceeded");
    }
}

struct OptimizeResult {
    int t_mw_star = 0;
    Plan plan;
};

inline std::pair<int, int> t_mw_structural_bounds(const std::vector<UserPlanInput>& inputs,
                                                  const TimeGrid& grid) {
    int lo = 1, hi = grid.frames_per_window;
    for (const auto& u : inputs) {
        if (u.segment_bits.empty() || u.total_bits() <= 0.0) continue;
        const int nseg = static_cast<int>(u.segment_bits.size());
        lo = std::max(lo, 1 + u.initial_delay_frames - u.first_play_offset_frames);
        hi = std::min(hi, grid.frames_per_window - u.first_play_offset_frames -
                              (nseg - 1) * grid.segment_frames + u.initial_delay_frames);
    }
    return {lo, hi};
}

// P1: smallest integer T_mw with P2 feasible (feasibility is monotone in T_mw),
// then the optimal plan at that T_mw.
inline OptimizeResult optimize_t_mw(const std::vector<UserPlanInput>& inputs,
                                    const TimeGrid& grid,
                                    PlanObjective objective = PlanObjective::WeightedTime,
                                    int lo_hint = -1, int hi_hint = -1) {
    auto [lo, hi] = t_mw_structural_bounds(inputs, grid);
    if (lo_hint >= 0) lo = std::max(lo, lo_hint);
    if (hi_hint >= 0) hi = std::min(hi, hi_hint);
    if (hi < lo)
        throw PlanStructureError("optimize_t_mw: no admissible waiting time fits the window");

    auto feasible_at = [&](int t) {
        const P2Build b = build_p2(inputs, t, grid, objective);
        const LpResult r = lp_feasible(b.lp);
        return std::make_pair(r, b);
    };

    auto [at_hi, build_hi] = feasible_at(hi);
    if (!at_hi.feasible) {
        const std::string label = at_hi.worst_row >= 0 &&
                                          at_hi.worst_row < static_cast<int>(build_hi.row_labels.size())
                                      ? build_hi.row_labels[at_hi.worst_row]
                                      : "unknown";
        throw PlanInfeasibleError("optimize_t_mw: infeasible at the largest waiting time (" +
                                      label + ")",
                                  label, at_hi.worst_violation);
    }

    while (lo < hi) {
        const int mid = lo + (hi - lo) / 2;
        if (feasible_at(mid).first.feasible) hi = mid;
        else lo = mid + 1;
    }

    const P2Build b = build_p2(inputs, lo, grid, objective);
    const LpResult sol = solve_lp(b.lp);
    if (!sol.feasible) throw std::logic_error("optimize_t_mw: bisection landed on infeasible");
    OptimizeResult out;
    out.t_mw_star = lo;
    out.plan = detail::plan_from_solution(inputs, b, sol, lo, grid);
    validate_plan(out.plan, inputs, grid);
    return out;
}

enum class ReplanEvent { NewArrival, WindowExhausted };

// Snapshot of one user at a re-plan instant.
struct ReplanUserState {
    int user_id = 0;
    std::vector<double> residual_segment_bits; // unplayed segments, play order
    int frames_until_next_play = 0;            // new T_1
    int waiting_consumed_frames = 0;           // initial delay + stalls so far
    std::vector<double> predicted_rates_bps;   // over the new window
    std::vector<int> serving_bs;
};

// Builds fresh planner inputs from per-user residual state. Users with nothing
// left to receive are dropped.
inline std::vector<UserPlanInput> make_replan_inputs(const std::vector<ReplanUserState>& states) {
    std::vector<UserPlanInput> inputs;
    for (const auto& st : states) {
        const double total = std::accumulate(st.residual_segment_bits.begin(),
                                             st.residual_segment_bits.end(), 0.0);
        if (total <= 0.0) continue;
        UserPlanInput u;
        u.user_id = st.user_id;
        u.segment_bits = st.residual_segment_bits;
        u.initial_delay_frames = st.waiting_consumed_frames;
        u.first_play_offset_frames = st.frames_until_next_play;
        u.predicted_rates_bps = st.predicted_rates_bps;
        u.serving_bs = st.serving_bs;
        inputs.push_back(std::move(u));
    }
    return inputs;
}

inline OptimizeResult replan(ReplanEvent, const std::vector<ReplanUserState>& states,
                             const TimeGrid& grid,
                             PlanObjective objective = PlanObjective::WeightedTime) {
    return optimize_t_mw(make_replan_inputs(states), grid, objective);
}

// --- plan file format ------------------------------------------------------
//
//   t_mw_frames = 12
//   objective_value = 34.5
//   plan <user_id> <frame> <fraction> <bs>
//
// Only positive fractions are written; frames are 0-based.

inline void write_plan(std::ostream& os, const Plan& plan) {
    os << "t_mw_frames = " << plan.t_mw_frames << "\n";
    os << "objective_value = " << csv::format_double(plan.objective_value) << "\n";
    for (std::size_t k = 0; k < plan.user_ids.size(); ++k)
        for (std::size_t j = 0; j < plan.fractions[k].size(); ++j)
            if (plan.fractions[k][j] > 0.0)
                os << "plan " << plan.user_ids[k] << ' ' << j << ' '
                   << csv::format_double(plan.fractions[k][j]) << ' '
                   << plan.serving_bs[k][j] << "\n";
}

inline Plan read_plan(std::istream& is, int frames_per_window) {
    Plan plan;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string head;
        ls >> head;
        if (head == "t_mw_frames") {
            std::string eq;
            ls >> eq >> plan.t_mw_frames;
        } else if (head == "objective_value") {
            std::string eq;
            ls >> eq >> plan.objective_value;
        } else if (head == "plan") {
            int uid, frame, bs;
            double frac;
            ls >> uid >> frame >> frac >> bs;
            if (!ls) throw std::runtime_error("read_plan: malformed line: " + line);
            int idx = plan.user_index(uid);
            if (idx < 0) {
                idx = static_cast<int>(plan.user_ids.size());
                plan.user_ids.push_back(uid);
                plan.fractions.emplace_back(frames_per_window, 0.0);
                plan.serving_bs.emplace_back(frames_per_window, -1);
            }
            if (frame < 0 || frame >= frames_per_window)
                throw std::runtime_error("read_plan: frame outside the window");
            plan.fractions[static_cast<std::size_t>(idx)][static_cast<std::size_t>(frame)] = frac;
            plan.serving_bs[static_cast<std::size_t>(idx)][static_cast<std::size_t>(frame)] = bs;
        }
    }
    return plan;
}

} // namespace pra
