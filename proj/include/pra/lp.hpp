#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pra {

inline constexpr double lp_infinity = std::numeric_limits<double>::infinity();

enum class RowSense { LessEq, GreaterEq, Equal };

// min c'x  s.t.  rows (<=, >=, =),  lower <= x <= upper.
struct LpProblem {
    struct Row {
        RowSense sense = RowSense::LessEq;
        double rhs = 0.0;
        std::vector<std::pair<int, double>> coeffs; // (variable, coefficient)
    };

    int num_vars = 0;
    std::vector<double> objective;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<Row> rows;

    int add_variable(double cost, double lo, double up) {
        objective.push_back(cost);
        lower.push_back(lo);
        upper.push_back(up);
        return num_vars++;
    }

    void validate() const {
        if (static_cast<int>(objective.size()) != num_vars ||
            static_cast<int>(lower.size()) != num_vars ||
            static_cast<int>(upper.size()) != num_vars)
            throw std::invalid_argument("LpProblem: inconsistent dimensions");
        for (int j = 0; j < num_vars; ++j)
            if (!(lower[j] <= upper[j])) throw std::invalid_argument("LpProblem: lower > upper");
        for (const auto& r : rows)
            for (const auto& [j, v] : r.coeffs) {
                if (j < 0 || j >= num_vars) throw std::invalid_argument("LpProblem: bad index");
                if (!std::isfinite(v)) throw std::invalid_argument("LpProblem: bad coefficient");
            }
    }
};

struct LpResult {
    bool feasible = false;
    std::vector<double> x;
    double objective = 0.0;
    int iterations = 0;
    // when infeasible: the most violated row and its absolute violation
    int worst_row = -1;
    double worst_violation = 0.0;
};

// Two-phase revised simplex for box-constrained LPs. Dense basis inverse,
// Dantzig pricing with a Bland fallback after a run of degenerate steps.
// All pivot choices are deterministic.
class SimplexSolver {
public:
    explicit SimplexSolver(const LpProblem& p) : p_(p) { p.validate(); }

    LpResult solve(bool phase_one_only = false) {
        build();
        phase1();
        LpResult res;
        res.iterations = iterations_;
        if (infeasibility_ > feas_tol_) {
            res.feasible = false;
            report_violation(res);
            return res;
        }
        evict_artificials();
        if (!phase_one_only) phase2();
        res.feasible = true;
        res.iterations = iterations_;
        res.x.assign(p_.num_vars, 0.0);
        for (int j = 0; j < p_.num_vars; ++j) res.x[j] = value_of(j);
        res.objective = 0.0;
        for (int j = 0; j < p_.num_vars; ++j) res.objective += p_.objective[j] * res.x[j];
        return res;
    }

private:
    enum Status : unsigned char { AtLower, AtUpper, Basic };

    const LpProblem& p_;
    int m_ = 0;       // rows
    int n_total_ = 0; // structurals + logicals + artificials
    int n_struct_ = 0;

    // column-sparse matrix over all variables
    std::vector<std::vector<std::pair<int, double>>> cols_;
    std::vector<double> lo_, up_, cost_, phase1_cost_;
    std::vector<bool> artificial_;
    std::vector<double> row_scale_, rhs_;

    std::vector<Status> status_;
    std::vector<double> nb_value_; // value for nonbasic variables
    std::vector<int> basis_;       // basis variable per row
    std::vector<double> xb_;       // basic values
    std::vector<double> binv_;     // dense row-major m x m
    std::vector<double> y_, w_;

    int iterations_ = 0;
    double infeasibility_ = 0.0;
    double feas_tol_ = 1e-7;
    static constexpr double d_tol = 1e-9;
    static constexpr double pivot_tol = 1e-9;
    static constexpr double degen_tol = 1e-11;

    double value_of(int j) const {
        if (status_[j] == Basic) {
            for (int i = 0; i < m_; ++i)
                if (basis_[i] == j) return xb_[i];
            return 0.0;
        }
        return nb_value_[j];
    }

    void build() {
        m_ = static_cast<int>(p_.rows.size());
        n_struct_ = p_.num_vars;
        cols_.assign(n_struct_, {});
        lo_ = p_.lower;
        up_ = p_.upper;
        cost_ = p_.objective;

        row_scale_.assign(m_, 1.0);
        rhs_.assign(m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            double mx = std::abs(p_.rows[i].rhs);
            for (const auto& [j, v] : p_.rows[i].coeffs) mx = std::max(mx, std::abs(v));
            row_scale_[i] = mx > 0.0 ? 1.0 / mx : 1.0;
            rhs_[i] = p_.rows[i].rhs * row_scale_[i];
            for (const auto& [j, v] : p_.rows[i].coeffs)
                cols_[j].emplace_back(i, v * row_scale_[i]);
        }

        // logical variable per row
        std::vector<int> logical(m_);
        for (int i = 0; i < m_; ++i) {
            double llo = 0.0, lup = 0.0;
            switch (p_.rows[i].sense) {
                case RowSense::LessEq: llo = 0.0; lup = lp_infinity; break;
                case RowSense::GreaterEq: llo = -lp_infinity; lup = 0.0; break;
                case RowSense::Equal: llo = 0.0; lup = 0.0; break;
            }
            logical[i] = static_cast<int>(cols_.size());
            cols_.push_back({{i, 1.0}});
            lo_.push_back(llo);
            up_.push_back(lup);
            cost_.push_back(0.0);
        }

        n_total_ = static_cast<int>(cols_.size());
        artificial_.assign(n_total_, false);
        status_.assign(n_total_, AtLower);
        nb_value_.assign(n_total_, 0.0);

        // nonbasic variables start at a finite bound
        for (int j = 0; j < n_total_; ++j) {
            if (std::isfinite(lo_[j])) nb_value_[j] = lo_[j], status_[j] = AtLower;
            else if (std::isfinite(up_[j])) nb_value_[j] = up_[j], status_[j] = AtUpper;
            else nb_value_[j] = 0.0, status_[j] = AtLower;
        }

        // shifted rhs given nonbasic structural values
        std::vector<double> shifted = rhs_;
        for (int j = 0; j < n_struct_; ++j) {
            if (nb_value_[j] == 0.0) continue;
            for (const auto& [i, v] : cols_[j]) shifted[i] -= v * nb_value_[j];
        }

        basis_.assign(m_, -1);
        xb_.assign(m_, 0.0);
        double max_b = 1.0;
        for (int i = 0; i < m_; ++i) max_b = std::max(max_b, std::abs(shifted[i]));
        feas_tol_ = 1e-7 * max_b;

        for (int i = 0; i < m_; ++i) {
            const double b = shifted[i];
            const int lj = logical[i];
            const bool slack_ok = (p_.rows[i].sense == RowSense::LessEq && b >= 0.0) ||
                                  (p_.rows[i].sense == RowSense::GreaterEq && b <= 0.0) ||
                                  (p_.rows[i].sense == RowSense::Equal && b == 0.0);
            if (slack_ok) {
                basis_[i] = lj;
                xb_[i] = b;
                status_[lj] = Basic;
            } else {
                // artificial with +-1 entry so it starts basic at |b|
                const double sign = b >= 0.0 ? 1.0 : -1.0;
                const int aj = static_cast<int>(cols_.size());
                cols_.push_back({{i, sign}});
                lo_.push_back(0.0);
                up_.push_back(lp_infinity);
                cost_.push_back(0.0);
                artificial_.push_back(true);
                status_.push_back(Basic);
                nb_value_.push_back(0.0);
                basis_[i] = aj;
                xb_[i] = std::abs(b);
                if (p_.rows[i].sense == RowSense::GreaterEq) {
                    status_[lj] = AtUpper; // surplus parked at its upper bound 0
                    nb_value_[lj] = 0.0;
                }
            }
        }
        n_total_ = static_cast<int>(cols_.size());

        phase1_cost_.assign(n_total_, 0.0);
        for (int j = 0; j < n_total_; ++j)
            if (artificial_[j]) phase1_cost_[j] = 1.0;

        binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
        for (int i = 0; i < m_; ++i) {
            // initial basis columns are +-e_i
            const auto& col = cols_[basis_[i]];
            binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0 / col[0].second;
        }
        y_.assign(m_, 0.0);
        w_.assign(m_, 0.0);
    }

    void compute_y(const std::vector<double>& c) {
        for (int i = 0; i < m_; ++i) {
            double s = 0.0;
            for (int k = 0; k < m_; ++k)
                s += c[basis_[k]] * binv_[static_cast<std::size_t>(k) * m_ + i];
            y_[i] = s;
        }
    }

    double reduced_cost(int j, const std::vector<double>& c) const {
        double d = c[j];
        for (const auto& [i, v] : cols_[j]) d -= y_[i] * v;
        return d;
    }

    void compute_direction(int j) {
        std::fill(w_.begin(), w_.end(), 0.0);
        for (const auto& [i, v] : cols_[j])
            for (int k = 0; k < m_; ++k) w_[k] += v * binv_[static_cast<std::size_t>(k) * m_ + i];
    }

    void recompute_xb() {
        std::vector<double> resid = rhs_;
        for (int j = 0; j < n_total_; ++j) {
            if (status_[j] == Basic || nb_value_[j] == 0.0) continue;
            for (const auto& [i, v] : cols_[j]) resid[i] -= v * nb_value_[j];
        }
        for (int k = 0; k < m_; ++k) {
            double s = 0.0;
            for (int i = 0; i < m_; ++i) s += binv_[static_cast<std::size_t>(k) * m_ + i] * resid[i];
            xb_[k] = s;
        }
    }

    // one simplex phase over the given costs; returns when no entering column
    void iterate(const std::vector<double>& c, bool allow_artificials) {
        int degen_run = 0;
        bool bland = false;
        const long iter_cap = 2000 + 200L * (m_ + n_total_);
        for (long it = 0;; ++it) {
            if (it > iter_cap) throw std::runtime_error("simplex: iteration cap exceeded");
            compute_y(c);

            int enter = -1;
            double best = 0.0;
            for (int j = 0; j < n_total_; ++j) {
                if (status_[j] == Basic) continue;
                if (lo_[j] == up_[j]) continue;
                if (!allow_artificials && artificial_[j]) continue;
                const double d = reduced_cost(j, c);
                double score = 0.0;
                if (status_[j] == AtLower && d < -d_tol) score = -d;
                else if (status_[j] == AtUpper && d > d_tol) score = d;
                else continue;
                if (bland) { enter = j; break; }
                if (score > best) { best = score; enter = j; }
            }
            if (enter < 0) return; // optimal for this phase

            const double sigma = status_[enter] == AtLower ? 1.0 : -1.0;
            compute_direction(enter);

            // ratio test: entering moves by t >= 0, basics move by -sigma*t*w
            double t_best = up_[enter] - lo_[enter]; // bound flip
            int leave = -1;                          // basis position
            int leave_to_upper = 0;
            for (int k = 0; k < m_; ++k) {
                const double wk = sigma * w_[k];
                if (wk > pivot_tol) {
                    if (!std::isfinite(lo_[basis_[k]])) continue;
                    const double t = (xb_[k] - lo_[basis_[k]]) / wk;
                    if (t < t_best - 1e-12 ||
                        (t < t_best + 1e-12 && better_leave(k, leave, bland))) {
                        t_best = std::max(t, 0.0);
                        leave = k;
                        leave_to_upper = 0;
                    }
                } else if (wk < -pivot_tol) {
                    if (!std::isfinite(up_[basis_[k]])) continue;
                    const double t = (up_[basis_[k]] - xb_[k]) / (-wk);
                    if (t < t_best - 1e-12 ||
                        (t < t_best + 1e-12 && better_leave(k, leave, bland))) {
                        t_best = std::max(t, 0.0);
                        leave = k;
                        leave_to_upper = 1;
                    }
                }
            }
            if (!std::isfinite(t_best))
                throw std::logic_error("simplex: unbounded direction in a box-bounded problem");

            ++iterations_;
            degen_run = t_best <= degen_tol ? degen_run + 1 : 0;
            if (degen_run > 64 + m_) bland = true;
            else if (t_best > 1e-8) bland = false;

            if (leave < 0) {
                // bound flip, basis unchanged
                for (int k = 0; k < m_; ++k) xb_[k] -= sigma * t_best * w_[k];
                status_[enter] = status_[enter] == AtLower ? AtUpper : AtLower;
                nb_value_[enter] = status_[enter] == AtLower ? lo_[enter] : up_[enter];
                continue;
            }

            const int leaving_var = basis_[leave];
            const double enter_value =
                (status_[enter] == AtLower ? lo_[enter] : up_[enter]) + sigma * t_best;
            for (int k = 0; k < m_; ++k) xb_[k] -= sigma * t_best * w_[k];

            status_[leaving_var] = leave_to_upper ? AtUpper : AtLower;
            nb_value_[leaving_var] = leave_to_upper ? up_[leaving_var] : lo_[leaving_var];

            // basis inverse update on pivot row
            const double piv = w_[leave];
            double* prow = &binv_[static_cast<std::size_t>(leave) * m_];
            for (int i = 0; i < m_; ++i) prow[i] /= piv;
            for (int k = 0; k < m_; ++k) {
                if (k == leave || w_[k] == 0.0) continue;
                double* krow = &binv_[static_cast<std::size_t>(k) * m_];
                const double f = w_[k];
                for (int i = 0; i < m_; ++i) krow[i] -= f * prow[i];
            }

            basis_[leave] = enter;
            xb_[leave] = enter_value;
            status_[enter] = Basic;
        }
    }

    bool better_leave(int k, int current, bool bland) const {
        if (current < 0) return true;
        if (bland) return basis_[k] < basis_[current];
        const double a = std::abs(w_[k]), b = std::abs(w_[current]);
        if (a != b) return a > b; // larger pivot for stability
        return basis_[k] < basis_[current];
    }

    void phase1() {
        iterate(phase1_cost_, true);
        recompute_xb();
        infeasibility_ = 0.0;
        for (int k = 0; k < m_; ++k)
            if (artificial_[basis_[k]]) infeasibility_ += std::max(xb_[k], 0.0);
    }

    // drive residual basic artificials out of the basis where possible;
    // linearly dependent rows keep theirs pinned at zero
    void evict_artificials() {
        for (int k = 0; k < m_; ++k) {
            if (!artificial_[basis_[k]]) continue;
            int found = -1;
            for (int j = 0; j < n_total_ && found < 0; ++j) {
                if (status_[j] == Basic || artificial_[j] || lo_[j] == up_[j]) continue;
                double e = 0.0;
                for (const auto& [i, v] : cols_[j])
                    e += binv_[static_cast<std::size_t>(k) * m_ + i] * v;
                if (std::abs(e) > 1e-7) found = j;
            }
            if (found < 0) {
                up_[basis_[k]] = 0.0; // pin: the row is redundant
                continue;
            }
            compute_direction(found);
            const double piv = w_[k];
            double* prow = &binv_[static_cast<std::size_t>(k) * m_];
            for (int i = 0; i < m_; ++i) prow[i] /= piv;
            for (int r = 0; r < m_; ++r) {
                if (r == k || w_[r] == 0.0) continue;
                double* rrow = &binv_[static_cast<std::size_t>(r) * m_];
                const double f = w_[r];
                for (int i = 0; i < m_; ++i) rrow[i] -= f * prow[i];
            }
            status_[basis_[k]] = AtLower;
            nb_value_[basis_[k]] = 0.0;
            up_[basis_[k]] = 0.0;
            basis_[k] = found;
            status_[found] = Basic;
            recompute_xb();
        }
        // artificials may never re-enter
        for (int j = 0; j < n_total_; ++j)
            if (artificial_[j] && status_[j] != Basic) { lo_[j] = 0.0; up_[j] = 0.0; nb_value_[j] = 0.0; }
    }

    void phase2() {
        iterate(cost_, false);
        recompute_xb();
    }

    void report_violation(LpResult& res) {
        res.worst_row = -1;
        res.worst_violation = 0.0;
        for (int k = 0; k < m_; ++k) {
            if (!artificial_[basis_[k]]) continue;
            // row index of this artificial
            const int row = cols_[basis_[k]][0].first;
            const double viol = std::abs(xb_[k]) / row_scale_[row];
            if (viol > res.worst_violation) {
                res.worst_violation = viol;
                res.worst_row = row;
            }
        }
    }
};

inline LpResult solve_lp(const LpProblem& p) { return SimplexSolver(p).solve(false); }
inline LpResult lp_feasible(const LpProblem& p) { return SimplexSolver(p).solve(true); }

} // namespace pra
