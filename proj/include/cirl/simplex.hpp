#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cirl/linalg.hpp"
#include "cirl/mdp.hpp"

namespace cirl {

/// min cᵀx  s.t.  A_eq x = b_eq,  A_ub x ≤ b_ub,  x ≥ 0.
struct LinearProgram {
    std::vector<double> objective;
    Matrix eq_lhs;
    std::vector<double> eq_rhs;
    Matrix ub_lhs;
    std::vector<double> ub_rhs;

    explicit LinearProgram(std::size_t n = 0) : objective(n, 0.0), eq_lhs(0, n), ub_lhs(0, n) {}

    std::size_t num_vars() const noexcept { return objective.size(); }

    void validate() const {
        const std::size_t n = objective.size();
        if (eq_lhs.rows() != eq_rhs.size() || (eq_lhs.rows() > 0 && eq_lhs.cols() != n))
            throw DomainError("LinearProgram: equality block has inconsistent dimensions");
        if (ub_lhs.rows() != ub_rhs.size() || (ub_lhs.rows() > 0 && ub_lhs.cols() != n))
            throw DomainError("LinearProgram: inequality block has inconsistent dimensions");
        auto finite = [](std::span<const double> xs) {
            return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
        };
        if (!finite(objective) || !finite(eq_lhs.flat()) || !finite(eq_rhs) || !finite(ub_lhs.flat()) ||
            !finite(ub_rhs))
            throw DomainError("LinearProgram: non-finite coefficient");
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective_value = 0.0;
    std::vector<double> dual_eq;  ///< multipliers of the equality rows (free sign)
    std::vector<double> dual_ub;  ///< multipliers of the inequality rows (≤ 0)
    std::size_t iterations = 0;
};

struct SimplexOptions {
    double pivot_tolerance = 1e-9;
    /// Consecutive degenerate pivots after which entering columns follow Bland's rule.
    std::size_t degenerate_run_before_bland = 50;
    bool always_bland = false;
};

namespace detail {

class Tableau {
public:
    Tableau(std::size_t m, std::size_t ncols) : m_(m), w_(ncols + 1), t_(m * (ncols + 1), 0.0), rc_(ncols + 1, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return t_[i * w_ + j]; }
    double at(std::size_t i, std::size_t j) const { return t_[i * w_ + j]; }
    double& rhs(std::size_t i) { return t_[i * w_ + w_ - 1]; }
    double rhs(std::size_t i) const { return t_[i * w_ + w_ - 1]; }
    std::vector<double>& rc() { return rc_; }
    std::size_t rows() const { return m_; }
    std::size_t cols() const { return w_ - 1; }

    void pivot(std::size_t r, std::size_t e) {
        double* pr = &t_[r * w_];
        const double inv = 1.0 / pr[e];
        nz_.clear();
        for (std::size_t j = 0; j < w_; ++j) {
            if (pr[j] != 0.0) {
                pr[j] *= inv;
                nz_.push_back(j);
            }
        }
        pr[e] = 1.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r) continue;
            double* pi = &t_[i * w_];
            const double f = pi[e];
            if (f == 0.0) continue;
            for (std::size_t j : nz_) pi[j] -= f * pr[j];
            pi[e] = 0.0;
        }
        const double f = rc_[e];
        if (f != 0.0) {
            for (std::size_t j : nz_) rc_[j] -= f * pr[j];
            rc_[e] = 0.0;
        }
    }

private:
    std::size_t m_, w_;
    std::vector<double> t_;
    std::vector<double> rc_;  // reduced costs; last entry holds −objective
    std::vector<std::size_t> nz_;
};

}  // namespace detail

/**
 * Two-phase primal simplex on a dense tableau.
 *
 * Entering columns use the most negative reduced cost, switching to Bland's
 * smallest-index rule during long degenerate runs; ratio-test ties go to the
 * basic variable of lowest index. The returned x is recomputed from the
 * original data on the final basis.
 */
inline LpSolution solve(const LinearProgram& lp, const SimplexOptions& opt = {}) {
    lp.validate();
    const std::size_t n = lp.num_vars();
    const std::size_t me = lp.eq_rhs.size(), mu = lp.ub_rhs.size();
    const std::size_t m = me + mu;
    const double tol = opt.pivot_tolerance;

    // Standard form rows with nonnegative right-hand side.
    const std::size_t n_std = n + mu;
    Matrix a_std(m, n_std);
    std::vector<double> b_std(m);
    std::vector<double> row_sign(m, 1.0);
    for (std::size_t i = 0; i < m; ++i) {
        const bool eq = i < me;
        const double b = eq ? lp.eq_rhs[i] : lp.ub_rhs[i - me];
        const double sg = b < 0.0 ? -1.0 : 1.0;
        row_sign[i] = sg;
        for (std::size_t j = 0; j < n; ++j) a_std(i, j) = sg * (eq ? lp.eq_lhs(i, j) : lp.ub_lhs(i - me, j));
        if (!eq) a_std(i, n + (i - me)) = sg;
        b_std[i] = sg * b;
    }

    // Initial basis: slacks, then singleton structural columns, then artificials.
    std::vector<std::size_t> col_count(n_std, 0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n_std; ++j)
            if (a_std(i, j) != 0.0) ++col_count[j];
    std::vector<std::size_t> basis(m, std::numeric_limits<std::size_t>::max());
    std::vector<char> used(n_std, 0);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (i >= me && a_std(i, n + (i - me)) > 0.0) {
            basis[i] = n + (i - me);
            used[basis[i]] = 1;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!used[j] && col_count[j] == 1 && a_std(i, j) > 0.0) {
                basis[i] = j;
                used[j] = 1;
                break;
            }
        }
        if (basis[i] == std::numeric_limits<std::size_t>::max()) ++n_art;
    }
    const std::size_t ncols = n_std + n_art;
    detail::Tableau tab(m, ncols);
    std::vector<char> is_art(ncols, 0);
    std::vector<std::size_t> art_row(n_art, 0);
    {
        std::size_t next_art = n_std;
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n_std; ++j) tab.at(i, j) = a_std(i, j);
            tab.rhs(i) = b_std[i];
            if (basis[i] == std::numeric_limits<std::size_t>::max()) {
                basis[i] = next_art;
                is_art[next_art] = 1;
                art_row[next_art - n_std] = i;
                tab.at(i, next_art) = 1.0;
                ++next_art;
            } else {
                const double c = tab.at(i, basis[i]);
                if (c != 1.0) {
                    for (std::size_t j = 0; j < n_std; ++j) tab.at(i, j) /= c;
                    tab.rhs(i) /= c;
                }
            }
        }
    }

    LpSolution sol;
    std::size_t iterations = 0;
    const std::size_t max_iter = 100 * (m + ncols) + 10000;

    // Returns false when unbounded.
    auto run_phase = [&](bool phase1) -> bool {
        std::size_t degenerate_run = 0;
        auto& rc = tab.rc();
        for (;;) {
            if (++iterations > max_iter) throw std::runtime_error("simplex: iteration limit exceeded");
            const bool bland = opt.always_bland || degenerate_run >= opt.degenerate_run_before_bland;
            std::size_t e = ncols;
            double best = -tol;
            for (std::size_t j = 0; j < ncols; ++j) {
                if (!phase1 && is_art[j]) continue;
                if (rc[j] < best) {
                    e = j;
                    if (bland) break;
                    best = rc[j];
                }
            }
            if (e == ncols) return true;
            std::size_t r = m;
            double min_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m; ++i) {
                const double a = tab.at(i, e);
                if (a <= tol) continue;
                const double ratio = tab.rhs(i) / a;
                if (r == m || ratio < min_ratio - 1e-12 * (1.0 + std::abs(min_ratio))) {
                    r = i;
                    min_ratio = ratio;
                } else if (ratio <= min_ratio + 1e-12 * (1.0 + std::abs(min_ratio)) && basis[i] < basis[r]) {
                    r = i;
                    min_ratio = std::min(min_ratio, ratio);
                }
            }
            if (r == m) return false;
            degenerate_run = min_ratio <= tol ? degenerate_run + 1 : 0;
            tab.pivot(r, e);
            if (tab.rhs(r) < 0.0) tab.rhs(r) = 0.0;
            basis[r] = e;
        }
    };

    double bnorm = 0.0;
    for (double b : b_std) bnorm = std::max(bnorm, b);

    if (n_art > 0) {
        auto& rc = tab.rc();
        std::fill(rc.begin(), rc.end(), 0.0);
        for (std::size_t j = 0; j < ncols; ++j)
            if (is_art[j]) rc[j] = 1.0;
        for (std::size_t i = 0; i < m; ++i) {
            if (!is_art[basis[i]]) continue;
            for (std::size_t j = 0; j <= ncols; ++j) rc[j] -= tab.at(i, j);
        }
        run_phase(true);
        double infeas = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            if (is_art[basis[i]]) infeas += tab.rhs(i);
        if (infeas > 1e-8 * (1.0 + bnorm)) {
            sol.status = LpStatus::Infeasible;
            sol.iterations = iterations;
            return sol;
        }
        // Drive remaining artificials out of the basis where possible.
        for (std::size_t i = 0; i < m; ++i) {
            if (!is_art[basis[i]]) continue;
            std::size_t best_j = ncols;
            double best_a = tol;
            for (std::size_t j = 0; j < n_std; ++j) {
                if (std::abs(tab.at(i, j)) > best_a) {
                    best_a = std::abs(tab.at(i, j));
                    best_j = j;
                }
            }
            if (best_j < ncols) {
                tab.pivot(i, best_j);
                basis[i] = best_j;
            }
        }
    }

    {
        auto& rc = tab.rc();
        std::fill(rc.begin(), rc.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) rc[j] = lp.objective[j];
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t bj = basis[i];
            const double cb = bj < n ? lp.objective[bj] : 0.0;
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= ncols; ++j) rc[j] -= cb * tab.at(i, j);
        }
        for (std::size_t i = 0; i < m; ++i) tab.rc()[basis[i]] = 0.0;
    }
    if (!run_phase(false)) {
        sol.status = LpStatus::Unbounded;
        sol.iterations = iterations;
        return sol;
    }

    // Recompute the basic solution and duals from the original data.
    Matrix bmat(m, m);
    std::vector<double> cb(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t bj = basis[i];
        if (bj < n_std) {
            for (std::size_t k = 0; k < m; ++k) bmat(k, i) = a_std(k, bj);
            if (bj < n) cb[i] = lp.objective[bj];
        } else {
            // Artificial left on a redundant row.
            bmat(art_row[bj - n_std], i) = 1.0;
        }
    }
    std::vector<double> xfull(n_std, 0.0);
    std::vector<double> y(m, 0.0);
    LuFactorization lu;
    if (m > 0) {
        lu.factor(bmat);
        if (lu.singular()) {
            for (std::size_t i = 0; i < m; ++i)
                if (basis[i] < n_std) xfull[basis[i]] = std::max(0.0, tab.rhs(i));
        } else {
            std::vector<double> xb = b_std;
            lu.solve_in_place(xb);
            for (std::size_t i = 0; i < m; ++i)
                if (basis[i] < n_std) xfull[basis[i]] = std::max(0.0, xb[i]);
            y = cb;
            lu.solve_transposed_in_place(y);
        }
    }
    for (std::size_t i = 0; i < m; ++i) {
        // Artificials on redundant rows: the row is implied by the others.
        if (basis[i] >= n_std) y[i] = 0.0;
    }
    sol.status = LpStatus::Optimal;
    sol.x.assign(xfull.begin(), xfull.begin() + static_cast<std::ptrdiff_t>(n));
    sol.objective_value = 0.0;
    for (std::size_t j = 0; j < n; ++j) sol.objective_value += lp.objective[j] * sol.x[j];
    sol.dual_eq.resize(me);
    sol.dual_ub.resize(mu);
    for (std::size_t i = 0; i < me; ++i) sol.dual_eq[i] = row_sign[i] * y[i];
    for (std::size_t i = 0; i < mu; ++i) sol.dual_ub[i] = row_sign[me + i] * y[me + i];
    sol.iterations = iterations;

    double rhs_norm = 0.0;
    for (double b : lp.eq_rhs) rhs_norm = std::max(rhs_norm, std::abs(b));
    for (double b : lp.ub_rhs) rhs_norm = std::max(rhs_norm, std::abs(b));
    const double limit = 1e-7 * (1.0 + rhs_norm);
    for (std::size_t i = 0; i < me; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += lp.eq_lhs(i, j) * sol.x[j];
        if (std::abs(acc - lp.eq_rhs[i]) > limit) throw std::runtime_error("simplex: equality residual above tolerance");
    }
    for (std::size_t i = 0; i < mu; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += lp.ub_lhs(i, j) * sol.x[j];
        if (acc - lp.ub_rhs[i] > limit) throw std::runtime_error("simplex: inequality residual above tolerance");
    }
    return sol;
}

struct DualCertificate {
    double dual_objective;
    double gap;                ///< |primal − dual objective|
    double max_infeasibility;  ///< worst violation of dual feasibility
};

/// Checks the duals of an Optimal solution: Aᵀy ≤ c, y_ub ≤ 0, equal objectives.
inline DualCertificate check_dual_certificate(const LinearProgram& lp, const LpSolution& sol) {
    if (sol.status != LpStatus::Optimal) throw DomainError("check_dual_certificate: solution is not optimal");
    const std::size_t n = lp.num_vars();
    double dual_obj = 0.0, worst = 0.0;
    for (std::size_t i = 0; i < lp.eq_rhs.size(); ++i) dual_obj += lp.eq_rhs[i] * sol.dual_eq[i];
    for (std::size_t i = 0; i < lp.ub_rhs.size(); ++i) {
        dual_obj += lp.ub_rhs[i] * sol.dual_ub[i];
        worst = std::max(worst, sol.dual_ub[i]);
    }
    for (std::size_t j = 0; j < n; ++j) {
        double aty = 0.0;
        for (std::size_t i = 0; i < lp.eq_rhs.size(); ++i) aty += lp.eq_lhs(i, j) * sol.dual_eq[i];
        for (std::size_t i = 0; i < lp.ub_rhs.size(); ++i) aty += lp.ub_lhs(i, j) * sol.dual_ub[i];
        worst = std::max(worst, aty - lp.objective[j]);
    }
    return {dual_obj, std::abs(dual_obj - sol.objective_value), worst};
}

}  // namespace cirl
