#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <span>
#include <vector>

#include "cirl/linalg.hpp"
#include "cirl/mdp.hpp"

namespace cirl {

inline constexpr double kDefaultTolerance = 1e-10;

namespace detail {

inline void bellman_q(const TabularMdp& mdp, std::span<const double> r, std::span<const double> v,
                      std::span<double> q) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const auto nx = mdp.next(s, a);
            double acc = 0.0;
            for (std::size_t s2 = 0; s2 < S; ++s2) acc += nx[s2] * v[s2];
            q[s * A + a] = r[s * A + a] + g * acc;
        }
}

inline double log_sum_exp(std::span<const double> x, double scale) {
    double m = -std::numeric_limits<double>::infinity();
    for (double xi : x) m = std::max(m, xi / scale);
    double acc = 0.0;
    for (double xi : x) acc += std::exp(xi / scale - m);
    return scale * (m + std::log(acc));
}

inline constexpr double kAdvantageResidual = 1e-10;

// Sweep threshold for value iteration: the accuracy target, capped so that
// max_a A(s,a) = 0 holds to kAdvantageResidual, and floored near machine
// precision so that large |V| at γ close to 1 still terminates.
inline double sweep_threshold(double tol, double gamma, double vmax) {
    const double target = gamma > 0.0 ? tol * (1.0 - gamma) / (2.0 * gamma) : tol;
    const double noise = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, vmax);
    return std::max(std::min(target, kAdvantageResidual), noise);
}

}  // namespace detail

/// q(s,a) = r(s,a) + γ Σ p(s'|s,a) v(s').
inline Matrix q_from_v(const TabularMdp& mdp, const RewardTable& r, std::span<const double> v) {
    require_shape(mdp, r.num_states(), r.num_actions(), "q_from_v");
    Matrix q(mdp.num_states(), mdp.num_actions());
    detail::bellman_q(mdp, r.flat(), v, q.flat());
    return q;
}

/// Rowwise argmax, lowest action index on ties.
inline std::vector<std::size_t> greedy_actions(const Matrix& q) {
    std::vector<std::size_t> out(q.rows());
    for (std::size_t s = 0; s < q.rows(); ++s) {
        const auto row = q.row(s);
        out[s] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

inline PolicyTable greedy_policy(const Matrix& q) {
    return PolicyTable::from_actions(greedy_actions(q), q.cols());
}

inline ValueFunctions value_iteration(const TabularMdp& mdp, const RewardTable& r, double tol = kDefaultTolerance) {
    if (!(tol > 0.0)) throw DomainError("value_iteration: tol must be positive");
    require_shape(mdp, r.num_states(), r.num_actions(), "value_iteration");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> v(S, 0.0), next(S);
    Matrix q(S, A);
    for (;;) {
        detail::bellman_q(mdp, r.flat(), v, q.flat());
        double delta = 0.0, vmax = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const auto row = q.row(s);
            next[s] = *std::max_element(row.begin(), row.end());
            delta = std::max(delta, std::abs(next[s] - v[s]));
            vmax = std::max(vmax, std::abs(next[s]));
        }
        v.swap(next);
        if (delta <= detail::sweep_threshold(tol, mdp.discount(), vmax)) break;
    }
    detail::bellman_q(mdp, r.flat(), v, q.flat());
    Matrix adv(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) adv(s, a) = q(s, a) - v[s];
    return {std::move(v), std::move(q), std::move(adv)};
}

inline SoftValueFunctions soft_value_iteration(const TabularMdp& mdp, const RewardTable& r, double lambda,
                                               double tol = kDefaultTolerance) {
    if (!(lambda > 0.0)) throw DomainError("soft_value_iteration: lambda must be positive");
    if (!(tol > 0.0)) throw DomainError("soft_value_iteration: tol must be positive");
    require_shape(mdp, r.num_states(), r.num_actions(), "soft_value_iteration");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> v(S, 0.0), next(S);
    Matrix q(S, A);
    for (;;) {
        detail::bellman_q(mdp, r.flat(), v, q.flat());
        double delta = 0.0, vmax = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            next[s] = detail::log_sum_exp(q.row(s), lambda);
            delta = std::max(delta, std::abs(next[s] - v[s]));
            vmax = std::max(vmax, std::abs(next[s]));
        }
        v.swap(next);
        if (delta <= detail::sweep_threshold(tol, mdp.discount(), vmax)) break;
    }
    detail::bellman_q(mdp, r.flat(), v, q.flat());
    Matrix adv(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) adv(s, a) = q(s, a) - v[s];
    return {std::move(v), std::move(q), std::move(adv), lambda};
}

/// W(s,s') = 1{s=s'} − γ Σ_a π(a|s) p(s'|s,a).
inline Matrix w_matrix(const TabularMdp& mdp, const PolicyTable& policy) {
    require_shape(mdp, policy.num_states(), policy.num_actions(), "w_matrix");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
    Matrix w = Matrix::identity(S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double pa = policy(s, a);
            if (pa == 0.0) continue;
            const auto nx = mdp.next(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2) w(s, s2) -= g * pa * nx[s2];
        }
    return w;
}

/// k_π = |det W|^(-1/S).
inline double k_pi(const TabularMdp& mdp, const PolicyTable& policy) {
    const LuFactorization lu(w_matrix(mdp, policy));
    return std::pow(std::abs(lu.determinant()), -1.0 / static_cast<double>(mdp.num_states()));
}

inline ValueFunctions policy_evaluation(const TabularMdp& mdp, const PolicyTable& policy, const RewardTable& r) {
    require_shape(mdp, r.num_states(), r.num_actions(), "policy_evaluation");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> rpi(S, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) rpi[s] += policy(s, a) * r(s, a);
    const LuFactorization lu(w_matrix(mdp, policy));
    lu.solve_in_place(rpi);
    Matrix q = q_from_v(mdp, r, rpi);
    Matrix adv(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) adv(s, a) = q(s, a) - rpi[s];
    return {std::move(rpi), std::move(q), std::move(adv)};
}

/// Solves Wᵀ d = (1−γ) e_{s0} for the state marginal, then d(s,a) = d(s)π(a|s).
inline OccupancyMeasure occupancy_measure(const TabularMdp& mdp, const PolicyTable& policy) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const LuFactorization lu(w_matrix(mdp, policy));
    std::vector<double> ds(S, 0.0);
    ds[mdp.initial_state()] = 1.0 - mdp.discount();
    lu.solve_transposed_in_place(ds);
    double total = 0.0;
    for (double& x : ds) {
        x = std::max(x, 0.0);
        total += x;
    }
    Matrix d(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) d(s, a) = ds[s] / total * policy(s, a);
    return OccupancyMeasure(std::move(d));
}

/// States reachable from s0 along edges with π(a|s)·p(s'|s,a) > 0.
inline StateSet reachable_support(const TabularMdp& mdp, const PolicyTable& policy) {
    require_shape(mdp, policy.num_states(), policy.num_actions(), "reachable_support");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    StateSet seen(S);
    std::deque<std::size_t> frontier{mdp.initial_state()};
    seen.insert(mdp.initial_state());
    while (!frontier.empty()) {
        const std::size_t s = frontier.front();
        frontier.pop_front();
        for (std::size_t a = 0; a < A; ++a) {
            if (policy(s, a) == 0.0) continue;
            const auto nx = mdp.next(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2) {
                if (nx[s2] != 0.0 && !seen.contains(s2)) {
                    seen.insert(s2);
                    frontier.push_back(s2);
                }
            }
        }
    }
    return seen;
}

/// Rowwise softmax of q / temperature.
inline PolicyTable boltzmann_policy(const Matrix& q, double temperature) {
    if (!(temperature > 0.0)) throw DomainError("boltzmann_policy: temperature must be positive");
    Matrix p(q.rows(), q.cols());
    for (std::size_t s = 0; s < q.rows(); ++s) {
        const auto row = q.row(s);
        const double m = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (std::size_t a = 0; a < q.cols(); ++a) z += (p(s, a) = std::exp((row[a] - m) / temperature));
        double sum = 0.0;
        for (std::size_t a = 0; a < q.cols(); ++a) sum += (p(s, a) /= z);
        // Pin the row sum to 1 against rounding.
        const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        p(s, best) += 1.0 - sum;
    }
    return PolicyTable(std::move(p));
}

inline PolicyTable soft_optimal_policy(const SoftValueFunctions& soft) {
    return boltzmann_policy(soft.q, soft.lambda);
}

/**
 * Exact optimal values by Howard policy iteration.
 *
 * Keeps its buffers between calls so that Monte-Carlo loops can reuse one
 * instance per worker. Holds a pointer to the MDP, which must outlive it.
 */
class PolicyIteration {
public:
    explicit PolicyIteration(const TabularMdp& mdp)
        : mdp_(&mdp), S_(mdp.num_states()), A_(mdp.num_actions()), w_(S_ * S_), v_(S_), q_(S_ * A_),
          policy_(S_, 0) {}

    const TabularMdp& mdp() const noexcept { return *mdp_; }

    /// Evaluates the deterministic policy `actions` under reward `r` (flat S×A).
    void evaluate(std::span<const double> r, std::span<const std::size_t> actions) {
        std::copy(actions.begin(), actions.end(), policy_.begin());
        evaluate_current(r);
    }

    /// Finds an optimal deterministic policy, starting from `start` if given.
    /// The final policy is the lowest-index greedy policy of Q*.
    void solve(std::span<const double> r, std::span<const std::size_t> start = {}) {
        if (start.empty()) std::fill(policy_.begin(), policy_.end(), std::size_t{0});
        else std::copy(start.begin(), start.end(), policy_.begin());
        evaluate_current(r);
        for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
            bool changed = false;
            for (std::size_t s = 0; s < S_; ++s) {
                const double cur = q_[s * A_ + policy_[s]];
                const double slack = kImproveTol * (1.0 + std::abs(cur));
                std::size_t best = policy_[s];
                double best_q = cur + slack;
                for (std::size_t a = 0; a < A_; ++a) {
                    if (q_[s * A_ + a] > best_q) {
                        best_q = q_[s * A_ + a];
                        best = a;
                    }
                }
                if (best != policy_[s]) {
                    policy_[s] = best;
                    changed = true;
                }
            }
            if (!changed) break;
            evaluate_current(r);
        }
        bool retie = false;
        for (std::size_t s = 0; s < S_; ++s) {
            const double* row = &q_[s * A_];
            const double m = *std::max_element(row, row + A_);
            const double slack = kImproveTol * (1.0 + std::abs(m));
            for (std::size_t a = 0; a < A_; ++a) {
                if (row[a] >= m - slack) {
                    if (a != policy_[s]) {
                        policy_[s] = a;
                        retie = true;
                    }
                    break;
                }
            }
        }
        if (retie) evaluate_current(r);
    }

    std::span<const double> v() const noexcept { return v_; }
    std::span<const double> q() const noexcept { return q_; }
    double q(std::size_t s, std::size_t a) const { return q_[s * A_ + a]; }
    std::span<const std::size_t> policy() const noexcept { return policy_; }
    /// |det W| of the current policy.
    double abs_det_w() const noexcept { return abs_det_; }

private:
    static constexpr double kImproveTol = 1e-12;
    static constexpr std::size_t kMaxIterations = 10000;

    void evaluate_current(std::span<const double> r) {
        const double g = mdp_->discount();
        std::fill(w_.begin(), w_.end(), 0.0);
        for (std::size_t s = 0; s < S_; ++s) {
            const auto nx = mdp_->next(s, policy_[s]);
            double* row = &w_[s * S_];
            for (std::size_t s2 = 0; s2 < S_; ++s2) row[s2] = -g * nx[s2];
            row[s] += 1.0;
            v_[s] = r[s * A_ + policy_[s]];
        }
        lu_.factor(w_, S_);
        abs_det_ = std::abs(lu_.determinant());
        lu_.solve_in_place(v_);
        detail::bellman_q(*mdp_, r, v_, q_);
    }

    const TabularMdp* mdp_;
    std::size_t S_, A_;
    std::vector<double> w_, v_, q_;
    std::vector<std::size_t> policy_;
    LuFactorization lu_;
    double abs_det_ = 1.0;
};

/// Exact V*, Q*, A* obtained by policy iteration.
inline ValueFunctions optimal_values_exact(const TabularMdp& mdp, const RewardTable& r) {
    require_shape(mdp, r.num_states(), r.num_actions(), "optimal_values_exact");
    PolicyIteration pi(mdp);
    pi.solve(r.flat());
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    std::vector<double> v(pi.v().begin(), pi.v().end());
    Matrix q(S, A), adv(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            q(s, a) = pi.q(s, a);
            adv(s, a) = q(s, a) - v[s];
        }
    return {std::move(v), std::move(q), std::move(adv)};
}

}  // namespace cirl
