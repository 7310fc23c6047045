#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cirl/dynamic_programming.hpp"
#include "cirl/linalg.hpp"
#include "cirl/mdp.hpp"

namespace cirl {

enum class ModelKind { Opt, Mce, Birl };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Opt: return "opt";
        case ModelKind::Mce: return "mce";
        case ModelKind::Birl: return "birl";
    }
    return "?";
}

/// Relation assumed between expert policy and reward: optimal, soft-optimal
/// with entropy weight λ, or Boltzmann in Q* with temperature β.
class BehaviorModel {
public:
    static BehaviorModel opt() { return BehaviorModel(ModelKind::Opt, 0.0); }
    static BehaviorModel mce(double lambda) {
        if (!(lambda > 0.0)) throw DomainError("BehaviorModel: lambda must be positive");
        return BehaviorModel(ModelKind::Mce, lambda);
    }
    static BehaviorModel birl(double beta) {
        if (!(beta > 0.0)) throw DomainError("BehaviorModel: beta must be positive");
        return BehaviorModel(ModelKind::Birl, beta);
    }

    ModelKind kind() const noexcept { return kind_; }
    /// λ for MCE, β for BIRL, 0 for OPT.
    double coefficient() const noexcept { return coef_; }

    friend bool operator==(const BehaviorModel&, const BehaviorModel&) = default;

private:
    BehaviorModel(ModelKind k, double c) : kind_(k), coef_(c) {}
    ModelKind kind_;
    double coef_;
};

/// Constants C₁, C₂ bounding the value and advantage functions.
class BoundedSetParams {
public:
    BoundedSetParams(double c1, double c2, BehaviorModel model) : c1_(c1), c2_(c2), model_(model) {
        if (!(c1_ > 0.0) || !(c2_ > 0.0)) throw DomainError("BoundedSetParams: c1 and c2 must be positive");
    }

    /// The smallest constants for which the unit hypercube of rewards is included.
    static BoundedSetParams defaults(BehaviorModel model, double gamma, std::size_t num_actions) {
        if (model.kind() == ModelKind::Mce) {
            const double c = (2.0 + model.coefficient() * std::log(static_cast<double>(num_actions))) / (1.0 - gamma);
            return BoundedSetParams(c, c, model);
        }
        const double c = (1.0 + gamma) / (1.0 - gamma);
        return BoundedSetParams(c, c, model);
    }

    /// Checks the advantage-bound condition needed for a policy floor π_min.
    void validate_pi_min(double pi_min, std::size_t num_actions) const {
        if (!(pi_min > 0.0 && pi_min <= 1.0)) throw DomainError("BoundedSetParams: pi_min must lie in (0,1]");
        if (model_.kind() == ModelKind::Mce) {
            const double need = model_.coefficient() * std::log(1.0 / pi_min);
            if (c2_ < need) throw DomainError("BoundedSetParams: c2 below lambda*log(1/pi_min)");
        } else if (model_.kind() == ModelKind::Birl) {
            const double need = model_.coefficient() * std::log(1.0 / (static_cast<double>(num_actions) * pi_min));
            if (c2_ < need) throw DomainError("BoundedSetParams: c2 below beta*log(1/(A*pi_min))");
        }
    }

    double c1() const noexcept { return c1_; }
    double c2() const noexcept { return c2_; }
    const BehaviorModel& model() const noexcept { return model_; }

private:
    double c1_, c2_;
    BehaviorModel model_;
};

/// Advantage table of a deterministic policy: 0 at the policy's action, ≤ 0 elsewhere.
class AdvantageGap {
public:
    AdvantageGap(Matrix values, const PolicyTable& det_policy) : values_(std::move(values)) {
        if (values_.rows() != det_policy.num_states() || values_.cols() != det_policy.num_actions())
            throw DomainError("AdvantageGap: shape mismatch");
        for (std::size_t s = 0; s < values_.rows(); ++s) {
            const std::size_t pa = det_policy.action(s);
            for (std::size_t a = 0; a < values_.cols(); ++a) {
                const double x = values_(s, a);
                if (!std::isfinite(x)) throw DomainError("AdvantageGap: non-finite entry");
                if (a == pa && x != 0.0) throw DomainError("AdvantageGap: nonzero gap at the policy action");
                if (x > 0.0) throw DomainError("AdvantageGap: positive gap");
            }
        }
    }

    double operator()(std::size_t s, std::size_t a) const { return values_(s, a); }
    const Matrix& values() const noexcept { return values_; }

private:
    Matrix values_;
};

namespace detail {
inline void add_shaping(const TabularMdp& mdp, std::span<const double> v, Matrix& r) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const auto nx = mdp.next(s, a);
            double ev = 0.0;
            for (std::size_t s2 = 0; s2 < S; ++s2) ev += nx[s2] * v[s2];
            r(s, a) += v[s] - g * ev;
        }
}
}  // namespace detail

/// r(s,a) = V(s) − γ Σ p(s'|s,a) V(s') + gap(s,a).
inline RewardTable t_operator(const TabularMdp& mdp, const PolicyTable& det_policy, std::span<const double> v,
                              const AdvantageGap& gaps) {
    if (!det_policy.deterministic()) throw DomainError("t_operator: policy must be deterministic");
    require_shape(mdp, det_policy.num_states(), det_policy.num_actions(), "t_operator");
    if (v.size() != mdp.num_states()) throw DomainError("t_operator: value vector has wrong length");
    Matrix r = gaps.values();
    detail::add_shaping(mdp, v, r);
    return RewardTable(std::move(r));
}

/// r(s,a) = V(s) − γ Σ p(s'|s,a) V(s') + η(s,a).
inline RewardTable u_operator(const TabularMdp& mdp, const RewardTable& eta, std::span<const double> v) {
    require_shape(mdp, eta.num_states(), eta.num_actions(), "u_operator");
    if (v.size() != mdp.num_states()) throw DomainError("u_operator: value vector has wrong length");
    Matrix r = eta.values();
    detail::add_shaping(mdp, v, r);
    return RewardTable(std::move(r));
}

inline void require_positive_policy(const PolicyTable& policy, const char* what) {
    for (double x : policy.probs().flat())
        if (!(x > 0.0)) throw DomainError(std::string(what) + ": policy has a zero-probability entry");
}

/// λ log π(a|s).
inline RewardTable eta_mce(const PolicyTable& policy, double lambda) {
    if (!(lambda > 0.0)) throw DomainError("eta_mce: lambda must be positive");
    require_positive_policy(policy, "eta_mce");
    Matrix m(policy.num_states(), policy.num_actions());
    for (std::size_t s = 0; s < m.rows(); ++s)
        for (std::size_t a = 0; a < m.cols(); ++a) m(s, a) = lambda * std::log(policy(s, a));
    return RewardTable(std::move(m));
}

/// β log(π(a|s) / max_a' π(a'|s)).
inline RewardTable eta_birl(const PolicyTable& policy, double beta) {
    if (!(beta > 0.0)) throw DomainError("eta_birl: beta must be positive");
    require_positive_policy(policy, "eta_birl");
    Matrix m(policy.num_states(), policy.num_actions());
    for (std::size_t s = 0; s < m.rows(); ++s) {
        const auto row = policy.row(s);
        const double mx = *std::max_element(row.begin(), row.end());
        for (std::size_t a = 0; a < m.cols(); ++a) m(s, a) = row[a] == mx ? 0.0 : beta * std::log(row[a] / mx);
    }
    return RewardTable(std::move(m));
}

/**
 * Exact optimality queries for the OPT model on a fixed MDP.
 *
 * solve() runs policy iteration once; the queries then read the result.
 * One instance per thread; buffers are reused across calls.
 */
class OptOracle {
public:
    explicit OptOracle(const TabularMdp& mdp) : pi_(mdp) {}

    void solve(std::span<const double> r, std::span<const std::size_t> start = {}) { pi_.solve(r, start); }

    /// Expert action attains max_a Q*(s,a) within tol at each support state.
    bool expert_optimal(std::span<const std::size_t> expert_actions, const StateSet& support, double tol) const {
        const std::size_t S = pi_.mdp().num_states(), A = pi_.mdp().num_actions();
        for (std::size_t s = 0; s < S; ++s) {
            if (!support.contains(s)) continue;
            const double qe = pi_.q(s, expert_actions[s]);
            for (std::size_t a = 0; a < A; ++a)
                if (pi_.q(s, a) > qe + tol) return false;
        }
        return true;
    }

    /// |V^π| ≤ c1·k_π and |A^π| ≤ c2 for the greedy optimal policy π.
    bool bounded(double c1, double c2, double tol) const {
        const std::size_t S = pi_.mdp().num_states(), A = pi_.mdp().num_actions();
        const double k = std::pow(pi_.abs_det_w(), -1.0 / static_cast<double>(S));
        const auto v = pi_.v();
        for (std::size_t s = 0; s < S; ++s) {
            if (std::abs(v[s]) > c1 * k + tol) return false;
            for (std::size_t a = 0; a < A; ++a)
                if (std::abs(pi_.q(s, a) - v[s]) > c2 + tol) return false;
        }
        return true;
    }

    std::span<const std::size_t> greedy() const noexcept { return pi_.policy(); }
    const PolicyIteration& solver() const noexcept { return pi_; }

private:
    PolicyIteration pi_;
};

inline constexpr double kMembershipTolerance = 1e-8;

inline std::vector<std::size_t> support_actions(const PolicyTable& expert, const StateSet& support) {
    std::vector<std::size_t> acts(expert.num_states(), 0);
    for (std::size_t s = 0; s < acts.size(); ++s) {
        if (support.contains(s)) {
            acts[s] = expert.action(s);
        } else {
            const auto row = expert.row(s);
            acts[s] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        }
    }
    return acts;
}

/// Whether `r` lies in the feasible set of `expert` restricted to `support`.
inline bool is_feasible(const TabularMdp& mdp, const PolicyTable& expert, const StateSet& support,
                        const RewardTable& r, const BehaviorModel& model, double tol = kMembershipTolerance) {
    if (!(tol > 0.0)) throw DomainError("is_feasible: tol must be positive");
    require_shape(mdp, expert.num_states(), expert.num_actions(), "is_feasible");
    require_shape(mdp, r.num_states(), r.num_actions(), "is_feasible");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    if (model.kind() == ModelKind::Opt) {
        for (auto s : support.members())
            if (!expert.row_deterministic(s)) throw DomainError("is_feasible: OPT expert must be deterministic on the support");
        const auto acts = support_actions(expert, support);
        OptOracle oracle(mdp);
        oracle.solve(r.flat(), acts);
        return oracle.expert_optimal(acts, support, tol);
    }
    for (auto s : support.members())
        for (std::size_t a = 0; a < A; ++a)
            if (!(expert(s, a) > 0.0)) throw DomainError("is_feasible: expert must be strictly positive on the support");
    PolicyTable model_policy;
    if (model.kind() == ModelKind::Mce) {
        model_policy = soft_optimal_policy(soft_value_iteration(mdp, r, model.coefficient()));
    } else {
        model_policy = boltzmann_policy(optimal_values_exact(mdp, r).q, model.coefficient());
    }
    for (std::size_t s = 0; s < S; ++s) {
        if (!support.contains(s)) continue;
        for (std::size_t a = 0; a < A; ++a)
            if (std::abs(model_policy(s, a) - expert(s, a)) > tol) return false;
    }
    return true;
}

inline bool is_in_bounded_set(const TabularMdp& mdp, const RewardTable& r, const BoundedSetParams& params,
                              double tol = kMembershipTolerance) {
    require_shape(mdp, r.num_states(), r.num_actions(), "is_in_bounded_set");
    const double c1 = params.c1(), c2 = params.c2();
    switch (params.model().kind()) {
        case ModelKind::Opt: {
            OptOracle oracle(mdp);
            oracle.solve(r.flat());
            return oracle.bounded(c1, c2, tol);
        }
        case ModelKind::Mce: {
            const auto soft = soft_value_iteration(mdp, r, params.model().coefficient());
            for (double x : soft.v)
                if (std::abs(x) > c1 + tol) return false;
            return soft.advantage.max_abs() <= c2 + tol;
        }
        case ModelKind::Birl: {
            const auto vf = optimal_values_exact(mdp, r);
            for (double x : vf.v)
                if (std::abs(x) > c1 + tol) return false;
            return vf.advantage.max_abs() <= c2 + tol;
        }
    }
    return false;
}

struct Interval {
    double lower;
    double upper;
    double width() const noexcept { return upper - lower; }
};

/// Axis-aligned box containing the bounded reward set.
inline Interval bounding_box(const BoundedSetParams& params, double gamma) {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("bounding_box: gamma must lie in [0,1)");
    const double up = (1.0 + gamma) / (1.0 - gamma) * params.c1();
    return {-up - params.c2(), up};
}

/**
 * Matrix of the linear map (V, gaps) ↦ reward for a deterministic policy.
 * Columns: the S entries of V, then one column per non-policy pair (s,a) in
 * row-major order. Rows: pairs (s,a) in row-major order.
 */
inline Matrix t_matrix(const TabularMdp& mdp, const PolicyTable& det_policy) {
    if (!det_policy.deterministic()) throw DomainError("t_matrix: policy must be deterministic");
    require_shape(mdp, det_policy.num_states(), det_policy.num_actions(), "t_matrix");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
    Matrix t(S * A, S * A);
    std::size_t gap_col = S;
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t row = s * A + a;
            const auto nx = mdp.next(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2) t(row, s2) = (s == s2 ? 1.0 : 0.0) - g * nx[s2];
            if (a != det_policy.action(s)) t(row, gap_col++) = 1.0;
        }
    return t;
}

struct DeterminantPair {
    double det_t;
    double det_w;
};

inline DeterminantPair t_matrix_determinant_check(const TabularMdp& mdp, const PolicyTable& det_policy) {
    const LuFactorization lt(t_matrix(mdp, det_policy));
    const LuFactorization lw(w_matrix(mdp, det_policy));
    return {std::abs(lt.determinant()), std::abs(lw.determinant())};
}

}  // namespace cirl
