#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "cirl/dynamic_programming.hpp"
#include "cirl/mdp.hpp"
#include "cirl/reward_geometry.hpp"
#include "cirl/rng.hpp"
#include "cirl/simplex.hpp"

namespace cirl {

/// Cost table c and budget k restricting policies to V^π(s0; c) ≤ k.
struct ConstraintSpec {
    RewardTable cost;
    double budget = 0.0;

    ConstraintSpec(RewardTable c, double k) : cost(std::move(c)), budget(k) {
        if (!(budget >= 0.0) || !std::isfinite(budget)) throw DomainError("ConstraintSpec: budget must be finite and nonnegative");
    }
};

/// How the budget enters the occupancy LP.
enum class BudgetConvention {
    Discounted,  ///< Σ d·c ≤ (1−γ)k, i.e. V^π(s0; c) ≤ k
    Occupancy,   ///< Σ d·c ≤ k
};

struct ConstrainedPlan {
    PolicyTable policy;
    OccupancyMeasure occupancy;
    double value;
};

/// π(a|s) = d(s,a)/Σ_a' d(s,a'); states with mass ≤ 1e-12 get the uniform row.
inline PolicyTable policy_from_occupancy(const OccupancyMeasure& d) {
    const std::size_t S = d.num_states(), A = d.num_actions();
    Matrix p(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        const double mass = d.state_mass(s);
        if (mass <= 1e-12) {
            for (std::size_t a = 0; a < A; ++a) p(s, a) = 1.0 / static_cast<double>(A);
            continue;
        }
        double sum = 0.0;
        std::size_t best = 0;
        for (std::size_t a = 0; a < A; ++a) {
            sum += (p(s, a) = d(s, a) / mass);
            if (p(s, a) > p(s, best)) best = a;
        }
        p(s, best) += 1.0 - sum;
    }
    return PolicyTable(std::move(p));
}

namespace detail {

// Flow rows Σ_a d(s,a) − γ Σ p(s|s',a') d(s',a') = (1−γ)1{s=s0}, then Σ d = 1.
inline void add_flow_constraints(const TabularMdp& mdp, LinearProgram& lp, std::size_t width) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
    lp.eq_lhs = Matrix(S + 1, width);
    lp.eq_rhs.assign(S + 1, 0.0);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const std::size_t col = s * A + a;
            lp.eq_lhs(s, col) += 1.0;
            const auto nx = mdp.next(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2)
                if (nx[s2] != 0.0) lp.eq_lhs(s2, col) -= g * nx[s2];
            lp.eq_lhs(S, col) = 1.0;
        }
    lp.eq_rhs[mdp.initial_state()] = 1.0 - g;
    lp.eq_rhs[S] = 1.0;
}

inline void add_budget(const TabularMdp& mdp, const ConstraintSpec& c, BudgetConvention conv, LinearProgram& lp,
                       std::size_t width) {
    require_shape(mdp, c.cost.num_states(), c.cost.num_actions(), "constraint");
    lp.ub_lhs = Matrix(1, width);
    for (std::size_t k = 0; k < c.cost.flat().size(); ++k) lp.ub_lhs(0, k) = c.cost.flat()[k];
    const double scale = conv == BudgetConvention::Discounted ? 1.0 - mdp.discount() : 1.0;
    lp.ub_rhs = {scale * c.budget};
}

inline OccupancyMeasure occupancy_from_lp(const TabularMdp& mdp, const std::vector<double>& x) {
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    Matrix d(S, A);
    double total = 0.0;
    for (std::size_t k = 0; k < S * A; ++k) total += (d.flat()[k] = std::max(0.0, x[k]));
    for (double& v : d.flat()) v /= total;
    return OccupancyMeasure(std::move(d));
}

}  // namespace detail

/// Greedy policy of the optimal Q (no constraint).
inline PolicyTable plan_unconstrained(const TabularMdp& mdp, const RewardTable& r) {
    return greedy_policy(value_iteration(mdp, r).q);
}

/// max over policies in the budget set of V^π(s0; r), via the occupancy LP.
inline ConstrainedPlan plan_constrained(const TabularMdp& mdp, const RewardTable& r,
                                        const std::optional<ConstraintSpec>& constraint,
                                        BudgetConvention conv = BudgetConvention::Discounted) {
    require_shape(mdp, r.num_states(), r.num_actions(), "plan_constrained");
    const std::size_t SA = mdp.num_states() * mdp.num_actions();
    LinearProgram lp(SA);
    for (std::size_t k = 0; k < SA; ++k) lp.objective[k] = -r.flat()[k];
    detail::add_flow_constraints(mdp, lp, SA);
    if (constraint) detail::add_budget(mdp, *constraint, conv, lp, SA);
    const LpSolution sol = solve(lp);
    if (sol.status == LpStatus::Infeasible) throw InfeasibleError("plan_constrained: no policy satisfies the budget");
    if (sol.status != LpStatus::Optimal) throw DomainError("plan_constrained: occupancy LP is unbounded");
    OccupancyMeasure d = detail::occupancy_from_lp(mdp, sol.x);
    double value = 0.0;
    for (std::size_t k = 0; k < SA; ++k) value += d.values().flat()[k] * r.flat()[k];
    value /= 1.0 - mdp.discount();
    return {policy_from_occupancy(d), std::move(d), value};
}

struct MimicResult {
    PolicyTable policy;
    OccupancyMeasure occupancy;
    double l1_distance;
};

/// Occupancy in the target MDP closest in L1 to the expert's occupancy in the source MDP.
inline MimicResult mimic_policy(const TabularMdp& source, const PolicyTable& expert, const TabularMdp& target,
                                const std::optional<ConstraintSpec>& constraint,
                                BudgetConvention conv = BudgetConvention::Discounted) {
    if (source.num_states() != target.num_states() || source.num_actions() != target.num_actions())
        throw DomainError("mimic_policy: source and target MDPs differ in shape");
    const std::size_t SA = target.num_states() * target.num_actions();
    const OccupancyMeasure de = occupancy_measure(source, expert);
    // Variables: d, u, w with d − u + w = d_E and objective Σ(u + w).
    const std::size_t width = 3 * SA;
    LinearProgram lp(width);
    for (std::size_t k = SA; k < width; ++k) lp.objective[k] = 1.0;
    detail::add_flow_constraints(target, lp, width);
    Matrix eq(lp.eq_lhs.rows() + SA, width);
    std::vector<double> rhs(lp.eq_rhs);
    for (std::size_t i = 0; i < lp.eq_lhs.rows(); ++i)
        for (std::size_t j = 0; j < width; ++j) eq(i, j) = lp.eq_lhs(i, j);
    for (std::size_t k = 0; k < SA; ++k) {
        const std::size_t row = lp.eq_lhs.rows() + k;
        eq(row, k) = 1.0;
        eq(row, SA + k) = -1.0;
        eq(row, 2 * SA + k) = 1.0;
        rhs.push_back(de.values().flat()[k]);
    }
    lp.eq_lhs = std::move(eq);
    lp.eq_rhs = std::move(rhs);
    if (constraint) detail::add_budget(target, *constraint, conv, lp, width);
    const LpSolution sol = solve(lp);
    if (sol.status == LpStatus::Infeasible) throw InfeasibleError("mimic_policy: no policy satisfies the budget");
    if (sol.status != LpStatus::Optimal) throw DomainError("mimic_policy: LP is unbounded");
    OccupancyMeasure d = detail::occupancy_from_lp(target, sol.x);
    double l1 = 0.0;
    for (std::size_t k = 0; k < SA; ++k) l1 += std::abs(d.values().flat()[k] - de.values().flat()[k]);
    return {policy_from_occupancy(d), std::move(d), l1};
}

/// Expert rows on the support, uniform rows elsewhere.
inline PolicyTable bc_policy(const PolicyTable& expert, const StateSet& support, std::size_t num_actions) {
    if (expert.num_actions() != num_actions) throw DomainError("bc_policy: action count mismatch");
    Matrix p(expert.num_states(), num_actions);
    for (std::size_t s = 0; s < p.rows(); ++s)
        for (std::size_t a = 0; a < num_actions; ++a)
            p(s, a) = support.contains(s) ? expert(s, a) : 1.0 / static_cast<double>(num_actions);
    return PolicyTable(std::move(p));
}

/**
 * An arbitrary member of the OPT feasible set: a random deterministic
 * extension π̄ of the expert, V uniform in [−1,1]^S and gap magnitudes uniform
 * in (0, 0.5] subtracted off π̄'s actions.
 */
inline RewardTable best_case_reward(const TabularMdp& mdp, const PolicyTable& expert, const StateSet& support,
                                    std::uint64_t seed) {
    require_shape(mdp, expert.num_states(), expert.num_actions(), "best_case_reward");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    Rng rng(mix64(seed));
    std::vector<std::size_t> acts(S);
    for (std::size_t s = 0; s < S; ++s)
        acts[s] = support.contains(s) ? expert.action(s) : static_cast<std::size_t>(rng.uniform() * static_cast<double>(A)) % A;
    std::vector<double> v(S);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    const PolicyTable bar = PolicyTable::from_actions(acts, A);
    Matrix gaps(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            if (a != acts[s]) gaps(s, a) = -0.5 * (1.0 - rng.uniform());
    return t_operator(mdp, bar, v, AdvantageGap(std::move(gaps), bar));
}

struct BoundPair {
    double lhs;
    double rhs;
};

/// |max V(r̂) − max V(r_ref)| over the budget set, against ‖r̂ − r_ref‖∞/(1−γ).
inline BoundPair suboptimality_bound(const TabularMdp& mdp, const RewardTable& r_hat, const RewardTable& r_ref,
                                     const std::optional<ConstraintSpec>& constraint,
                                     BudgetConvention conv = BudgetConvention::Discounted) {
    const double a = plan_constrained(mdp, r_hat, constraint, conv).value;
    const double b = plan_constrained(mdp, r_ref, constraint, conv).value;
    return {std::abs(a - b), sup_distance(r_hat.values(), r_ref.values()) / (1.0 - mdp.discount())};
}

}  // namespace cirl
