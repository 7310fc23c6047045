#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "cirl/dynamic_programming.hpp"
#include "cirl/mdp.hpp"
#include "test_instances.hpp"

using namespace cirl;
using cirl::testing::TestRng;

namespace {

TabularMdp one_state(double gamma) { return TabularMdp(1, 2, 0, {1.0, 1.0}, gamma); }

// s1 stays under a1 and moves to the absorbing s2 under a2.
TabularMdp chain(double gamma) { return TabularMdp(2, 2, 0, {1, 0, 0, 1, 0, 1, 0, 1}, gamma); }

Eigen::MatrixXd transition_under(const TabularMdp& m, const PolicyTable& pi) {
    const std::size_t S = m.num_states();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(S, S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < m.num_actions(); ++a)
            for (std::size_t s2 = 0; s2 < S; ++s2) p(s, s2) += pi(s, a) * m.p(s, a, s2);
    return p;
}

Eigen::VectorXd eigen_values(const TabularMdp& m, const PolicyTable& pi, const RewardTable& r) {
    const std::size_t S = m.num_states();
    Eigen::VectorXd rpi = Eigen::VectorXd::Zero(S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < m.num_actions(); ++a) rpi(s) += pi(s, a) * r(s, a);
    const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(S, S) - m.discount() * transition_under(m, pi);
    return w.partialPivLu().solve(rpi);
}

// V* as the pointwise max over all deterministic policies.
Eigen::VectorXd enumerated_optimum(const TabularMdp& m, const RewardTable& r) {
    const std::size_t S = m.num_states(), A = m.num_actions();
    std::size_t count = 1;
    for (std::size_t s = 0; s < S; ++s) count *= A;
    Eigen::VectorXd best = Eigen::VectorXd::Constant(S, -1e300);
    std::vector<std::size_t> acts(S);
    for (std::size_t idx = 0; idx < count; ++idx) {
        std::size_t k = idx;
        for (std::size_t s = 0; s < S; ++s, k /= A) acts[s] = k % A;
        best = best.cwiseMax(eigen_values(m, PolicyTable::from_actions(acts, A), r));
    }
    return best;
}

double bellman_sup_gap(const TabularMdp& m, const RewardTable& r, const std::vector<double>& v1,
                       const std::vector<double>& v2) {
    const Matrix q1 = q_from_v(m, r, v1), q2 = q_from_v(m, r, v2);
    double gap = 0.0;
    for (std::size_t s = 0; s < m.num_states(); ++s) {
        const auto a = q1.row(s), b = q2.row(s);
        gap = std::max(gap, std::abs(*std::max_element(a.begin(), a.end()) - *std::max_element(b.begin(), b.end())));
    }
    return gap;
}

}  // namespace

// Type invariants -----------------------------------------------------------

TEST(TabularMdp, RejectsInvalidInput) {
    EXPECT_THROW(TabularMdp(0, 1, 0, {}, 0.5), DomainError);
    EXPECT_THROW(TabularMdp(1, 1, 1, {1.0}, 0.5), DomainError);
    EXPECT_THROW(TabularMdp(1, 1, 0, {1.0}, 1.0), DomainError);
    EXPECT_THROW(TabularMdp(1, 1, 0, {1.0}, -0.1), DomainError);
    EXPECT_THROW(TabularMdp(2, 1, 0, {0.5, 0.6, 0.0, 1.0}, 0.5), DomainError);
    EXPECT_THROW(TabularMdp(2, 1, 0, {1.5, -0.5, 0.0, 1.0}, 0.5), DomainError);
    EXPECT_THROW(TabularMdp(2, 1, 0, {1.0}, 0.5), DomainError);
    EXPECT_NO_THROW(TabularMdp(1, 1, 0, {1.0}, 0.0));
}

TEST(TabularMdp, Accessors) {
    const TabularMdp m = chain(0.5);
    EXPECT_EQ(m.num_states(), 2u);
    EXPECT_EQ(m.p(0, 1, 1), 1.0);
    EXPECT_EQ(m.with_initial_state(1).initial_state(), 1u);
    EXPECT_EQ(m.with_discount(0.9).discount(), 0.9);
}

TEST(RewardTable, RejectsNonFinite) {
    EXPECT_THROW(RewardTable(Matrix{{1.0, NAN}}), DomainError);
    EXPECT_THROW(RewardTable(Matrix{{INFINITY, 0.0}}), DomainError);
}

TEST(PolicyTable, Invariants) {
    EXPECT_THROW(PolicyTable(Matrix{{0.5, 0.6}}), DomainError);
    EXPECT_THROW(PolicyTable(Matrix{{1.5, -0.5}}), DomainError);
    const PolicyTable det(Matrix{{0, 1}, {1, 0}});
    EXPECT_TRUE(det.deterministic());
    EXPECT_EQ(det.action(0), 1u);
    const PolicyTable mixed(Matrix{{0.5, 0.5}, {1, 0}});
    EXPECT_FALSE(mixed.deterministic());
    EXPECT_TRUE(mixed.row_deterministic(1));
    EXPECT_THROW(mixed.action(0), DomainError);
    const std::array<std::size_t, 2> bad = {0, 2};
    EXPECT_THROW(PolicyTable::from_actions(bad, 2), DomainError);
}

TEST(OccupancyMeasure, Invariants) {
    EXPECT_THROW(OccupancyMeasure(Matrix{{0.5, 0.4}}), DomainError);
    EXPECT_THROW(OccupancyMeasure(Matrix{{1.1, -0.1}}), DomainError);
    const OccupancyMeasure d(Matrix{{0.25, 0.25}, {0.5, 0.0}});
    EXPECT_DOUBLE_EQ(d.state_mass(1), 0.5);
}

TEST(StateSet, Operations) {
    StateSet s(4);
    s.insert(2);
    s.insert(0);
    EXPECT_TRUE(s.contains(2));
    EXPECT_FALSE(s.contains(1));
    EXPECT_FALSE(s.contains(9));
    EXPECT_EQ(s.members(), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(s.complement(), (std::vector<std::size_t>{1, 3}));
    EXPECT_THROW(s.insert(4), DomainError);
    EXPECT_TRUE(StateSet::all(3).is_full());
}

// value_iteration --------------------------------------------------------------

TEST(ValueIteration, OneStateGeometricSeries) {
    const auto vf = value_iteration(one_state(0.9), RewardTable(Matrix{{1.0, 0.0}}));
    EXPECT_NEAR(vf.v[0], 10.0, 1e-9);
    EXPECT_NEAR(vf.q(0, 0), 10.0, 1e-9);
    EXPECT_NEAR(vf.q(0, 1), 9.0, 1e-9);
    EXPECT_NEAR(vf.advantage(0, 0), 0.0, 1e-10);
    EXPECT_NEAR(vf.advantage(0, 1), -1.0, 1e-9);
}

TEST(ValueIteration, ZeroRewardGivesZeroValues) {
    TestRng rng(3);
    const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 4, 3, 0.95);
    const auto vf = value_iteration(m, RewardTable(4, 3));
    for (double x : vf.v) EXPECT_EQ(x, 0.0);
    EXPECT_EQ(vf.q.max_abs(), 0.0);
}

TEST(ValueIteration, ChainMatchesPolicyEnumeration) {
    const TabularMdp m = chain(0.5);
    const RewardTable r(Matrix{{1, 0}, {0, 0}});
    const auto vf = value_iteration(m, r);
    EXPECT_NEAR(vf.v[0], 2.0, 1e-9);
    EXPECT_NEAR(vf.v[1], 0.0, 1e-9);
    const auto ref = enumerated_optimum(m, r);
    EXPECT_NEAR(vf.v[0], ref(0), 1e-9);
    EXPECT_NEAR(vf.v[1], ref(1), 1e-9);
}

TEST(ValueIteration, AccuracyAgainstEnumerationOnRandomInstances) {
    TestRng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        const double gamma = rng.uniform(0.0, 0.99);
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 3, 3, gamma, 0.3);
        const RewardTable r = cirl::testing::random_reward(rng, 3, 3);
        const double tol = 1e-8;
        const auto vf = value_iteration(m, r, tol);
        const auto ref = enumerated_optimum(m, r);
        for (std::size_t s = 0; s < 3; ++s) EXPECT_NEAR(vf.v[s], ref(s), tol / (1.0 - gamma));
        for (std::size_t s = 0; s < 3; ++s) {
            double mx = -1e300;
            for (std::size_t a = 0; a < 3; ++a) mx = std::max(mx, vf.advantage(s, a));
            EXPECT_NEAR(mx, 0.0, 1e-10);
        }
    }
}

TEST(ValueIteration, QSatisfiesBellmanDefinition) {
    TestRng rng(5);
    const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 4, 2, 0.8);
    const RewardTable r = cirl::testing::random_reward(rng, 4, 2);
    const auto vf = value_iteration(m, r);
    const Matrix q = q_from_v(m, r, vf.v);
    EXPECT_LE(sup_distance(q, vf.q), 1e-12);
}

TEST(ValueIteration, RejectsNonPositiveTolerance) {
    EXPECT_THROW(value_iteration(one_state(0.5), RewardTable(1, 2), 0.0), DomainError);
}

TEST(ValueIteration, GammaZeroIsGreedyOnReward) {
    const auto vf = value_iteration(one_state(0.0), RewardTable(Matrix{{0.3, 0.7}}));
    EXPECT_DOUBLE_EQ(vf.v[0], 0.7);
}

TEST(ValueIteration, BellmanOperatorContracts) {
    TestRng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const double gamma = rng.uniform(0.0, 0.99);
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 4, 3, gamma, 0.4);
        const RewardTable r = cirl::testing::random_reward(rng, 4, 3);
        const auto v1 = cirl::testing::random_vector(rng, 4, -5, 5);
        const auto v2 = cirl::testing::random_vector(rng, 4, -5, 5);
        EXPECT_LE(bellman_sup_gap(m, r, v1, v2), gamma * sup_distance(v1, v2) + 1e-12);
    }
}

// soft_value_iteration ----------------------------------------------------------

TEST(SoftValueIteration, OneStateZeroReward) {
    const auto soft = soft_value_iteration(one_state(0.9), RewardTable(1, 2), 1.0);
    EXPECT_NEAR(soft.v[0], 10.0 * std::log(2.0), 1e-9);
}

TEST(SoftValueIteration, SmallLambdaApproachesHardOptimum) {
    TestRng rng(7);
    const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 4, 3, 0.9);
    const RewardTable r = cirl::testing::random_reward(rng, 4, 3);
    const auto soft = soft_value_iteration(m, r, 1e-6);
    const auto hard = value_iteration(m, r);
    EXPECT_LE(sup_distance(soft.v, hard.v), 1e-4);
}

TEST(SoftValueIteration, ConstantRewardClosedForm) {
    TestRng rng(8);
    const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 3, 4, 0.7);
    const double c = 0.4, lambda = 0.5;
    const auto soft = soft_value_iteration(m, RewardTable(3, 4, c), lambda);
    for (double v : soft.v) EXPECT_NEAR(v, (c + lambda * std::log(4.0)) / 0.3, 1e-8);
}

TEST(SoftValueIteration, SatisfiesSoftBellmanEquation) {
    TestRng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 4, 3, rng.uniform(0.1, 0.95));
        const RewardTable r = cirl::testing::random_reward(rng, 4, 3);
        const double lambda = rng.uniform(0.2, 2.0);
        const auto soft = soft_value_iteration(m, r, lambda);
        for (std::size_t s = 0; s < 4; ++s) {
            double z = 0.0;
            for (std::size_t a = 0; a < 3; ++a) z += std::exp(soft.q(s, a) / lambda);
            EXPECT_NEAR(soft.v[s], lambda * std::log(z), 1e-8);
            for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(soft.advantage(s, a), soft.q(s, a) - soft.v[s], 1e-10);
        }
    }
}

TEST(SoftValueIteration, LargeRewardsDoNotOverflow) {
    const auto soft = soft_value_iteration(one_state(0.5), RewardTable(Matrix{{800.0, 0.0}}), 1.0);
    EXPECT_TRUE(std::isfinite(soft.v[0]));
    EXPECT_NEAR(soft.v[0], 1600.0, 1e-6);
}

// policy_evaluation ---------------------------------------------------------------

TEST(PolicyEvaluation, Examples) {
    const auto vf = policy_evaluation(one_state(0.9), PolicyTable::uniform(1, 2), RewardTable(Matrix{{1.0, 0.0}}));
    EXPECT_NEAR(vf.v[0], 5.0, 1e-12);

    const std::array<std::size_t, 2> acts = {1, 0};
    const PolicyTable pi = PolicyTable::from_actions(acts, 2);
    const auto ind = policy_evaluation(chain(0.5), pi, RewardTable(Matrix{{0, 1}, {1, 0}}));
    EXPECT_NEAR(ind.v[0], 2.0, 1e-12);
    EXPECT_NEAR(ind.v[1], 2.0, 1e-12);

    const auto vf2 = policy_evaluation(chain(0.5), pi, RewardTable(Matrix{{0, 0}, {1, 1}}));
    EXPECT_NEAR(vf2.v[0], 1.0, 1e-12);
    EXPECT_NEAR(vf2.v[1], 2.0, 1e-12);
}

TEST(PolicyEvaluation, MatchesEigenSolve) {
    TestRng rng(10);
    for (int trial = 0; trial < 100; ++trial) {
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 5, 3, rng.uniform(0.0, 0.99), 0.5);
        const PolicyTable pi = cirl::testing::random_positive_policy(rng, 5, 3);
        const RewardTable r = cirl::testing::random_reward(rng, 5, 3);
        const auto vf = policy_evaluation(m, pi, r);
        const auto ref = eigen_values(m, pi, r);
        for (std::size_t s = 0; s < 5; ++s) EXPECT_NEAR(vf.v[s], ref(s), 1e-9 * (1.0 + std::abs(ref(s))));
    }
}

TEST(PolicyEvaluation, GreedyPolicyReproducesOptimalValues) {
    TestRng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const double gamma = rng.uniform(0.0, 0.99);
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 4, 3, gamma, 0.3);
        const RewardTable r = cirl::testing::random_reward(rng, 4, 3);
        const double tol = 1e-9;
        const auto vf = value_iteration(m, r, tol);
        const auto pe = policy_evaluation(m, greedy_policy(vf.q), r);
        EXPECT_LE(sup_distance(pe.v, vf.v), 2.0 * tol / (1.0 - gamma));
    }
}

// occupancy_measure ---------------------------------------------------------------

TEST(OccupancyMeasureOp, Examples) {
    const PolicyTable mixed(Matrix{{0.3, 0.7}});
    const auto d1 = occupancy_measure(one_state(0.8), mixed);
    EXPECT_NEAR(d1(0, 0), 0.3, 1e-12);
    EXPECT_NEAR(d1(0, 1), 0.7, 1e-12);

    const std::array<std::size_t, 2> stay = {0, 1};
    const auto d2 = occupancy_measure(chain(0.9), PolicyTable::from_actions(stay, 2));
    EXPECT_NEAR(d2(0, 0), 1.0, 1e-12);
    EXPECT_EQ(d2(1, 0) + d2(1, 1) + d2(0, 1), 0.0);

    const PolicyTable pi(Matrix{{0, 1}, {0.4, 0.6}});
    const auto d3 = occupancy_measure(chain(0.5), pi);
    EXPECT_NEAR(d3(0, 1), 0.5, 1e-12);
    EXPECT_NEAR(d3(1, 0), 0.5 * 0.4, 1e-12);
    EXPECT_NEAR(d3(1, 1), 0.5 * 0.6, 1e-12);
}

TEST(OccupancyMeasureOp, FlowAndDualityProperties) {
    TestRng rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t S = 2 + rng.index(5), A = 1 + rng.index(4);
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, S, A, rng.uniform(0.0, 0.99), 0.5, rng.index(S));
        const PolicyTable pi = cirl::testing::random_positive_policy(rng, S, A, 0.0);
        const RewardTable r = cirl::testing::random_reward(rng, S, A);
        const auto d = occupancy_measure(m, pi);
        EXPECT_LE(d.flow_residual(m), 1e-9);
        double dr = 0.0;
        for (std::size_t k = 0; k < S * A; ++k) dr += d.values().flat()[k] * r.flat()[k];
        const double v0 = policy_evaluation(m, pi, r).v[m.initial_state()];
        EXPECT_NEAR(dr, (1.0 - m.discount()) * v0, 1e-8);
    }
}

TEST(OccupancyMeasureOp, MatchesEigenFlowSolve) {
    TestRng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 5, 2, rng.uniform(0.0, 0.99), 0.5);
        const PolicyTable pi = cirl::testing::random_positive_policy(rng, 5, 2);
        const auto d = occupancy_measure(m, pi);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
        e(m.initial_state()) = 1.0 - m.discount();
        const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(5, 5) - m.discount() * transition_under(m, pi);
        const Eigen::VectorXd ds = w.transpose().partialPivLu().solve(e);
        for (std::size_t s = 0; s < 5; ++s) EXPECT_NEAR(d.state_mass(s), ds(s), 1e-10);
    }
}

// reachable_support ----------------------------------------------------------------

TEST(ReachableSupport, ChainExamples) {
    const std::array<std::size_t, 2> a1 = {0, 0}, a2 = {1, 0};
    EXPECT_EQ(reachable_support(chain(0.5), PolicyTable::from_actions(a1, 2)).members(), std::vector<std::size_t>{0});
    EXPECT_EQ(reachable_support(chain(0.5), PolicyTable::from_actions(a2, 2)).members(),
              (std::vector<std::size_t>{0, 1}));
    TestRng rng(14);
    const TabularMdp dense = cirl::testing::random_kernel_mdp(rng, 6, 2, 0.5);
    EXPECT_TRUE(reachable_support(dense, PolicyTable::uniform(6, 2)).is_full());
}

TEST(ReachableSupport, AgreesWithOccupancyMass) {
    TestRng rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t S = 2 + rng.index(6), A = 1 + rng.index(3);
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, S, A, rng.uniform(0.1, 0.95), 0.8);
        const PolicyTable pi = PolicyTable::from_actions(cirl::testing::random_actions(rng, S, A), A);
        const StateSet sup = reachable_support(m, pi);
        const auto d = occupancy_measure(m, pi);
        for (std::size_t s = 0; s < S; ++s) EXPECT_EQ(sup.contains(s), d.state_mass(s) > 1e-12) << "state " << s;
    }
}

// w_matrix and k_pi -------------------------------------------------------------------

TEST(WMatrix, Examples) {
    const Matrix w = w_matrix(one_state(0.9), PolicyTable::uniform(1, 2));
    EXPECT_NEAR(w(0, 0), 0.1, 1e-15);
    TestRng rng(16);
    const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 4, 3, 0.0);
    EXPECT_EQ(w_matrix(m, PolicyTable::uniform(4, 3)), Matrix::identity(4));
    const TabularMdp m2 = cirl::testing::random_kernel_mdp(rng, 4, 3, 0.7);
    const Matrix w2 = w_matrix(m2, cirl::testing::random_positive_policy(rng, 4, 3));
    for (std::size_t s = 0; s < 4; ++s) {
        const auto row = w2.row(s);
        EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 0.3, 1e-12);
    }
}

TEST(KPi, Examples) {
    EXPECT_NEAR(k_pi(one_state(0.9), PolicyTable::uniform(1, 2)), 10.0, 1e-12);
    EXPECT_NEAR(k_pi(one_state(0.0), PolicyTable::uniform(1, 2)), 1.0, 1e-15);
    const TabularMdp loops(2, 1, 0, {1, 0, 0, 1}, 0.5);
    const PolicyTable one = PolicyTable::uniform(2, 1);
    const LuFactorization lu(w_matrix(loops, one));
    EXPECT_NEAR(lu.determinant(), 0.25, 1e-15);
    EXPECT_NEAR(k_pi(loops, one), 2.0, 1e-12);
}

TEST(KPi, RangeOnRandomPairs) {
    TestRng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t S = 1 + rng.index(6), A = 1 + rng.index(3);
        const double gamma = rng.uniform(0.0, 0.99);
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, S, A, gamma, 0.5);
        const PolicyTable pi = trial % 2 ? PolicyTable::from_actions(cirl::testing::random_actions(rng, S, A), A)
                                         : cirl::testing::random_positive_policy(rng, S, A, 0.0);
        const double k = k_pi(m, pi);
        EXPECT_GE(k, 1.0 / (1.0 + gamma) * (1.0 - 1e-12));
        EXPECT_LE(k, 1.0 / (1.0 - gamma) * (1.0 + 1e-12));
    }
}

// boltzmann / soft-optimal policies -----------------------------------------------------

TEST(BoltzmannPolicy, Examples) {
    const auto p0 = boltzmann_policy(Matrix{{0.0, 0.0}}, 1.0);
    EXPECT_DOUBLE_EQ(p0(0, 0), 0.5);
    const auto cold = boltzmann_policy(Matrix{{1.0, 0.0}}, 1e-3);
    EXPECT_GT(cold(0, 0), 1.0 - 1e-12);
    const auto p1 = boltzmann_policy(Matrix{{1.0, 0.0}}, 1.0);
    EXPECT_NEAR(p1(0, 0), std::exp(1.0) / (std::exp(1.0) + 1.0), 1e-15);
    EXPECT_NEAR(p1(0, 1), 1.0 / (std::exp(1.0) + 1.0), 1e-15);
    EXPECT_THROW(boltzmann_policy(Matrix{{1.0, 0.0}}, 0.0), DomainError);
    const auto big = boltzmann_policy(Matrix{{1e6, 0.0}}, 1.0);
    EXPECT_EQ(big(0, 0), 1.0);
}

TEST(SoftOptimalPolicy, UsesLambdaAsTemperature) {
    SoftValueFunctions soft{{0.0}, Matrix{{1.0, 0.0}}, Matrix{{0.0, -1.0}}, 2.0};
    const auto p = soft_optimal_policy(soft);
    EXPECT_NEAR(p(0, 0), std::exp(0.5) / (std::exp(0.5) + 1.0), 1e-15);
    soft.q = Matrix{{0.0, 0.0}};
    EXPECT_DOUBLE_EQ(soft_optimal_policy(soft)(0, 1), 0.5);
    soft.q = Matrix{{1.0, 0.0}};
    soft.lambda = 1e-4;
    EXPECT_GT(soft_optimal_policy(soft)(0, 0), 1.0 - 1e-12);
}

TEST(SoftOptimalPolicy, MatchesExpAdvantageOverLambda) {
    TestRng rng(18);
    const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 4, 3, 0.8);
    const RewardTable r = cirl::testing::random_reward(rng, 4, 3);
    const auto soft = soft_value_iteration(m, r, 0.7);
    const auto pi = soft_optimal_policy(soft);
    for (std::size_t s = 0; s < 4; ++s)
        for (std::size_t a = 0; a < 3; ++a) EXPECT_NEAR(pi(s, a), std::exp(soft.advantage(s, a) / 0.7), 1e-9);
}

// Rescaling invariance -------------------------------------------------------------------

TEST(GreedyPolicy, InvariantUnderPositiveAffineRescaling) {
    TestRng rng(19);
    for (int trial = 0; trial < 100; ++trial) {
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 4, 3, rng.uniform(0.1, 0.95), 0.3);
        const RewardTable r = cirl::testing::random_reward(rng, 4, 3);
        const double alpha = rng.uniform(0.1, 10.0), beta = rng.uniform(-5.0, 5.0);
        Matrix scaled = r.values();
        for (double& x : scaled.flat()) x = alpha * x + beta;
        const auto g1 = greedy_actions(optimal_values_exact(m, r).q);
        const auto g2 = greedy_actions(optimal_values_exact(m, RewardTable(scaled)).q);
        EXPECT_EQ(g1, g2);
    }
}

TEST(OptimalValuesExact, AgreesWithValueIteration) {
    TestRng rng(20);
    for (int trial = 0; trial < 50; ++trial) {
        const TabularMdp m = cirl::testing::random_kernel_mdp(rng, 5, 3, rng.uniform(0.0, 0.99), 0.4);
        const RewardTable r = cirl::testing::random_reward(rng, 5, 3);
        const auto vi = value_iteration(m, r, 1e-10);
        const auto pi = optimal_values_exact(m, r);
        EXPECT_LE(sup_distance(vi.v, pi.v), 1e-10 / (1.0 - m.discount()) + 1e-12);
    }
}
