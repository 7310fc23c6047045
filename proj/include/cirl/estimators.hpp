#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "cirl/dynamic_programming.hpp"
#include "cirl/mdp.hpp"
#include "cirl/parallel.hpp"
#include "cirl/reward_geometry.hpp"
#include "cirl/rng.hpp"

namespace cirl {

/// N trajectories of a common length H, stored contiguously.
class TrajectoryDataset {
public:
    TrajectoryDataset() = default;
    explicit TrajectoryDataset(std::size_t horizon) : h_(horizon) {
        if (h_ == 0) throw DomainError("TrajectoryDataset: horizon must be at least 1");
    }

    std::size_t size() const noexcept { return h_ ? states_.size() / h_ : 0; }
    std::size_t horizon() const noexcept { return h_; }

    std::span<const std::uint32_t> states(std::size_t i) const { return {states_.data() + i * h_, h_}; }
    std::span<const std::uint32_t> actions(std::size_t i) const { return {actions_.data() + i * h_, h_}; }

    void push_back(std::span<const std::uint32_t> states, std::span<const std::uint32_t> actions) {
        if (h_ == 0) h_ = states.size();
        if (states.size() != h_ || actions.size() != h_ || h_ == 0)
            throw DomainError("TrajectoryDataset: trajectory length differs from the dataset horizon");
        states_.insert(states_.end(), states.begin(), states.end());
        actions_.insert(actions_.end(), actions.begin(), actions.end());
    }

    /// Throws unless every index lies below (S, A).
    void check_dims(std::size_t S, std::size_t A) const {
        for (auto s : states_)
            if (s >= S) throw DomainError("TrajectoryDataset: state index out of range");
        for (auto a : actions_)
            if (a >= A) throw DomainError("TrajectoryDataset: action index out of range");
    }

    std::span<std::uint32_t> mutable_states() noexcept { return states_; }
    std::span<std::uint32_t> mutable_actions() noexcept { return actions_; }
    void resize(std::size_t n) {
        states_.assign(n * h_, 0);
        actions_.assign(n * h_, 0);
    }

private:
    std::size_t h_ = 0;
    std::vector<std::uint32_t> states_;
    std::vector<std::uint32_t> actions_;
};

enum class CountingMode {
    FirstVisit,       ///< each trajectory contributes its first visit to each state
    AllOccurrences,   ///< every (s,a) occurrence counts
};

struct VisitCounts {
    std::vector<std::uint64_t> nsa;  ///< row-major S×A
    std::vector<std::uint64_t> ns;
    std::size_t num_actions = 0;

    std::uint64_t operator()(std::size_t s, std::size_t a) const { return nsa[s * num_actions + a]; }
};

/// Trajectories from s0 under `expert`; trajectory i uses RNG substream i.
inline TrajectoryDataset simulate_expert(const TabularMdp& mdp, const PolicyTable& expert, std::size_t n,
                                         std::size_t h, std::uint64_t seed) {
    if (n == 0 || h == 0) throw DomainError("simulate_expert: n and h must be at least 1");
    require_shape(mdp, expert.num_states(), expert.num_actions(), "simulate_expert");
    TrajectoryDataset data(h);
    data.resize(n);
    auto states = data.mutable_states();
    auto actions = data.mutable_actions();
    constexpr std::size_t kChunk = 4096;
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    parallel_chunks(chunks, [&](std::size_t c) {
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t i = c * kChunk; i < end; ++i) {
            Rng rng = Rng::substream(seed, i);
            std::size_t s = mdp.initial_state();
            for (std::size_t t = 0; t < h; ++t) {
                const std::size_t a = rng.categorical(expert.row(s));
                states[i * h + t] = static_cast<std::uint32_t>(s);
                actions[i * h + t] = static_cast<std::uint32_t>(a);
                if (t + 1 < h) s = rng.categorical(mdp.next(s, a));
            }
        }
    });
    return data;
}

inline VisitCounts visit_counts(const TrajectoryDataset& data, std::size_t S, std::size_t A,
                                CountingMode mode = CountingMode::FirstVisit) {
    data.check_dims(S, A);
    VisitCounts c{std::vector<std::uint64_t>(S * A, 0), std::vector<std::uint64_t>(S, 0), A};
    std::vector<std::size_t> stamp(S, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto st = data.states(i);
        const auto ac = data.actions(i);
        for (std::size_t t = 0; t < st.size(); ++t) {
            const std::size_t s = st[t];
            if (mode == CountingMode::FirstVisit) {
                if (stamp[s] == i) continue;
                stamp[s] = i;
            }
            ++c.nsa[s * A + ac[t]];
            ++c.ns[s];
        }
    }
    return c;
}

inline VisitCounts first_visit_counts(const TrajectoryDataset& data, std::size_t S, std::size_t A) {
    return visit_counts(data, S, A, CountingMode::FirstVisit);
}

/// 1 on visited pairs, 1/A on never-visited states, 0 elsewhere.
inline RewardTable estimate_opt(const TrajectoryDataset& data, std::size_t S, std::size_t A) {
    const auto c = visit_counts(data, S, A, CountingMode::AllOccurrences);
    Matrix r(S, A);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a)
            r(s, a) = c.ns[s] == 0 ? 1.0 / static_cast<double>(A) : (c(s, a) > 0 ? 1.0 : 0.0);
    return RewardTable(std::move(r));
}

inline constexpr double kDefaultPiMinPrime = 1e-6;

namespace detail {

inline void check_pi_min(double pi_min) {
    if (!(pi_min > 0.0 && pi_min < 1.0)) throw DomainError("estimator: pi_min_prime must lie in (0,1)");
}

// Rewards from a clipped policy table; rows of unvisited states take log π'_min.
inline RewardTable log_policy_reward(ModelKind kind, const Matrix& freq, const std::vector<char>& visited,
                                     double pi_min) {
    const std::size_t S = freq.rows(), A = freq.cols();
    Matrix r(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        if (!visited[s]) {
            for (std::size_t a = 0; a < A; ++a) r(s, a) = std::log(pi_min);
            continue;
        }
        double mx = 0.0;
        for (std::size_t a = 0; a < A; ++a) mx = std::max(mx, std::max(pi_min, freq(s, a)));
        for (std::size_t a = 0; a < A; ++a) {
            const double p = std::max(pi_min, freq(s, a));
            r(s, a) = kind == ModelKind::Birl ? std::log(p / mx) : std::log(p);
        }
    }
    return RewardTable(std::move(r));
}

inline Matrix empirical_policy(const VisitCounts& c, std::size_t S, std::size_t A, std::vector<char>& visited) {
    Matrix f(S, A);
    visited.assign(S, 0);
    for (std::size_t s = 0; s < S; ++s) {
        visited[s] = c.ns[s] > 0;
        const double denom = static_cast<double>(std::max<std::uint64_t>(1, c.ns[s]));
        for (std::size_t a = 0; a < A; ++a) f(s, a) = static_cast<double>(c(s, a)) / denom;
    }
    return f;
}

}  // namespace detail

/// π̂(a|s) = max{π'_min, N(s,a)/max{1,N(s)}}.
inline Matrix clipped_policy(const VisitCounts& c, std::size_t S, std::size_t A, double pi_min_prime) {
    detail::check_pi_min(pi_min_prime);
    std::vector<char> visited;
    Matrix f = detail::empirical_policy(c, S, A, visited);
    for (double& x : f.flat()) x = std::max(x, pi_min_prime);
    return f;
}

inline RewardTable estimate_mce(const TrajectoryDataset& data, std::size_t S, std::size_t A,
                                double pi_min_prime = kDefaultPiMinPrime,
                                CountingMode mode = CountingMode::FirstVisit) {
    detail::check_pi_min(pi_min_prime);
    std::vector<char> visited;
    const Matrix f = detail::empirical_policy(visit_counts(data, S, A, mode), S, A, visited);
    return detail::log_policy_reward(ModelKind::Mce, f, visited, pi_min_prime);
}

inline RewardTable estimate_birl(const TrajectoryDataset& data, std::size_t S, std::size_t A,
                                 double pi_min_prime = kDefaultPiMinPrime,
                                 CountingMode mode = CountingMode::FirstVisit) {
    detail::check_pi_min(pi_min_prime);
    std::vector<char> visited;
    const Matrix f = detail::empirical_policy(visit_counts(data, S, A, mode), S, A, visited);
    return detail::log_policy_reward(ModelKind::Birl, f, visited, pi_min_prime);
}

/**
 * The MCE/BIRL estimators evaluated at exact frequencies: the expert's
 * probabilities on `support`, unvisited elsewhere. Used when the expert is
 * known on its support but the support is not the whole state space.
 */
inline RewardTable clipped_log_reward(ModelKind kind, const PolicyTable& expert, const StateSet& support,
                                      double pi_min_prime = kDefaultPiMinPrime) {
    if (kind == ModelKind::Opt) throw DomainError("clipped_log_reward: not defined for OPT");
    detail::check_pi_min(pi_min_prime);
    std::vector<char> visited(expert.num_states(), 0);
    for (auto s : support.members()) visited[s] = 1;
    return detail::log_policy_reward(kind, expert.probs(), visited, pi_min_prime);
}

/// Entries observed with positive frequency below π'_min (the floor then biases the estimate).
inline std::size_t clipped_observed_entries(const VisitCounts& c, double pi_min_prime) {
    std::size_t n = 0;
    const std::size_t A = c.num_actions;
    for (std::size_t s = 0; s < c.ns.size(); ++s) {
        if (c.ns[s] == 0) continue;
        for (std::size_t a = 0; a < A; ++a) {
            const double f = static_cast<double>(c(s, a)) / static_cast<double>(c.ns[s]);
            if (f > 0.0 && f < pi_min_prime) ++n;
        }
    }
    return n;
}

/**
 * min over support states s of P(s_t = s for some t ≤ h), where s_1 = s0 and
 * a trajectory of length h visits h states.
 */
inline double p_min_h(const TabularMdp& mdp, const PolicyTable& expert, std::size_t h) {
    if (h == 0) throw DomainError("p_min_h: h must be at least 1");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    Matrix ppi(S, S);
    for (std::size_t s = 0; s < S; ++s)
        for (std::size_t a = 0; a < A; ++a) {
            const double pa = expert(s, a);
            if (pa == 0.0) continue;
            const auto nx = mdp.next(s, a);
            for (std::size_t s2 = 0; s2 < S; ++s2) ppi(s, s2) += pa * nx[s2];
        }
    const StateSet support = reachable_support(mdp, expert);
    double best = 1.0;
    std::vector<double> dist(S), next(S);
    for (auto target : support.members()) {
        if (target == mdp.initial_state()) continue;
        std::fill(dist.begin(), dist.end(), 0.0);
        dist[mdp.initial_state()] = 1.0;
        double hit = 0.0;
        for (std::size_t t = 1; t < h; ++t) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t s = 0; s < S; ++s) {
                if (dist[s] == 0.0) continue;
                const auto row = ppi.row(s);
                for (std::size_t s2 = 0; s2 < S; ++s2) next[s2] += dist[s] * row[s2];
            }
            hit += next[target];
            next[target] = 0.0;
            dist.swap(next);
        }
        best = std::min(best, hit);
    }
    return best;
}

struct SampleBoundParams {
    std::size_t num_states = 1;
    std::size_t num_actions = 1;
    std::size_t support_size = 1;
    double delta = 0.1;
    double epsilon = 0.5;
    double pi_min_prime = 0.05;
    double p_min = 1.0;
    std::size_t horizon = 1;
};

/// Number of trajectories sufficient for the estimator guarantee of `kind`.
inline std::uint64_t sample_bound(ModelKind kind, const SampleBoundParams& p) {
    if (p.horizon < p.num_states) throw DomainError("sample_bound: horizon must be at least the number of states");
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw DomainError("sample_bound: delta must lie in (0,1)");
    if (!(p.p_min > 0.0 && p.p_min <= 1.0)) throw DomainError("sample_bound: p_min must lie in (0,1]");
    const double S = static_cast<double>(p.num_states), A = static_cast<double>(p.num_actions);
    double n = 0.0;
    if (kind == ModelKind::Opt) {
        if (p.support_size == 0) throw DomainError("sample_bound: empty support");
        n = std::log(static_cast<double>(p.support_size) / p.delta) / p.p_min;
    } else {
        if (!(p.epsilon > 0.0 && p.epsilon <= 1.0)) throw DomainError("sample_bound: epsilon must lie in (0,1]");
        if (!(p.pi_min_prime > 0.0 && p.pi_min_prime < 1.0)) throw DomainError("sample_bound: pi_min_prime must lie in (0,1)");
        const double factor = kind == ModelKind::Mce ? 16.0 : 33.0;
        const double l = std::log((kind == ModelKind::Mce ? 4.0 : 8.0) * S * A / p.delta);
        n = factor * l * l / (p.epsilon * p.epsilon * p.pi_min_prime * p.p_min);
    }
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(n - 1e-9)));
}

}  // namespace cirl
