#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cirl/centroids.hpp"
#include "cirl/mdp.hpp"
#include "cirl/parallel.hpp"
#include "cirl/reward_geometry.hpp"
#include "cirl/rng.hpp"

namespace cirl {

/// Scalar Monte Carlo estimate (a fraction or a ratio).
struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n_samples = 0;
    std::uint64_t n_accepted = 0;
};

/// Entrywise Monte Carlo estimate of a reward table.
struct McTableEstimate {
    Matrix mean;
    Matrix std_error;
    std::uint64_t n_samples = 0;
    std::uint64_t n_accepted = 0;

    double max_std_error() const { return std_error.max_abs(); }
};

inline constexpr std::size_t kMcChunk = std::size_t{1} << 15;

namespace detail {

inline std::size_t chunk_count(std::uint64_t n) { return static_cast<std::size_t>((n + kMcChunk - 1) / kMcChunk); }

inline std::size_t chunk_size(std::uint64_t n, std::size_t c) {
    const std::uint64_t begin = static_cast<std::uint64_t>(c) * kMcChunk;
    return static_cast<std::size_t>(std::min<std::uint64_t>(kMcChunk, n - begin));
}

inline McEstimate binomial(std::uint64_t hits, std::uint64_t n) {
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)), n, hits};
}

inline void require_samples(std::uint64_t n, const char* what) {
    if (n == 0) throw DomainError(std::string(what) + ": n must be at least 1");
}

inline void require_box(const Interval& box, const char* what) {
    if (!(box.upper > box.lower) || !std::isfinite(box.lower) || !std::isfinite(box.upper))
        throw DomainError(std::string(what) + ": sampling box is empty");
}

// Per-chunk sums for table estimates; merged in chunk order.
struct TableAccumulator {
    std::vector<double> sum, sumsq;
    std::uint64_t count = 0;

    explicit TableAccumulator(std::size_t size = 0) : sum(size, 0.0), sumsq(size, 0.0) {}

    void add(std::span<const double> x) {
        for (std::size_t k = 0; k < x.size(); ++k) {
            sum[k] += x[k];
            sumsq[k] += x[k] * x[k];
        }
        ++count;
    }
};

inline McTableEstimate merge(const std::vector<TableAccumulator>& parts, std::size_t S, std::size_t A,
                             std::uint64_t n) {
    TableAccumulator total(S * A);
    for (const auto& p : parts) {
        for (std::size_t k = 0; k < S * A; ++k) {
            total.sum[k] += p.sum[k];
            total.sumsq[k] += p.sumsq[k];
        }
        total.count += p.count;
    }
    McTableEstimate est{Matrix(S, A), Matrix(S, A), n, total.count};
    if (total.count == 0) return est;
    const double m = static_cast<double>(total.count);
    for (std::size_t k = 0; k < S * A; ++k) {
        const double mean = total.sum[k] / m;
        est.mean.flat()[k] = mean;
        if (total.count > 1) {
            const double var = std::max(0.0, (total.sumsq[k] - m * mean * mean) / (m - 1.0));
            est.std_error.flat()[k] = std::sqrt(var / m);
        }
    }
    return est;
}

inline void require_opt(const BehaviorModel& model, const char* what) {
    if (model.kind() != ModelKind::Opt)
        throw DomainError(std::string(what) + ": only OPT feasible sets are full-dimensional");
}

inline constexpr double kTieTolerance = 1e-12;

}  // namespace detail

/**
 * Fraction of rewards drawn uniformly from box^{SA} for which the
 * deterministic `policy` is optimal in every state, optionally intersected
 * with the bounded set.
 */
inline McEstimate mc_volume_fraction(const TabularMdp& mdp, const PolicyTable& policy, const BehaviorModel& model,
                                     const Interval& box, std::uint64_t n, std::uint64_t seed,
                                     const std::optional<BoundedSetParams>& bounded = std::nullopt) {
    detail::require_opt(model, "mc_volume_fraction");
    detail::require_samples(n, "mc_volume_fraction");
    detail::require_box(box, "mc_volume_fraction");
    require_shape(mdp, policy.num_states(), policy.num_actions(), "mc_volume_fraction");
    if (!policy.deterministic()) throw DomainError("mc_volume_fraction: policy must be deterministic");
    const std::size_t SA = mdp.num_states() * mdp.num_actions();
    std::vector<std::size_t> acts(mdp.num_states());
    for (std::size_t s = 0; s < acts.size(); ++s) acts[s] = policy.action(s);
    const StateSet all = StateSet::all(mdp.num_states());
    std::vector<std::uint64_t> hits(detail::chunk_count(n), 0);
    parallel_chunks(hits.size(), [&](std::size_t c) {
        Rng rng = Rng::substream(seed, c);
        OptOracle oracle(mdp);
        std::vector<double> r(SA);
        std::uint64_t h = 0;
        for (std::size_t i = 0, m = detail::chunk_size(n, c); i < m; ++i) {
            for (double& x : r) x = rng.uniform(box.lower, box.upper);
            oracle.solve(r, acts);
            if (!oracle.expert_optimal(acts, all, detail::kTieTolerance)) continue;
            if (bounded && !oracle.bounded(bounded->c1(), bounded->c2(), 0.0)) continue;
            ++h;
        }
        hits[c] = h;
    });
    std::uint64_t total = 0;
    for (auto h : hits) total += h;
    return detail::binomial(total, n);
}

/// Index of a deterministic policy: actions are mixed-radix digits, state 0 least significant.
inline std::size_t deterministic_policy_index(std::span<const std::size_t> actions, std::size_t num_actions) {
    std::size_t idx = 0;
    for (std::size_t s = actions.size(); s-- > 0;) idx = idx * num_actions + actions[s];
    return idx;
}

inline std::size_t deterministic_policy_count(std::size_t S, std::size_t A) {
    std::size_t n = 1;
    for (std::size_t s = 0; s < S; ++s) {
        if (n > (std::size_t{1} << 24) / A) throw DomainError("deterministic_policy_count: too many policies");
        n *= A;
    }
    return n;
}

/**
 * One pass that classifies every box sample by its optimal deterministic
 * policy; entry i is the fraction of samples whose optimal policy has index
 * i and, if `bounded` is given, that lie in the bounded set.
 */
inline std::vector<McEstimate> mc_policy_volumes(const TabularMdp& mdp, const Interval& box, std::uint64_t n,
                                                 std::uint64_t seed,
                                                 const std::optional<BoundedSetParams>& bounded = std::nullopt) {
    detail::require_samples(n, "mc_policy_volumes");
    detail::require_box(box, "mc_policy_volumes");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), SA = S * A;
    const std::size_t P = deterministic_policy_count(S, A);
    const std::size_t chunks = detail::chunk_count(n);
    std::vector<std::uint64_t> hits(chunks * P, 0);
    parallel_chunks(chunks, [&](std::size_t c) {
        Rng rng = Rng::substream(seed, c);
        OptOracle oracle(mdp);
        std::vector<double> r(SA);
        std::uint64_t* out = &hits[c * P];
        for (std::size_t i = 0, m = detail::chunk_size(n, c); i < m; ++i) {
            for (double& x : r) x = rng.uniform(box.lower, box.upper);
            oracle.solve(r);
            if (bounded && !oracle.bounded(bounded->c1(), bounded->c2(), 0.0)) continue;
            ++out[deterministic_policy_index(oracle.greedy(), A)];
        }
    });
    std::vector<McEstimate> est;
    est.reserve(P);
    for (std::size_t p = 0; p < P; ++p) {
        std::uint64_t total = 0;
        for (std::size_t c = 0; c < chunks; ++c) total += hits[c * P + p];
        est.push_back(detail::binomial(total, n));
    }
    return est;
}

/**
 * Length of the MCE or BIRL feasible line of a 1-state, 2-action MDP inside
 * the square [−h, h]². On that line r(a₁) = r(a₂) + c·log(π(a₁)/(1−π(a₁))).
 */
inline double segment_volume_1d(const TabularMdp& mdp, const PolicyTable& policy, const BehaviorModel& model,
                                double box_halfwidth) {
    if (mdp.num_states() != 1 || mdp.num_actions() != 2)
        throw DomainError("segment_volume_1d: requires exactly 1 state and 2 actions");
    if (model.kind() == ModelKind::Opt) throw DomainError("segment_volume_1d: OPT feasible sets are not lines");
    if (!(box_halfwidth > 0.0)) throw DomainError("segment_volume_1d: box half-width must be positive");
    require_shape(mdp, policy.num_states(), policy.num_actions(), "segment_volume_1d");
    const double p = policy(0, 0);
    if (p <= 0.0 || p >= 1.0) return 0.0;
    const double h = box_halfwidth;
    const double shift = model.coefficient() * std::log(p / (1.0 - p));
    return std::max(0.0, std::min(h, h - shift) - std::max(-h, -h - shift));
}

/**
 * Rejection estimate of the mean reward over the bounded set intersected
 * with the expert's feasible set on `support`, sampling uniformly from the
 * bounding box. With `require_feasible = false` this is the prior mean.
 */
inline McTableEstimate mc_centroid_opt(const TabularMdp& mdp, const PolicyTable& expert, const StateSet& support,
                                       const BoundedSetParams& params, std::uint64_t n, std::uint64_t seed,
                                       bool require_feasible = true) {
    detail::require_opt(params.model(), "mc_centroid_opt");
    detail::require_samples(n, "mc_centroid_opt");
    require_shape(mdp, expert.num_states(), expert.num_actions(), "mc_centroid_opt");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions(), SA = S * A;
    std::vector<std::size_t> acts;
    if (require_feasible) {
        for (auto s : support.members())
            if (!expert.row_deterministic(s)) throw DomainError("mc_centroid_opt: expert must be deterministic on the support");
        acts = support_actions(expert, support);
    }
    const Interval box = bounding_box(params, mdp.discount());
    std::vector<detail::TableAccumulator> parts(detail::chunk_count(n));
    parallel_chunks(parts.size(), [&](std::size_t c) {
        Rng rng = Rng::substream(seed, c);
        OptOracle oracle(mdp);
        detail::TableAccumulator acc(SA);
        std::vector<double> r(SA);
        for (std::size_t i = 0, m = detail::chunk_size(n, c); i < m; ++i) {
            for (double& x : r) x = rng.uniform(box.lower, box.upper);
            oracle.solve(r, acts);
            if (require_feasible && !oracle.expert_optimal(acts, support, detail::kTieTolerance)) continue;
            if (!oracle.bounded(params.c1(), params.c2(), 0.0)) continue;
            acc.add(r);
        }
        parts[c] = std::move(acc);
    });
    return detail::merge(parts, S, A, n);
}

/// Prior mean over the OPT bounded set alone.
inline McTableEstimate mc_prior_centroid_opt(const TabularMdp& mdp, const BoundedSetParams& params, std::uint64_t n,
                                             std::uint64_t seed) {
    const PolicyTable any = PolicyTable::uniform(mdp.num_states(), mdp.num_actions());
    return mc_centroid_opt(mdp, any, StateSet(mdp.num_states()), params, n, seed, false);
}

/// Mean of U(V) = η + V − γPV for V uniform in [−c1, c1]^S.
inline McTableEstimate mc_centroid_manifold(const TabularMdp& mdp, const RewardTable& eta, double c1, std::uint64_t n,
                                            std::uint64_t seed) {
    detail::require_samples(n, "mc_centroid_manifold");
    if (!(c1 > 0.0)) throw DomainError("mc_centroid_manifold: c1 must be positive");
    require_shape(mdp, eta.num_states(), eta.num_actions(), "mc_centroid_manifold");
    const std::size_t S = mdp.num_states(), A = mdp.num_actions();
    const double g = mdp.discount();
    std::vector<detail::TableAccumulator> parts(detail::chunk_count(n));
    parallel_chunks(parts.size(), [&](std::size_t c) {
        Rng rng = Rng::substream(seed, c);
        detail::TableAccumulator acc(S * A);
        std::vector<double> v(S), r(S * A);
        for (std::size_t i = 0, m = detail::chunk_size(n, c); i < m; ++i) {
            for (double& x : v) x = rng.uniform(-c1, c1);
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t a = 0; a < A; ++a) {
                    const auto nx = mdp.next(s, a);
                    double ev = 0.0;
                    for (std::size_t s2 = 0; s2 < S; ++s2) ev += nx[s2] * v[s2];
                    r[s * A + a] = eta(s, a) + v[s] - g * ev;
                }
            acc.add(r);
        }
        parts[c] = std::move(acc);
    });
    return detail::merge(parts, S, A, n);
}

// Fixed instances.

/// s₁ stays under a₁ and moves to s₂ under a₂; s₂ is absorbing. Starts in s₁.
inline TabularMdp escape_chain_mdp(double gamma) {
    // p[s][a][s']
    std::vector<double> p = {1, 0, 0, 1,  //
                             0, 1, 0, 1};
    return TabularMdp(2, 2, 0, std::move(p), gamma);
}

/// One state, two self-loop actions.
inline TabularMdp single_state_mdp(double gamma) { return TabularMdp(1, 2, 0, {1.0, 1.0}, gamma); }

/// Source of the transfer pair: both states absorbing under every action.
inline TabularMdp transfer_source_mdp(double gamma) {
    return TabularMdp(2, 2, 0, {1, 0, 1, 0, 0, 1, 0, 1}, gamma);
}

/// Target of the transfer pair: a₂ now leads from s₁ to the absorbing s₂.
inline TabularMdp transfer_target_mdp(double gamma) { return escape_chain_mdp(gamma); }

/// Transition rows drawn as normalized uniforms; deterministic in `seed`.
inline TabularMdp random_mdp(std::size_t S, std::size_t A, double gamma, std::uint64_t seed, std::size_t s0 = 0) {
    Rng rng(mix64(seed));
    std::vector<double> p(S * A * S);
    for (std::size_t row = 0; row < S * A; ++row) {
        double sum = 0.0;
        for (std::size_t k = 0; k < S; ++k) sum += (p[row * S + k] = rng.uniform() + 1e-3);
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < S; ++k) acc += (p[row * S + k] /= sum);
        p[row * S + S - 1] = std::max(0.0, 1.0 - acc);
    }
    return TabularMdp(S, A, s0, std::move(p), gamma);
}

/// Closed-form limit of new_env_bias_ratio as γ → 1.
inline double bias_ratio_closed_form(double c2) {
    if (!(c2 > 0.0)) throw DomainError("bias_ratio_closed_form: c2 must be positive");
    if (c2 >= 2.0) return 1.0 / (3.0 * c2);
    return c2 * c2 / 24.0 - c2 / 4.0 + 0.5;
}

/**
 * Among bounded rewards (C₁ = 1, C₂ = c2) for which a₂ is optimal at s₁ of
 * the transfer source, the fraction for which a₁ is optimal at s₁ of the
 * transfer target. Samples are drawn through the (V, gap) parameterization,
 * which is uniform on that set because k_π = 1/(1−γ) for every policy.
 */
inline McEstimate new_env_bias_ratio(double c2, std::uint64_t n, std::uint64_t seed, double gamma = 0.999) {
    detail::require_samples(n, "new_env_bias_ratio");
    if (!(c2 > 0.0)) throw DomainError("new_env_bias_ratio: c2 must be positive");
    const TabularMdp source = transfer_source_mdp(gamma);
    const TabularMdp target = transfer_target_mdp(gamma);
    const std::array<std::size_t, 2> pi2_actions = {1, 0};
    const PolicyTable pi2 = PolicyTable::from_actions(pi2_actions, 2);
    const double k = 1.0 / (1.0 - gamma);
    const std::array<std::size_t, 2> pi1 = {0, 0};
    StateSet start(2);
    start.insert(0);
    std::vector<std::uint64_t> hits(detail::chunk_count(n), 0);
    parallel_chunks(hits.size(), [&](std::size_t c) {
        Rng rng = Rng::substream(seed, c);
        OptOracle oracle(target);
        std::vector<double> v(2);
        Matrix gaps(2, 2);
        std::uint64_t h = 0;
        for (std::size_t i = 0, m = detail::chunk_size(n, c); i < m; ++i) {
            v[0] = rng.uniform(-k, k);
            v[1] = rng.uniform(-k, k);
            gaps(0, 0) = -c2 * rng.uniform();
            const RewardTable r = t_operator(source, pi2, v, AdvantageGap(gaps, pi2));
            oracle.solve(r.flat(), pi1);
            if (oracle.expert_optimal(pi1, start, 0.0)) ++h;
        }
        hits[c] = h;
    });
    std::uint64_t total = 0;
    for (auto h : hits) total += h;
    return detail::binomial(total, n);
}

}  // namespace cirl
