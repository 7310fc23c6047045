#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "cirl/linalg.hpp"
#include "cirl/mdp.hpp"
#include "cirl/reward_geometry.hpp"

namespace cirl {

struct CentroidRequest {
    PolicyTable expert;
    StateSet support;
    BehaviorModel model = BehaviorModel::opt();

    std::size_t num_states() const { return expert.num_states(); }
    std::size_t num_actions() const { return expert.num_actions(); }

    void validate() const {
        if (support.universe() != expert.num_states()) throw DomainError("CentroidRequest: support universe mismatch");
        if (model.kind() == ModelKind::Opt) {
            for (auto s : support.members())
                if (!expert.row_deterministic(s))
                    throw DomainError("CentroidRequest: OPT expert must be deterministic on the support");
            return;
        }
        if (!support.is_full()) throw DomainError("CentroidRequest: MCE/BIRL centroids need the full state space as support");
        require_positive_policy(expert, "CentroidRequest");
    }
};

/// 1 at the expert action on the support, 0 elsewhere on the support, 1/A off it.
inline RewardTable centroid_opt(const CentroidRequest& req) {
    if (req.model.kind() != ModelKind::Opt) throw DomainError("centroid_opt: request model must be OPT");
    req.validate();
    const std::size_t S = req.num_states(), A = req.num_actions();
    Matrix r(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        if (req.support.contains(s)) {
            r(s, req.expert.action(s)) = 1.0;
        } else {
            for (std::size_t a = 0; a < A; ++a) r(s, a) = 1.0 / static_cast<double>(A);
        }
    }
    return RewardTable(std::move(r));
}

inline RewardTable centroid_mce(const CentroidRequest& req) {
    if (req.model.kind() != ModelKind::Mce) throw DomainError("centroid_mce: request model must be MCE");
    req.validate();
    return eta_mce(req.expert, 1.0);
}

inline RewardTable centroid_birl(const CentroidRequest& req) {
    if (req.model.kind() != ModelKind::Birl) throw DomainError("centroid_birl: request model must be BIRL");
    req.validate();
    return eta_birl(req.expert, 1.0);
}

inline RewardTable centroid(const CentroidRequest& req) {
    switch (req.model.kind()) {
        case ModelKind::Opt: return centroid_opt(req);
        case ModelKind::Mce: return centroid_mce(req);
        case ModelKind::Birl: return centroid_birl(req);
    }
    throw DomainError("centroid: unknown model");
}

inline RewardTable prior_centroid_opt(std::size_t num_states, std::size_t num_actions) {
    return RewardTable(num_states, num_actions, 0.0);
}

/// Number of deterministic policies agreeing with the expert on the support.
inline std::size_t extension_count(const CentroidRequest& req) {
    const std::size_t free = req.num_states() - req.support.size();
    std::size_t n = 1;
    for (std::size_t i = 0; i < free; ++i) {
        if (n > (std::size_t{1} << 40) / req.num_actions()) throw DomainError("extension_count: too many extensions");
        n *= req.num_actions();
    }
    return n;
}

/// Deterministic extension number `index`: off-support states, in increasing
/// order, are the mixed-radix digits of `index` (least significant first).
inline std::vector<std::size_t> extension_actions(const CentroidRequest& req, std::size_t index) {
    const std::size_t A = req.num_actions();
    std::vector<std::size_t> acts(req.num_states(), 0);
    for (std::size_t s = 0; s < acts.size(); ++s) {
        if (req.support.contains(s)) {
            acts[s] = req.expert.action(s);
        } else {
            acts[s] = index % A;
            index /= A;
        }
    }
    return acts;
}

/**
 * Centroid under a prior that weights each deterministic extension π of the
 * expert by q(π). Off the support, entry (s,a) is the q-mass of extensions
 * that play a at s.
 */
inline RewardTable weighted_centroid_opt(const CentroidRequest& req, std::span<const double> q) {
    if (req.model.kind() != ModelKind::Opt) throw DomainError("weighted_centroid_opt: request model must be OPT");
    req.validate();
    const std::size_t n = extension_count(req);
    if (q.size() != n) throw DomainError("weighted_centroid_opt: weight vector has wrong length");
    double total = 0.0;
    for (double w : q) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("weighted_centroid_opt: weights must be nonnegative");
        total += w;
    }
    if (!(total > 0.0)) throw DomainError("weighted_centroid_opt: weights sum to zero");
    const std::size_t S = req.num_states(), A = req.num_actions();
    Matrix r(S, A);
    for (std::size_t e = 0; e < n; ++e) {
        if (q[e] == 0.0) continue;
        const auto acts = extension_actions(req, e);
        for (std::size_t s = 0; s < S; ++s)
            if (!req.support.contains(s)) r(s, acts[s]) += q[e];
    }
    for (std::size_t s = 0; s < S; ++s) {
        if (req.support.contains(s)) {
            r(s, req.expert.action(s)) = 1.0;
        } else {
            for (std::size_t a = 0; a < A; ++a) r(s, a) /= total;
        }
    }
    return RewardTable(std::move(r));
}

struct AffineFit {
    double alpha;
    double beta;
    double residual_sup;
};

/// Least-squares fit estimate ≈ α·reference + β.
inline AffineFit affine_fit(const RewardTable& estimate, const RewardTable& reference) {
    if (estimate.num_states() != reference.num_states() || estimate.num_actions() != reference.num_actions())
        throw DomainError("affine_fit: shape mismatch");
    const auto x = reference.flat();
    const auto y = estimate.flat();
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    const double scale = std::max(1.0, std::abs(mx));
    if (!(sxx > 1e-24 * scale * scale * n)) throw DomainError("affine_fit: reference table is constant");
    const double alpha = sxy / sxx;
    const double beta = my - alpha * mx;
    double res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) res = std::max(res, std::abs(y[i] - alpha * x[i] - beta));
    return {alpha, beta, res};
}

/// Fit estimate ≈ β (the affine image of a constant table).
inline AffineFit constant_fit(const RewardTable& estimate) {
    const auto y = estimate.flat();
    double my = 0.0;
    for (double v : y) my += v;
    my /= static_cast<double>(y.size());
    double res = 0.0;
    for (double v : y) res = std::max(res, std::abs(v - my));
    return {0.0, my, res};
}

}  // namespace cirl
