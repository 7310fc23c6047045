#pragma once

// Random instances for tests. Generated with mt19937_64 (whose output is fixed
// by the standard) rather than the library RNG, so test inputs stay
// independent of the code under test.

#include <cstdint>
#include <random>
#include <vector>

#include "cirl/mdp.hpp"

namespace cirl::testing {

class TestRng {
public:
    explicit TestRng(std::uint64_t seed) : g_(seed) {}

    double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(g_() % n); }

private:
    std::mt19937_64 g_;
};

/// Dense random kernel. With `sparsity` > 0 each entry is zeroed with that
/// probability (one entry per row always survives).
inline TabularMdp random_kernel_mdp(TestRng& rng, std::size_t S, std::size_t A, double gamma, double sparsity = 0.0,
                                    std::size_t s0 = 0) {
    std::vector<double> p(S * A * S, 0.0);
    for (std::size_t row = 0; row < S * A; ++row) {
        double sum = 0.0;
        const std::size_t keep = rng.index(S);
        for (std::size_t k = 0; k < S; ++k) {
            if (k != keep && rng.uniform() < sparsity) continue;
            sum += (p[row * S + k] = 0.05 + rng.uniform());
        }
        double acc = 0.0;
        std::size_t last = S;
        for (std::size_t k = 0; k < S; ++k)
            if (p[row * S + k] > 0.0) last = k;
        for (std::size_t k = 0; k < S; ++k) {
            if (k == last || p[row * S + k] == 0.0) continue;
            acc += (p[row * S + k] /= sum);
        }
        p[row * S + last] = 1.0 - acc;
    }
    return TabularMdp(S, A, s0, std::move(p), gamma);
}

inline RewardTable random_reward(TestRng& rng, std::size_t S, std::size_t A, double lo = -1.0, double hi = 1.0) {
    Matrix m(S, A);
    for (double& x : m.flat()) x = rng.uniform(lo, hi);
    return RewardTable(std::move(m));
}

/// Strictly positive stochastic policy with every entry ≥ floor.
inline PolicyTable random_positive_policy(TestRng& rng, std::size_t S, std::size_t A, double floor = 0.02) {
    Matrix m(S, A);
    for (std::size_t s = 0; s < S; ++s) {
        double sum = 0.0;
        for (std::size_t a = 0; a < A; ++a) sum += (m(s, a) = rng.uniform(0.1, 1.0));
        double acc = 0.0;
        for (std::size_t a = 0; a + 1 < A; ++a) {
            m(s, a) = floor + (1.0 - floor * static_cast<double>(A)) * m(s, a) / sum;
            acc += m(s, a);
        }
        m(s, A - 1) = 1.0 - acc;
    }
    return PolicyTable(std::move(m));
}

inline std::vector<std::size_t> random_actions(TestRng& rng, std::size_t S, std::size_t A) {
    std::vector<std::size_t> acts(S);
    for (auto& a : acts) a = rng.index(A);
    return acts;
}

inline std::vector<double> random_vector(TestRng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

}  // namespace cirl::testing
