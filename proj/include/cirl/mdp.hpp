#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cirl/linalg.hpp"

namespace cirl {

/// Invalid input or a precondition violated by the caller.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A planning problem whose constraint set is empty.
class InfeasibleError : public DomainError {
public:
    using DomainError::DomainError;
};

inline constexpr double kRowSumTolerance = 1e-12;

/**
 * Finite MDP without reward: states, actions, initial state, transition
 * kernel p(s'|s,a) and discount factor.
 */
class TabularMdp {
public:
    /// `transitions` is laid out as [s][a][s'].
    TabularMdp(std::size_t num_states, std::size_t num_actions, std::size_t initial_state,
               std::vector<double> transitions, double discount)
        : s_(num_states), a_(num_actions), s0_(initial_state), gamma_(discount),
          p_(std::move(transitions)) {
        if (s_ == 0 || a_ == 0) throw DomainError("TabularMdp: need at least one state and action");
        if (s0_ >= s_) throw DomainError("TabularMdp: initial_state out of range");
        if (!(gamma_ >= 0.0 && gamma_ < 1.0)) throw DomainError("TabularMdp: discount must lie in [0,1)");
        if (p_.size() != s_ * a_ * s_) throw DomainError("TabularMdp: transition tensor has wrong size");
        for (std::size_t s = 0; s < s_; ++s) {
            for (std::size_t a = 0; a < a_; ++a) {
                double sum = 0.0;
                for (double x : next(s, a)) {
                    if (!std::isfinite(x) || x < 0.0)
                        throw DomainError("TabularMdp: negative or non-finite transition probability at (" +
                                          std::to_string(s) + "," + std::to_string(a) + ")");
                    sum += x;
                }
                if (std::abs(sum - 1.0) > kRowSumTolerance)
                    throw DomainError("TabularMdp: transition row (" + std::to_string(s) + "," +
                                      std::to_string(a) + ") does not sum to 1");
            }
        }
    }

    std::size_t num_states() const noexcept { return s_; }
    std::size_t num_actions() const noexcept { return a_; }
    std::size_t initial_state() const noexcept { return s0_; }
    double discount() const noexcept { return gamma_; }

    double p(std::size_t s, std::size_t a, std::size_t s2) const { return p_[(s * a_ + a) * s_ + s2]; }
    std::span<const double> next(std::size_t s, std::size_t a) const { return {p_.data() + (s * a_ + a) * s_, s_}; }
    std::span<const double> transitions() const noexcept { return p_; }

    TabularMdp with_initial_state(std::size_t s0) const {
        return TabularMdp(s_, a_, s0, p_, gamma_);
    }
    TabularMdp with_discount(double gamma) const {
        return TabularMdp(s_, a_, s0_, p_, gamma);
    }

private:
    std::size_t s_;
    std::size_t a_;
    std::size_t s0_;
    double gamma_;
    std::vector<double> p_;
};

/// Dense S×A table of finite reals.
class RewardTable {
public:
    RewardTable() = default;
    RewardTable(std::size_t num_states, std::size_t num_actions, double fill = 0.0)
        : values_(num_states, num_actions, fill) {
        check();
    }
    explicit RewardTable(Matrix values) : values_(std::move(values)) { check(); }

    std::size_t num_states() const noexcept { return values_.rows(); }
    std::size_t num_actions() const noexcept { return values_.cols(); }
    double operator()(std::size_t s, std::size_t a) const { return values_(s, a); }
    const Matrix& values() const noexcept { return values_; }
    std::span<const double> flat() const noexcept { return values_.flat(); }

    friend bool operator==(const RewardTable&, const RewardTable&) = default;

private:
    void check() const {
        for (double x : values_.flat())
            if (!std::isfinite(x)) throw DomainError("RewardTable: non-finite entry");
    }
    Matrix values_;
};

/// Dense S×A row-stochastic table.
class PolicyTable {
public:
    PolicyTable() = default;
    explicit PolicyTable(Matrix probs) : probs_(std::move(probs)) {
        if (probs_.rows() == 0 || probs_.cols() == 0) throw DomainError("PolicyTable: empty table");
        deterministic_ = true;
        for (std::size_t s = 0; s < probs_.rows(); ++s) {
            double sum = 0.0;
            for (double x : probs_.row(s)) {
                if (!std::isfinite(x) || x < 0.0) throw DomainError("PolicyTable: negative or non-finite probability");
                sum += x;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance)
                throw DomainError("PolicyTable: row " + std::to_string(s) + " does not sum to 1");
            if (!row_deterministic(s)) deterministic_ = false;
        }
    }

    static PolicyTable from_actions(std::span<const std::size_t> actions, std::size_t num_actions) {
        Matrix m(actions.size(), num_actions);
        for (std::size_t s = 0; s < actions.size(); ++s) {
            if (actions[s] >= num_actions) throw DomainError("PolicyTable: action index out of range");
            m(s, actions[s]) = 1.0;
        }
        return PolicyTable(std::move(m));
    }

    static PolicyTable uniform(std::size_t num_states, std::size_t num_actions) {
        return PolicyTable(Matrix(num_states, num_actions, 1.0 / static_cast<double>(num_actions)));
    }

    std::size_t num_states() const noexcept { return probs_.rows(); }
    std::size_t num_actions() const noexcept { return probs_.cols(); }
    double operator()(std::size_t s, std::size_t a) const { return probs_(s, a); }
    std::span<const double> row(std::size_t s) const { return probs_.row(s); }
    const Matrix& probs() const noexcept { return probs_; }

    bool deterministic() const noexcept { return deterministic_; }

    bool row_deterministic(std::size_t s) const {
        std::size_t ones = 0;
        for (double x : probs_.row(s)) {
            if (x == 1.0) ++ones;
            else if (x != 0.0) return false;
        }
        return ones == 1;
    }

    /// The action of a deterministic row.
    std::size_t action(std::size_t s) const {
        if (!row_deterministic(s)) throw DomainError("PolicyTable: row " + std::to_string(s) + " is not deterministic");
        const auto r = probs_.row(s);
        for (std::size_t a = 0; a < r.size(); ++a)
            if (r[a] == 1.0) return a;
        return 0;
    }

    friend bool operator==(const PolicyTable&, const PolicyTable&) = default;

private:
    Matrix probs_;
    bool deterministic_ = false;
};

/// Membership mask over the states of an MDP.
class StateSet {
public:
    StateSet() = default;
    explicit StateSet(std::size_t universe) : mask_(universe, 0) {}
    StateSet(std::size_t universe, std::span<const std::size_t> members) : mask_(universe, 0) {
        for (auto s : members) insert(s);
    }

    static StateSet all(std::size_t universe) {
        StateSet set(universe);
        set.mask_.assign(universe, 1);
        return set;
    }

    void insert(std::size_t s) {
        if (s >= mask_.size()) throw DomainError("StateSet: state index out of range");
        mask_[s] = 1;
    }
    bool contains(std::size_t s) const { return s < mask_.size() && mask_[s] != 0; }
    std::size_t universe() const noexcept { return mask_.size(); }

    std::size_t size() const {
        std::size_t n = 0;
        for (char c : mask_) n += c != 0;
        return n;
    }
    bool is_full() const { return size() == mask_.size(); }

    std::vector<std::size_t> members() const {
        std::vector<std::size_t> out;
        for (std::size_t s = 0; s < mask_.size(); ++s)
            if (mask_[s]) out.push_back(s);
        return out;
    }
    std::vector<std::size_t> complement() const {
        std::vector<std::size_t> out;
        for (std::size_t s = 0; s < mask_.size(); ++s)
            if (!mask_[s]) out.push_back(s);
        return out;
    }

    friend bool operator==(const StateSet&, const StateSet&) = default;

private:
    std::vector<char> mask_;
};

struct ValueFunctions {
    std::vector<double> v;
    Matrix q;
    Matrix advantage;
};

struct SoftValueFunctions {
    std::vector<double> v;
    Matrix q;
    Matrix advantage;
    double lambda = 1.0;
};

inline constexpr double kOccupancySumTolerance = 1e-9;

/// Discounted state-action visitation distribution.
class OccupancyMeasure {
public:
    OccupancyMeasure() = default;
    explicit OccupancyMeasure(Matrix d) : d_(std::move(d)) {
        double sum = 0.0;
        for (double x : d_.flat()) {
            if (!std::isfinite(x) || x < 0.0) throw DomainError("OccupancyMeasure: negative or non-finite entry");
            sum += x;
        }
        if (std::abs(sum - 1.0) > kOccupancySumTolerance) throw DomainError("OccupancyMeasure: entries do not sum to 1");
    }

    std::size_t num_states() const noexcept { return d_.rows(); }
    std::size_t num_actions() const noexcept { return d_.cols(); }
    double operator()(std::size_t s, std::size_t a) const { return d_(s, a); }
    const Matrix& values() const noexcept { return d_; }

    double state_mass(std::size_t s) const {
        double m = 0.0;
        for (double x : d_.row(s)) m += x;
        return m;
    }
    std::vector<double> state_marginal() const {
        std::vector<double> out(num_states());
        for (std::size_t s = 0; s < out.size(); ++s) out[s] = state_mass(s);
        return out;
    }

    /// Largest violation of the Bellman flow equations for `mdp`.
    double flow_residual(const TabularMdp& mdp) const {
        const std::size_t S = mdp.num_states(), A = mdp.num_actions();
        const double g = mdp.discount();
        std::vector<double> inflow(S, 0.0);
        for (std::size_t s = 0; s < S; ++s)
            for (std::size_t a = 0; a < A; ++a) {
                const double m = d_(s, a);
                if (m == 0.0) continue;
                const auto nx = mdp.next(s, a);
                for (std::size_t s2 = 0; s2 < S; ++s2) inflow[s2] += m * nx[s2];
            }
        double worst = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double rhs = (1.0 - g) * (s == mdp.initial_state() ? 1.0 : 0.0) + g * inflow[s];
            worst = std::max(worst, std::abs(state_mass(s) - rhs));
        }
        return worst;
    }

private:
    Matrix d_;
};

inline void require_shape(const TabularMdp& mdp, std::size_t rows, std::size_t cols, const char* what) {
    if (rows != mdp.num_states() || cols != mdp.num_actions())
        throw DomainError(std::string(what) + ": table shape does not match the MDP");
}

}  // namespace cirl
