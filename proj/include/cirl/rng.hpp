#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace cirl {

/// SplitMix64 finalizer: a bijective 64-bit mixing function.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/**
 * SplitMix64 generator with counter-derived substreams.
 *
 * Satisfies UniformRandomBitGenerator. Conversions to doubles and category
 * draws are done here rather than through <random> distributions so that
 * sampled values are identical across standard library implementations.
 */
class Rng {
public:
    using result_type = std::uint64_t;

    explicit constexpr Rng(std::uint64_t seed) noexcept : state_(seed) {}

    /// Independent stream number `stream` of the family rooted at `seed`.
    static constexpr Rng substream(std::uint64_t seed, std::uint64_t stream) noexcept {
        return Rng(mix64(seed ^ mix64(stream + 0x9e3779b97f4a7c15ULL)) ^ 0x6a09e667f3bcc909ULL);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    /// Uniform in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Index drawn with the given probabilities; zero-probability entries are never returned.
    std::size_t categorical(std::span<const double> probs) noexcept {
        const double u = uniform();
        double cum = 0.0;
        std::size_t last = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            cum += probs[i];
            last = i;
            if (u < cum) return i;
        }
        return last;
    }

private:
    std::uint64_t state_;
};

}  // namespace cirl
