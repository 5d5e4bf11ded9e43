#pragma once

// Deterministic random number plumbing. Every stochastic draw in a run is
// derived from (master seed, run index, step) through counter-based
// splitting, so runs are reproducible bit-for-bit regardless of execution
// order or worker count.

#include <cmath>
#include <cstdint>

namespace tokensim {

namespace detail {

// SplitMix64 finalizer. Bijective on uint64, good avalanche.
inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t kRunGamma = 0x9E3779B97F4A7C15ULL;  // odd
inline constexpr std::uint64_t kStepGamma = 0xD1B54A32D192ED03ULL; // odd

}  // namespace detail

/// Derives the seed for one Monte Carlo run from the scenario master seed.
/// run_id -> master + (run_id+1)*gamma is injective (gamma is odd, so
/// multiplication is a bijection mod 2^64) and mix64 is bijective, hence
/// distinct run ids always yield distinct seeds under one master seed.
inline constexpr std::uint64_t derive_run_seed(std::uint64_t master_seed,
                                               std::uint64_t run_id) noexcept {
    return detail::mix64(master_seed + (run_id + 1) * detail::kRunGamma);
}

/// Sequential SplitMix64 generator plus the handful of distributions the
/// simulation needs. Distributions are hand-rolled on top of raw uniforms:
/// std::poisson_distribution and friends are implementation-defined and
/// would break cross-invocation byte-stability of emitted artifacts.
class RngStream {
public:
    RngStream() = default;
    explicit constexpr RngStream(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next_u64() noexcept {
        state_ += detail::kRunGamma;
        return detail::mix64(state_);
    }

    /// Uniform in [0, 1).
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1]; safe as a log() argument.
    double uniform01_open_low() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller. Consumes exactly two uniforms.
    double normal() noexcept {
        const double u1 = uniform01_open_low();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Poisson(mu) count. Knuth product method for the small rates used by
    /// the adoption model; normal approximation above the exp() underflow
    /// range.
    std::int64_t poisson(double mu) noexcept {
        if (!(mu > 0.0)) return 0;
        if (mu > 60.0) {
            const double draw = mu + std::sqrt(mu) * normal();
            return draw > 0.0 ? static_cast<std::int64_t>(std::llround(draw)) : 0;
        }
        const double limit = std::exp(-mu);
        std::int64_t count = -1;
        double product = 1.0;
        do {
            ++count;
            product *= uniform01_open_low();
        } while (product > limit);
        return count;
    }

    /// Mean-one lognormal factor: exp(sigma*z - sigma^2/2), E[factor] = 1.
    double lognormal_factor(double sigma) noexcept {
        if (!(sigma > 0.0)) return 1.0;
        return std::exp(sigma * normal() - 0.5 * sigma * sigma);
    }

private:
    std::uint64_t state_ = 0;
};

/// Per-run noise source: hands out an independent stream per step, so a
/// draw is fully determined by (run seed, step, draw order within the step).
class EnvNoise {
public:
    EnvNoise() = default;
    explicit constexpr EnvNoise(std::uint64_t run_seed) noexcept : run_seed_(run_seed) {}

    constexpr std::uint64_t run_seed() const noexcept { return run_seed_; }

    RngStream stream_for_step(std::uint64_t step) const noexcept {
        return RngStream(detail::mix64(run_seed_ + (step + 1) * detail::kStepGamma));
    }

private:
    std::uint64_t run_seed_ = 0;
};

}  // namespace tokensim
