#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace salab {

/// Counter-based pseudo-random stream. The n-th output is a fixed mixing
/// function of (seed, n), so a trajectory is reproducible from its seed alone
/// and streams for distinct seeds can be consumed concurrently.
///
/// Draw orders are fixed and documented at the call sites that consume them:
/// uniform01() consumes one raw draw, normal() consumes two raw draws per
/// generated pair (the second half of the pair is served from a one-slot cache).
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

    /// splitmix64 step: state advances by a fixed odd constant, output is a
    /// bijective mix of the counter.
    std::uint64_t next_u64() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform draw on [0, 1) with 53 random bits.
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal draw, Box-Muller. Each generated pair consumes exactly
    /// two uniform draws; calls alternate between the two halves of the pair.
    double normal() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        // guard u1 = 0: push to the smallest positive representable in (0,1)
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

    /// Derives an independent stream seed from (master, index). Used for
    /// per-run seeds in Monte Carlo ensembles.
    static std::uint64_t derive(std::uint64_t master, std::uint64_t index) noexcept {
        return mix(master ^ mix(index + 0xD1B54A32D192ED03ull));
    }

    /// Derives the seed block for one grid point of a parameter sweep.
    static std::uint64_t derive_block(std::uint64_t master, std::uint64_t block) noexcept {
        return mix(master ^ mix(block + 0x8CB92BA72F3D8DD7ull));
    }

private:
    static std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace salab
