#pragma once

#include <cstdint>
#include <random>

namespace gengrid {

/// splitmix64 finaliser; used for seed derivation and hashing.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Per-trial seed; stable when the trial count changes.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(base ^ mix64(index + 0x5851f42d4c957f2dULL));
}

/// Seeded generator with distribution code that does not depend on the
/// standard library's (implementation-defined) distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);

    /// Standard normal (Box-Muller, no cached spare).
    double normal();

    double normal(double sigma) { return sigma * normal(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace gengrid
