#pragma once

#include <cstdint>
#include <random>

namespace kinverify {

/// Seeded generator with platform-independent draws.
///
/// The standard distributions are implementation-defined, so the same seed
/// can yield different sequences across standard libraries. Everything that
/// must be reproducible bit-for-bit draws through this wrapper instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream);

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (second variate cached).
    double normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace kinverify
