#pragma once

#include <cstdint>

namespace ortho {

/// Deterministic xoshiro256++ generator seeded through splitmix64.
///
/// Every random quantity in the library flows from one of these; identical
/// seeds give bitwise-identical streams on every platform. Sub-streams for
/// independent consumers are derived with derive(), never by sharing a
/// generator.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t uniform_below(std::uint64_t bound);

    /// Standard normal deviate (Box-Muller, deterministic, one cached spare).
    double normal();

    /// Independent generator for a named sub-stream. Depends only on this
    /// generator's seed and the stream id, not on how much has been consumed.
    Rng derive(std::uint64_t stream) const;

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t state_[4];
    std::uint64_t seed_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ortho
