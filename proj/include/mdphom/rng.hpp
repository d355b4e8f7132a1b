#pragma once

#include <cstdint>
#include <cstddef>

namespace mdphom {

/// xoshiro256++ generator. Hand-rolled so that seeded runs produce identical
/// streams on every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform index in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n);

    /// Independent child generator; `stream` selects the substream.
    Rng split(std::uint64_t stream);

private:
    std::uint64_t state_[4];
};

}  // namespace mdphom
