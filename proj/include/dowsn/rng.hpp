#pragma once

#include "dowsn/fx.hpp"

#include <cstdint>
#include <random>

namespace dowsn {

// SplitMix64 finalizer over (a, b). Used for every seed derivation so that
// published numbers can be re-derived from the master seed alone.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

// Seedable, splittable random stream. Backed by std::mt19937_64, whose output
// sequence is fixed by the standard; all draws are mapped to integers here
// rather than through the implementation-defined std distributions.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    std::uint64_t seed() const noexcept { return seed_; }

    // Independent child stream; does not advance this stream.
    Rng split(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    // Uniform over the representable values of [a, b] (inclusive). Requires a <= b.
    Fx uniform(Fx a, Fx b);

    // Uniform over [0, 1): raw values 0..65535.
    Fx unit() { return Fx::from_raw(static_cast<std::int32_t>(below(Fx::kOneRaw))); }

    // Uniform over (0, 1): raw values 1..65535.
    Fx open_unit() { return Fx::from_raw(static_cast<std::int32_t>(1 + below(Fx::kOneRaw - 1))); }

    // True with probability p (p clipped to [0, 1]).
    bool chance(Fx p) { return unit() < p; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace dowsn
