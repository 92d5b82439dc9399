#include "dowsn/rng.hpp"

#include <cassert>
#include <stdexcept>

namespace dowsn {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept
{
    std::uint64_t z = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t Rng::below(std::uint64_t n)
{
    assert(n > 0);
    // Rejection on the top of the range keeps the draw exactly uniform.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
    std::uint64_t v = engine_();
    while (v > limit)
        v = engine_();
    return v % n;
}

Fx Rng::uniform(Fx a, Fx b)
{
    if (b < a)
        throw std::invalid_argument("rng: uniform requires a <= b");
    const auto span = static_cast<std::uint64_t>(std::int64_t{b.raw()} - a.raw()) + 1;
    return Fx::from_raw(static_cast<std::int32_t>(a.raw() + static_cast<std::int64_t>(below(span))));
}

} // namespace dowsn
