#pragma once

// High-precision integer kernels behind the Q16.16 / Q32.32 math suite.
// Arguments and results are 128-bit fixed-point values with an explicit
// number of fractional bits; series run in Q4.60.

#include <cstdint>
#include <optional>

namespace dowsn::detail {

using i128 = __int128;
using u128 = unsigned __int128;

// v / 2^shift rounded to nearest, ties away from zero. Negative shift scales up.
inline i128 round_shift(i128 v, int shift)
{
    if (shift <= 0)
        return v << -shift;
    const i128 half = i128{1} << (shift - 1);
    return v >= 0 ? (v + half) >> shift : -((-v + half) >> shift);
}

// pi and ln 2 with 64 fractional bits.
inline constexpr i128 kPiQ64 = (i128{3} << 64) | i128{0x243F6A8885A308D3ULL};
inline constexpr i128 kHalfPiQ64 = kPiQ64 >> 1;
inline constexpr i128 kLn2Q64 = i128{0xB17217F7D1CF79ACULL};

// sin (or cos) of a Q.64 argument, result in Q.60.
std::int64_t sincos_q60(i128 x_q64, bool cosine);

// e^x for a Q.64 argument, returned with out_frac fractional bits. Returns
// nullopt when the result exceeds limit.
std::optional<i128> exp_fixed(i128 x_q64, int out_frac, i128 limit);

// Natural log of mag / 2^frac (mag > 0), result in Q.64.
i128 log_q64(u128 mag, int frac);

u128 isqrt(u128 n);

// |base|^k with base and result in Q.48. nullopt when the result exceeds limit.
std::optional<u128> pow_q48(u128 base, std::uint64_t k, u128 limit);

} // namespace dowsn::detail
