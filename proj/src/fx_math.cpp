#include "dowsn/fx.hpp"

#include "fx_kernels.hpp"

#include <cmath>

namespace dowsn {

namespace detail {

namespace {

constexpr int kSeriesBits = 60;
constexpr std::int64_t kOneQ60 = std::int64_t{1} << kSeriesBits;

std::int64_t mul60(std::int64_t a, std::int64_t b)
{
    return static_cast<std::int64_t>(round_shift(static_cast<i128>(a) * b, kSeriesBits));
}

i128 div_round(i128 num, i128 den)
{
    const bool neg = (num < 0) != (den < 0);
    const i128 n = num < 0 ? -num : num;
    const i128 d = den < 0 ? -den : den;
    i128 q = n / d;
    if (2 * (n % d) >= d)
        ++q;
    return neg ? -q : q;
}

int msb(u128 v)
{
    const auto hi = static_cast<std::uint64_t>(v >> 64);
    if (hi != 0)
        return 127 - __builtin_clzll(hi);
    return 63 - __builtin_clzll(static_cast<std::uint64_t>(v));
}

} // namespace

std::int64_t sincos_q60(i128 x_q64, bool cosine)
{
    const i128 quadrant = div_round(x_q64, kHalfPiQ64);
    const auto r = static_cast<std::int64_t>(round_shift(x_q64 - quadrant * kHalfPiQ64, 4));
    const std::int64_t r2 = mul60(r, r);

    std::int64_t s = r;
    for (std::int64_t term = r, j = 1; term != 0; ++j) {
        term = -mul60(term, r2) / ((2 * j) * (2 * j + 1));
        s += term;
    }
    std::int64_t c = kOneQ60;
    for (std::int64_t term = kOneQ60, j = 1; term != 0; ++j) {
        term = -mul60(term, r2) / ((2 * j - 1) * (2 * j));
        c += term;
    }

    int q = static_cast<int>(((quadrant % 4) + 4) % 4);
    if (cosine)
        q = (q + 1) % 4;
    switch (q) {
    case 0: return s;
    case 1: return c;
    case 2: return -s;
    default: return -c;
    }
}

std::optional<i128> exp_fixed(i128 x_q64, int out_frac, i128 limit)
{
    const i128 k = div_round(x_q64, kLn2Q64);
    if (k > 100)
        return std::nullopt;
    if (k < -200)
        return i128{0};
    const auto r = static_cast<std::int64_t>(round_shift(x_q64 - k * kLn2Q64, 4));

    std::int64_t sum = kOneQ60;
    for (std::int64_t term = kOneQ60, j = 1; term != 0; ++j) {
        term = mul60(term, r) / j;
        sum += term;
    }

    const int shift = kSeriesBits - out_frac - static_cast<int>(k);
    i128 value = 0;
    if (shift >= 126) {
        value = 0;
    } else if (shift < 0) {
        if (-shift > 62)
            return std::nullopt;
        value = static_cast<i128>(sum) << -shift;
    } else {
        value = round_shift(sum, shift);
    }
    if (value > limit)
        return std::nullopt;
    return value;
}

i128 log_q64(u128 mag, int frac)
{
    const int p = msb(mag);
    const u128 mant = p <= kSeriesBits ? mag << (kSeriesBits - p) : mag >> (p - kSeriesBits);
    const auto m = static_cast<std::int64_t>(mant);

    // ln m = 2 atanh((m - 1) / (m + 1)), with m in [1, 2).
    const auto z = static_cast<std::int64_t>(
        div_round(static_cast<i128>(m - kOneQ60) << kSeriesBits, static_cast<i128>(m) + kOneQ60));
    const std::int64_t z2 = mul60(z, z);
    std::int64_t sum = 0;
    for (std::int64_t term = z, j = 0; term != 0; ++j) {
        sum += term / (2 * j + 1);
        term = mul60(term, z2);
    }
    return static_cast<i128>(p - frac) * kLn2Q64 + (static_cast<i128>(2 * sum) << 4);
}

u128 isqrt(u128 n)
{
    if (n == 0)
        return 0;
    auto s = static_cast<u128>(std::sqrt(static_cast<long double>(n)));
    while (s * s > n)
        --s;
    while ((s + 1) * (s + 1) <= n)
        ++s;
    return s;
}

std::optional<u128> pow_q48(u128 base, std::uint64_t k, u128 limit)
{
    constexpr u128 half = u128{1} << 47;
    const auto mulq48 = [](u128 a, u128 b) -> std::optional<u128> {
        u128 p = 0;
        if (__builtin_mul_overflow(a, b, &p) || p > ~half)
            return std::nullopt;
        return (p + half) >> 48;
    };

    u128 acc = u128{1} << 48;
    while (k != 0) {
        if (k & 1) {
            const auto next = mulq48(acc, base);
            if (!next || *next > limit)
                return std::nullopt;
            acc = *next;
        }
        k >>= 1;
        if (k != 0) {
            const auto sq = mulq48(base, base);
            if (!sq || *sq > limit)
                return std::nullopt;
            base = *sq;
        }
    }
    return acc;
}

} // namespace detail

using detail::i128;
using detail::round_shift;
using detail::u128;

namespace {

Fx fx_from_wide_raw(i128 raw)
{
    if (raw > INT32_MAX || raw < INT32_MIN)
        throw OverflowError("fx: result out of Q16.16 range");
    return Fx::from_raw(static_cast<std::int32_t>(raw));
}

FxWide wide_from_raw(i128 raw)
{
    if (raw > INT64_MAX || raw < INT64_MIN)
        throw OverflowError("fx: result out of Q32.32 range");
    return FxWide::from_raw(static_cast<std::int64_t>(raw));
}

constexpr int kFxShift = 64 - Fx::kFracBits;
constexpr int kWideShift = 64 - FxWide::kFracBits;

// Shared integer-power path. mag is |x| scaled to Q.48, frac is the output's
// fractional bit count, limit the largest representable magnitude in Q.48.
i128 pow_int_raw(u128 mag, bool negative, long long k, int frac, u128 limit)
{
    if (k == 0)
        return i128{1} << frac;
    const bool odd = (k & 1) != 0;
    const auto ek = k < 0 ? static_cast<std::uint64_t>(-(k + 1)) + 1 : static_cast<std::uint64_t>(k);
    if (k > 0) {
        const auto r = detail::pow_q48(mag, ek, limit);
        if (!r)
            throw OverflowError("fx: power out of range");
        const i128 v = round_shift(static_cast<i128>(*r), 48 - frac);
        return negative && odd ? -v : v;
    }
    if (mag == 0)
        throw DivByZeroError("fx: zero raised to a negative power");
    const auto r = detail::pow_q48(mag, ek, ~u128{0} >> 2);
    if (!r)
        return 0;
    if (*r == 0)
        throw OverflowError("fx: power out of range");
    const u128 num = u128{1} << (48 + frac);
    u128 q = num / *r;
    if (2 * (num % *r) >= *r)
        ++q;
    const auto v = static_cast<i128>(q);
    return negative && odd ? -v : v;
}

} // namespace

Fx sqrt(Fx x)
{
    if (x.raw() < 0)
        throw DomainError("fx: sqrt of a negative value");
    const u128 n = static_cast<u128>(x.raw()) << Fx::kFracBits;
    u128 s = detail::isqrt(n);
    if (n - s * s > s)
        ++s;
    return Fx::from_raw(static_cast<std::int32_t>(s));
}

Fx exp(Fx x)
{
    const auto r = detail::exp_fixed(static_cast<i128>(x.raw()) << kFxShift, Fx::kFracBits, INT32_MAX);
    if (!r)
        throw OverflowError("fx: exp out of range");
    return Fx::from_raw(static_cast<std::int32_t>(*r));
}

Fx log(Fx x)
{
    if (x.raw() <= 0)
        throw DomainError("fx: log of a non-positive value");
    return fx_from_wide_raw(round_shift(detail::log_q64(static_cast<u128>(x.raw()), Fx::kFracBits), kFxShift));
}

Fx sin(Fx x)
{
    return fx_from_wide_raw(round_shift(detail::sincos_q60(static_cast<i128>(x.raw()) << kFxShift, false), 44));
}

Fx cos(Fx x)
{
    return fx_from_wide_raw(round_shift(detail::sincos_q60(static_cast<i128>(x.raw()) << kFxShift, true), 44));
}

Fx pow(Fx x, int k)
{
    const std::int64_t raw = x.raw();
    const u128 mag = static_cast<u128>(raw < 0 ? -raw : raw) << 32;
    return fx_from_wide_raw(pow_int_raw(mag, raw < 0, k, Fx::kFracBits, u128{1} << 63));
}

Fx pow(Fx x, Fx y)
{
    if (y.is_integer())
        return pow(x, y.raw() >> Fx::kFracBits);
    if (x.raw() < 0)
        throw DomainError("fx: negative base with a non-integer exponent");
    if (x.raw() == 0) {
        if (y.raw() < 0)
            throw DivByZeroError("fx: zero raised to a negative power");
        return Fx::zero();
    }
    const i128 l = detail::log_q64(static_cast<u128>(x.raw()), Fx::kFracBits);
    const i128 arg = round_shift(l * y.raw(), Fx::kFracBits);
    const auto r = detail::exp_fixed(arg, Fx::kFracBits, INT32_MAX);
    if (!r)
        throw OverflowError("fx: power out of range");
    return Fx::from_raw(static_cast<std::int32_t>(*r));
}

Fx nth_root(Fx x, int k)
{
    if (k < 1)
        throw DomainError("fx: root index must be positive");
    if (k == 1 || x.raw() == 0)
        return x;
    const std::int64_t raw = x.raw();
    if (raw < 0 && k % 2 == 0)
        throw DomainError("fx: even root of a negative value");
    const auto mag = static_cast<u128>(raw < 0 ? -raw : raw);
    const i128 l = detail::log_q64(mag, Fx::kFracBits);
    const i128 arg = l >= 0 ? (l + k / 2) / k : -((-l + k / 2) / k);
    const auto r = detail::exp_fixed(arg, Fx::kFracBits, i128{1} << 31);
    if (!r)
        throw OverflowError("fx: root out of range");
    return fx_from_wide_raw(raw < 0 ? -*r : *r);
}

FxWide sqrt(FxWide x)
{
    if (x.raw() < 0)
        throw DomainError("fx: sqrt of a negative value");
    const u128 n = static_cast<u128>(x.raw()) << FxWide::kFracBits;
    u128 s = detail::isqrt(n);
    if (n - s * s > s)
        ++s;
    return FxWide::from_raw(static_cast<std::int64_t>(s));
}

FxWide exp(FxWide x)
{
    const auto r = detail::exp_fixed(static_cast<i128>(x.raw()) << kWideShift, FxWide::kFracBits, INT64_MAX);
    if (!r)
        throw OverflowError("fx: exp out of range");
    return FxWide::from_raw(static_cast<std::int64_t>(*r));
}

FxWide log(FxWide x)
{
    if (x.raw() <= 0)
        throw DomainError("fx: log of a non-positive value");
    return wide_from_raw(round_shift(detail::log_q64(static_cast<u128>(x.raw()), FxWide::kFracBits), kWideShift));
}

FxWide sin(FxWide x)
{
    return wide_from_raw(round_shift(detail::sincos_q60(static_cast<i128>(x.raw()) << kWideShift, false), 28));
}

FxWide cos(FxWide x)
{
    return wide_from_raw(round_shift(detail::sincos_q60(static_cast<i128>(x.raw()) << kWideShift, true), 28));
}

FxWide pow(FxWide x, int k)
{
    const i128 raw = x.raw();
    const u128 mag = static_cast<u128>(raw < 0 ? -raw : raw) << 16;
    return wide_from_raw(pow_int_raw(mag, raw < 0, k, FxWide::kFracBits, u128{1} << 79));
}

FxWide pow(FxWide x, FxWide y)
{
    constexpr std::int64_t frac_mask = (std::int64_t{1} << FxWide::kFracBits) - 1;
    if ((y.raw() & frac_mask) == 0) {
        const std::int64_t k = y.raw() >> FxWide::kFracBits;
        if (k <= INT32_MAX && k >= INT32_MIN)
            return pow(x, static_cast<int>(k));
    }
    if (x.raw() < 0)
        throw DomainError("fx: negative base with a non-integer exponent");
    if (x.raw() == 0) {
        if (y.raw() < 0)
            throw DivByZeroError("fx: zero raised to a negative power");
        return FxWide{};
    }
    const i128 l = detail::log_q64(static_cast<u128>(x.raw()), FxWide::kFracBits);
    i128 prod = 0;
    if (__builtin_mul_overflow(l, static_cast<i128>(y.raw()), &prod)) {
        if ((l < 0) != (y.raw() < 0))
            return FxWide{};
        throw OverflowError("fx: power out of range");
    }
    const auto r = detail::exp_fixed(round_shift(prod, FxWide::kFracBits), FxWide::kFracBits, INT64_MAX);
    if (!r)
        throw OverflowError("fx: power out of range");
    return FxWide::from_raw(static_cast<std::int64_t>(*r));
}

} // namespace dowsn
