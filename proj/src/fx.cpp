#include "dowsn/fx.hpp"

#include "fx_kernels.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace dowsn {

using detail::i128;
using detail::round_shift;

namespace {

Fx checked_fx(std::int64_t raw)
{
    if (raw > INT32_MAX || raw < INT32_MIN)
        throw OverflowError("fx: result out of Q16.16 range");
    return Fx::from_raw(static_cast<std::int32_t>(raw));
}

FxWide checked_wide(i128 raw)
{
    if (raw > INT64_MAX || raw < INT64_MIN)
        throw OverflowError("fx: result out of Q32.32 range");
    return FxWide::from_raw(static_cast<std::int64_t>(raw));
}

// Rounded quotient num/den, ties away from zero.
i128 round_div(i128 num, i128 den)
{
    const bool neg = (num < 0) != (den < 0);
    const i128 n = num < 0 ? -num : num;
    const i128 d = den < 0 ? -den : den;
    i128 q = n / d;
    if (2 * (n % d) >= d)
        ++q;
    return neg ? -q : q;
}

} // namespace

Fx operator+(Fx a, Fx b) { return checked_fx(std::int64_t{a.raw()} + b.raw()); }
Fx operator-(Fx a, Fx b) { return checked_fx(std::int64_t{a.raw()} - b.raw()); }
Fx operator-(Fx a) { return checked_fx(-std::int64_t{a.raw()}); }

Fx operator*(Fx a, Fx b)
{
    const i128 prod = static_cast<i128>(a.raw()) * b.raw();
    const i128 r = round_shift(prod, Fx::kFracBits);
    if (r > INT32_MAX || r < INT32_MIN)
        throw OverflowError("fx: product out of Q16.16 range");
    return Fx::from_raw(static_cast<std::int32_t>(r));
}

Fx operator/(Fx a, Fx b)
{
    if (b.raw() == 0)
        throw DivByZeroError("fx: division by zero");
    const i128 q = round_div(static_cast<i128>(a.raw()) << Fx::kFracBits, b.raw());
    if (q > INT32_MAX || q < INT32_MIN)
        throw OverflowError("fx: quotient out of Q16.16 range");
    return Fx::from_raw(static_cast<std::int32_t>(q));
}

Fx mul_int(Fx a, std::int64_t k)
{
    const i128 p = static_cast<i128>(a.raw()) * k;
    if (p > INT32_MAX || p < INT32_MIN)
        throw OverflowError("fx: scaled value out of Q16.16 range");
    return Fx::from_raw(static_cast<std::int32_t>(p));
}

Fx div_int(Fx a, std::int64_t k)
{
    if (k == 0)
        throw DivByZeroError("fx: division by zero");
    return checked_fx(static_cast<std::int64_t>(round_div(a.raw(), k)));
}

Fx abs(Fx x) { return x.raw() < 0 ? -x : x; }

std::string to_string(Fx v)
{
    // Doubles hold every Q16.16 value exactly, so %.6f rounds the true value.
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v.to_real());
    return buf;
}

std::optional<Fx> parse_fx(std::string_view text)
{
    double value = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        return std::nullopt;
    try {
        return Fx::from_real(value);
    } catch (const FxError&) {
        return std::nullopt;
    }
}

std::ostream& operator<<(std::ostream& os, Fx v) { return os << to_string(v); }

FxWide FxWide::from_real(double v)
{
    if (!std::isfinite(v))
        throw DomainError("fx: non-finite value");
    const double scaled = std::round(v * 4294967296.0);
    if (scaled >= 9.2233720368547758e18 || scaled < -9.2233720368547758e18)
        throw OverflowError("fx: value out of Q32.32 range");
    return from_raw(static_cast<std::int64_t>(scaled));
}

FxWide FxWide::from_int(std::int64_t v)
{
    if (v >= (std::int64_t{1} << 31) || v < -(std::int64_t{1} << 31))
        throw OverflowError("fx: integer out of Q32.32 range");
    return from_raw(v * (std::int64_t{1} << 32));
}

double FxWide::to_real() const noexcept { return static_cast<double>(raw_) / 4294967296.0; }

Fx FxWide::narrow() const
{
    return checked_fx(static_cast<std::int64_t>(round_shift(raw_, kFracBits - Fx::kFracBits)));
}

FxWide operator+(FxWide a, FxWide b) { return checked_wide(static_cast<i128>(a.raw()) + b.raw()); }
FxWide operator-(FxWide a, FxWide b) { return checked_wide(static_cast<i128>(a.raw()) - b.raw()); }
FxWide operator-(FxWide a) { return checked_wide(-static_cast<i128>(a.raw())); }

FxWide operator*(FxWide a, FxWide b)
{
    i128 prod = 0;
    if (__builtin_mul_overflow(static_cast<i128>(a.raw()), static_cast<i128>(b.raw()), &prod))
        throw OverflowError("fx: product out of Q32.32 range");
    return checked_wide(round_shift(prod, FxWide::kFracBits));
}

FxWide operator/(FxWide a, FxWide b)
{
    if (b.raw() == 0)
        throw DivByZeroError("fx: division by zero");
    return checked_wide(round_div(static_cast<i128>(a.raw()) << FxWide::kFracBits, b.raw()));
}

FxWide mul_int(FxWide a, std::int64_t k) { return checked_wide(static_cast<i128>(a.raw()) * k); }

FxWide div_int(FxWide a, std::int64_t k)
{
    if (k == 0)
        throw DivByZeroError("fx: division by zero");
    return checked_wide(round_div(a.raw(), k));
}

FxWide abs(FxWide x) { return x.raw() < 0 ? -x : x; }

} // namespace dowsn
