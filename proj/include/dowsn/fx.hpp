#pragma once

// Q16.16 fixed-point arithmetic with overflow detection.
//
// Every arithmetic operation either returns the exact result rounded to the
// nearest representable value (ties away from zero) or throws. Nothing wraps.
//
// FxWide is a Q32.32 accumulator used where a chain of products must be rounded
// only once (fitness evaluation, equation kernels). It follows the same
// checked-arithmetic rules with its own, wider range.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dowsn {

class FxError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OverflowError : public FxError {
public:
    using FxError::FxError;
};

class DomainError : public FxError {
public:
    using FxError::FxError;
};

class DivByZeroError : public FxError {
public:
    using FxError::FxError;
};

class Fx {
public:
    static constexpr int kFracBits = 16;
    static constexpr std::int32_t kOneRaw = 1 << kFracBits;

    constexpr Fx() noexcept = default;

    static constexpr Fx from_raw(std::int32_t raw) noexcept
    {
        Fx v;
        v.raw_ = raw;
        return v;
    }

    // Nearest representable value; throws OverflowError outside the range and
    // DomainError for NaN.
    static constexpr Fx from_real(double v)
    {
        if (v != v)
            throw DomainError("fx: NaN has no fixed-point representation");
        const double scaled = v * kOneRaw;
        if (scaled >= 2147483647.5 || scaled < -2147483648.5)
            throw OverflowError("fx: value out of Q16.16 range");
        const double mag = (scaled < 0 ? -scaled : scaled) + 0.5;
        const auto rounded = static_cast<std::int64_t>(mag);
        return from_raw(static_cast<std::int32_t>(scaled < 0 ? -rounded : rounded));
    }

    static constexpr Fx from_int(std::int64_t v)
    {
        if (v > 32767 || v < -32768)
            throw OverflowError("fx: integer out of Q16.16 range");
        return from_raw(static_cast<std::int32_t>(v * kOneRaw));
    }

    static constexpr Fx zero() noexcept { return from_raw(0); }
    static constexpr Fx one() noexcept { return from_raw(kOneRaw); }
    static constexpr Fx max() noexcept { return from_raw(INT32_MAX); }
    static constexpr Fx min() noexcept { return from_raw(INT32_MIN); }
    // One ulp, 1/65536.
    static constexpr Fx epsilon() noexcept { return from_raw(1); }

    constexpr std::int32_t raw() const noexcept { return raw_; }
    constexpr double to_real() const noexcept { return static_cast<double>(raw_) / kOneRaw; }
    constexpr bool is_integer() const noexcept { return (raw_ & (kOneRaw - 1)) == 0; }

    friend constexpr auto operator<=>(Fx, Fx) noexcept = default;

    Fx& operator+=(Fx o) { return *this = *this + o; }
    Fx& operator-=(Fx o) { return *this = *this - o; }
    Fx& operator*=(Fx o) { return *this = *this * o; }
    Fx& operator/=(Fx o) { return *this = *this / o; }

    friend Fx operator+(Fx a, Fx b);
    friend Fx operator-(Fx a, Fx b);
    friend Fx operator*(Fx a, Fx b);
    friend Fx operator/(Fx a, Fx b);
    friend Fx operator-(Fx a);

private:
    std::int32_t raw_ = 0;
};

inline namespace literals {
constexpr Fx operator""_fx(long double v) { return Fx::from_real(static_cast<double>(v)); }
constexpr Fx operator""_fx(unsigned long long v) { return Fx::from_int(static_cast<std::int64_t>(v)); }
} // namespace literals

// Exact integer scaling (checked) and rounded division by an integer.
Fx mul_int(Fx a, std::int64_t k);
Fx div_int(Fx a, std::int64_t k);

Fx abs(Fx x);
constexpr Fx min(Fx a, Fx b) noexcept { return b < a ? b : a; }
constexpr Fx max(Fx a, Fx b) noexcept { return a < b ? b : a; }
Fx sqrt(Fx x);
Fx nth_root(Fx x, int k);
Fx pow(Fx x, int k);
Fx pow(Fx x, Fx y);
Fx exp(Fx x);
Fx log(Fx x);
Fx sin(Fx x);
Fx cos(Fx x);

// Six fractional digits; parse_fx rounds back to the same value.
std::string to_string(Fx v);
std::optional<Fx> parse_fx(std::string_view text);
std::ostream& operator<<(std::ostream& os, Fx v);

class FxWide {
public:
    static constexpr int kFracBits = 32;

    constexpr FxWide() noexcept = default;
    constexpr FxWide(Fx v) noexcept : raw_(static_cast<std::int64_t>(v.raw()) * 65536) {} // NOLINT: widening is lossless

    static constexpr FxWide from_raw(std::int64_t raw) noexcept
    {
        FxWide w;
        w.raw_ = raw;
        return w;
    }
    static FxWide from_real(double v);
    static FxWide from_int(std::int64_t v);

    constexpr std::int64_t raw() const noexcept { return raw_; }
    double to_real() const noexcept;

    // Round to the nearest Fx; throws OverflowError when out of Q16.16 range.
    Fx narrow() const;

    friend constexpr auto operator<=>(FxWide, FxWide) noexcept = default;

    FxWide& operator+=(FxWide o) { return *this = *this + o; }
    FxWide& operator-=(FxWide o) { return *this = *this - o; }
    FxWide& operator*=(FxWide o) { return *this = *this * o; }

    friend FxWide operator+(FxWide a, FxWide b);
    friend FxWide operator-(FxWide a, FxWide b);
    friend FxWide operator*(FxWide a, FxWide b);
    friend FxWide operator/(FxWide a, FxWide b);
    friend FxWide operator-(FxWide a);

private:
    std::int64_t raw_ = 0;
};

FxWide mul_int(FxWide a, std::int64_t k);
FxWide div_int(FxWide a, std::int64_t k);

FxWide abs(FxWide x);
FxWide sqrt(FxWide x);
FxWide pow(FxWide x, int k);
FxWide pow(FxWide x, FxWide y);
FxWide exp(FxWide x);
FxWide log(FxWide x);
FxWide sin(FxWide x);
FxWide cos(FxWide x);

} // namespace dowsn
