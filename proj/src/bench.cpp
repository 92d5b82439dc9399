#include "dowsn/bench.hpp"

#include <algorithm>
#include <array>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dowsn {

namespace {

using W = FxWide;

constexpr std::array<FunctionInfo, 15> kRegistry{{
    {FunctionId::sphere, "f1", "Sphere", true, true},
    {FunctionId::rosenbrock, "f2", "Rosenbrock", false, false},
    {FunctionId::ackley, "f3", "Ackley", false, false},
    {FunctionId::griewank, "f4", "Griewank", false, false},
    {FunctionId::rastrigin, "f5", "Rastrigin", false, true},
    {FunctionId::michalewicz, "f6", "Michalewicz", false, true},
    {FunctionId::schwefel, "f7", "Schwefel", false, true},
    {FunctionId::schwefel_1_2, "f8", "Schwefel 1.2", true, false},
    {FunctionId::schwefel_2_21, "f9", "Schwefel 2.21", true, false},
    {FunctionId::schwefel_2_22, "f10", "Schwefel 2.22", true, true},
    {FunctionId::alpine, "f11", "Alpine", false, true},
    {FunctionId::axis_parallel, "f12", "Axis Parallel", true, false},
    {FunctionId::moved_axis_parallel, "f13", "Moved Axis Parallel", true, false},
    {FunctionId::power_sum, "f14", "Power Sum", true, false},
    {FunctionId::zakharov, "f15", "Zakharov", true, false},
}};

// Fixed-point constants, each rounded once.
const W kTwoPi = W::from_real(2 * std::numbers::pi);
const W kInvPi = W::from_real(std::numbers::inv_pi);
const W kE = W::from_real(std::numbers::e);
const W kSchwefelShift = W::from_real(418.9829);
const W kTenth = W::from_real(0.1);
const W kAckleyDecay = W::from_real(-0.2);

W sq(W v) { return v * v; }

W sphere(std::span<const Fx> x)
{
    W acc;
    for (const Fx v : x)
        acc += sq(v);
    return acc;
}

W rosenbrock(std::span<const Fx> x)
{
    W acc;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const W xi = x[i];
        acc += mul_int(sq(W(x[i + 1]) - sq(xi)), 100) + sq(W(Fx::one()) - xi);
    }
    return acc;
}

W ackley(std::span<const Fx> x)
{
    const auto n = static_cast<std::int64_t>(x.size());
    W sum_sq;
    W sum_cos;
    for (const Fx v : x) {
        sum_sq += sq(v);
        sum_cos += cos(kTwoPi * v);
    }
    const W a = exp(kAckleyDecay * sqrt(div_int(sum_sq, n)));
    const W b = exp(div_int(sum_cos, n));
    return W::from_int(20) - mul_int(a, 20) - b + kE;
}

W griewank(std::span<const Fx> x)
{
    W sum;
    W prod = W(Fx::one());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += div_int(sq(x[i]), 4000);
        prod *= cos(W(x[i]) / sqrt(W::from_int(static_cast<std::int64_t>(i) + 1)));
    }
    return sum - prod + W(Fx::one());
}

W rastrigin(std::span<const Fx> x)
{
    W acc = W::from_int(10 * static_cast<std::int64_t>(x.size()));
    for (const Fx v : x)
        acc += sq(v) - mul_int(cos(kTwoPi * v), 10);
    return acc;
}

W michalewicz(std::span<const Fx> x)
{
    W acc;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const W arg = mul_int(sq(x[i]), static_cast<std::int64_t>(i) + 1) * kInvPi;
        acc -= sin(W(x[i])) * pow(sin(arg), 20);
    }
    return acc;
}

W schwefel(std::span<const Fx> x)
{
    W acc = mul_int(kSchwefelShift, static_cast<std::int64_t>(x.size()));
    for (const Fx v : x)
        acc -= W(v) * sin(sqrt(W(abs(v))));
    return acc;
}

W schwefel_1_2(std::span<const Fx> x)
{
    W acc;
    W prefix;
    for (const Fx v : x) {
        prefix += v;
        acc += sq(prefix);
    }
    return acc;
}

W schwefel_2_21(std::span<const Fx> x) { return *std::max_element(x.begin(), x.end()); }

W schwefel_2_22(std::span<const Fx> x)
{
    W sum;
    W prod = W(Fx::one());
    for (const Fx v : x) {
        const W a = abs(W(v));
        sum += a;
        prod *= a;
    }
    return sum + prod;
}

W alpine(std::span<const Fx> x)
{
    W acc;
    for (const Fx v : x)
        acc += abs(W(v) * sin(W(v)) + kTenth * v);
    return acc;
}

W axis_parallel(std::span<const Fx> x, std::int64_t weight)
{
    W acc;
    for (std::size_t i = 0; i < x.size(); ++i)
        acc += mul_int(sq(x[i]), weight * (static_cast<std::int64_t>(i) + 1));
    return acc;
}

W power_sum(std::span<const Fx> x)
{
    W acc;
    for (std::size_t i = 0; i < x.size(); ++i)
        acc += pow(abs(W(x[i])), static_cast<int>(i) + 2);
    return acc;
}

W zakharov(std::span<const Fx> x)
{
    W sum_sq;
    W weighted;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum_sq += sq(x[i]);
        weighted += div_int(mul_int(W(x[i]), static_cast<std::int64_t>(i) + 1), 2);
    }
    const W w2 = sq(weighted);
    return sum_sq + w2 + sq(w2);
}

void check_dimension(int n)
{
    if (n < 1 || n > Problem::kMaxDimension)
        throw std::invalid_argument("problem dimension must be in [1, " + std::to_string(Problem::kMaxDimension)
                                    + "], got " + std::to_string(n));
}

} // namespace

std::span<const FunctionInfo> function_registry() noexcept { return kRegistry; }

const FunctionInfo& function_info(FunctionId id)
{
    const auto idx = static_cast<int>(id) - 1;
    if (idx < 0 || idx >= static_cast<int>(kRegistry.size()))
        throw std::invalid_argument("unknown function id");
    return kRegistry[static_cast<std::size_t>(idx)];
}

std::optional<FunctionId> parse_function_id(std::string_view key) noexcept
{
    for (const auto& f : kRegistry)
        if (f.key == key)
            return f.id;
    return std::nullopt;
}

Problem::Problem(FunctionId id, int dimension) : Problem(id, dimension, Fx::from_int(-2), Fx::from_int(2)) {}

Problem::Problem(FunctionId id, int dimension, Fx lower, Fx upper)
    : Problem(id, std::vector<Fx>(static_cast<std::size_t>(std::max(dimension, 0)), lower),
              std::vector<Fx>(static_cast<std::size_t>(std::max(dimension, 0)), upper))
{
    check_dimension(dimension);
}

Problem::Problem(FunctionId id, std::vector<Fx> lower, std::vector<Fx> upper)
    : id_(id), lower_(std::move(lower)), upper_(std::move(upper))
{
    function_info(id);
    check_dimension(static_cast<int>(lower_.size()));
    if (lower_.size() != upper_.size())
        throw std::invalid_argument("lower and upper bounds differ in length");
    for (std::size_t i = 0; i < lower_.size(); ++i)
        if (!(lower_[i] <= upper_[i]))
            throw std::invalid_argument("lower bound exceeds upper bound at coordinate " + std::to_string(i));
}

Fx Problem::evaluate(std::span<const Fx> x) const
{
    if (static_cast<int>(x.size()) != dimension())
        throw std::invalid_argument("evaluate: expected " + std::to_string(dimension()) + " coordinates, got "
                                    + std::to_string(x.size()));
    switch (id_) {
    case FunctionId::sphere: return sphere(x).narrow();
    case FunctionId::rosenbrock: return rosenbrock(x).narrow();
    case FunctionId::ackley: return ackley(x).narrow();
    case FunctionId::griewank: return griewank(x).narrow();
    case FunctionId::rastrigin: return rastrigin(x).narrow();
    case FunctionId::michalewicz: return michalewicz(x).narrow();
    case FunctionId::schwefel: return schwefel(x).narrow();
    case FunctionId::schwefel_1_2: return schwefel_1_2(x).narrow();
    case FunctionId::schwefel_2_21: return schwefel_2_21(x).narrow();
    case FunctionId::schwefel_2_22: return schwefel_2_22(x).narrow();
    case FunctionId::alpine: return alpine(x).narrow();
    case FunctionId::axis_parallel: return axis_parallel(x, 1).narrow();
    case FunctionId::moved_axis_parallel: return axis_parallel(x, 5).narrow();
    case FunctionId::power_sum: return power_sum(x).narrow();
    case FunctionId::zakharov: return zakharov(x).narrow();
    }
    throw std::invalid_argument("unknown function id");
}

Fx Problem::evaluate_or_max(std::span<const Fx> x) const
{
    try {
        return evaluate(x);
    } catch (const OverflowError&) {
        return Fx::max();
    }
}

bool Problem::contains(std::span<const Fx> x) const noexcept
{
    if (static_cast<int>(x.size()) != dimension())
        return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < lower_[i] || x[i] > upper_[i])
            return false;
    return true;
}

Fx wrap_coordinate(std::int64_t raw, Fx lo, Fx hi) noexcept
{
    const std::int64_t width = std::int64_t{hi.raw()} - lo.raw();
    if (width <= 0)
        return lo;
    if (raw >= lo.raw() && raw < hi.raw())
        return Fx::from_raw(static_cast<std::int32_t>(raw));
    std::int64_t offset = (raw - lo.raw()) % width;
    if (offset < 0)
        offset += width;
    return Fx::from_raw(static_cast<std::int32_t>(lo.raw() + offset));
}

std::vector<Fx> toroidal_wrap(std::span<const Fx> x, const Problem& p)
{
    std::vector<Fx> out(x.begin(), x.end());
    toroidal_wrap_in_place(out, p);
    return out;
}

void toroidal_wrap_in_place(std::span<Fx> x, const Problem& p) noexcept
{
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = wrap_coordinate(x[i], p.lower(static_cast<int>(i)), p.upper(static_cast<int>(i)));
}

void randomize(std::span<Fx> x, Rng& rng, const Problem& p)
{
    for (std::size_t i = 0; i < x.size(); ++i)
        x[i] = rng.uniform(p.lower(static_cast<int>(i)), p.upper(static_cast<int>(i)));
}

Solution random_solution(Rng& rng, const Problem& p)
{
    Solution s;
    s.x.resize(static_cast<std::size_t>(p.dimension()));
    randomize(s.x, rng, p);
    return s;
}

} // namespace dowsn
