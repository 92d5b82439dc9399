#include "dowsn/bench.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

using namespace dowsn;

namespace {

constexpr double kUlp = 1.0 / 65536.0;

// Straight double-precision transcription of the test-problem table.
double reference(FunctionId id, const std::vector<double>& x)
{
    const auto n = static_cast<int>(x.size());
    const double pi = std::numbers::pi;
    double acc = 0;
    switch (id) {
    case FunctionId::sphere:
        for (double v : x) acc += v * v;
        return acc;
    case FunctionId::rosenbrock:
        for (int i = 0; i + 1 < n; ++i)
            acc += 100 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1 - x[i], 2);
        return acc;
    case FunctionId::ackley: {
        double s2 = 0, sc = 0;
        for (double v : x) {
            s2 += v * v;
            sc += std::cos(2 * pi * v);
        }
        return -20 * std::exp(-0.2 * std::sqrt(s2 / n)) - std::exp(sc / n) + 20 + std::numbers::e;
    }
    case FunctionId::griewank: {
        double p = 1;
        for (int i = 0; i < n; ++i) {
            acc += x[i] * x[i] / 4000;
            p *= std::cos(x[i] / std::sqrt(i + 1.0));
        }
        return acc - p + 1;
    }
    case FunctionId::rastrigin:
        acc = 10.0 * n;
        for (double v : x) acc += v * v - 10 * std::cos(2 * pi * v);
        return acc;
    case FunctionId::michalewicz:
        for (int i = 0; i < n; ++i)
            acc -= std::sin(x[i]) * std::pow(std::sin((i + 1) * x[i] * x[i] / pi), 20);
        return acc;
    case FunctionId::schwefel:
        acc = 418.9829 * n;
        for (double v : x) acc -= v * std::sin(std::sqrt(std::abs(v)));
        return acc;
    case FunctionId::schwefel_1_2: {
        double pre = 0;
        for (double v : x) {
            pre += v;
            acc += pre * pre;
        }
        return acc;
    }
    case FunctionId::schwefel_2_21: return *std::max_element(x.begin(), x.end());
    case FunctionId::schwefel_2_22: {
        double p = 1;
        for (double v : x) {
            acc += std::abs(v);
            p *= std::abs(v);
        }
        return acc + p;
    }
    case FunctionId::alpine:
        for (double v : x) acc += std::abs(v * std::sin(v) + 0.1 * v);
        return acc;
    case FunctionId::axis_parallel:
        for (int i = 0; i < n; ++i) acc += (i + 1) * x[i] * x[i];
        return acc;
    case FunctionId::moved_axis_parallel:
        for (int i = 0; i < n; ++i) acc += 5 * (i + 1) * x[i] * x[i];
        return acc;
    case FunctionId::power_sum:
        for (int i = 0; i < n; ++i) acc += std::pow(std::abs(x[i]), i + 2);
        return acc;
    case FunctionId::zakharov: {
        double w = 0;
        for (int i = 0; i < n; ++i) {
            acc += x[i] * x[i];
            w += 0.5 * (i + 1) * x[i];
        }
        return acc + w * w + std::pow(w, 4);
    }
    }
    return NAN;
}

std::vector<double> to_double(const std::vector<Fx>& x)
{
    std::vector<double> out;
    for (Fx v : x) out.push_back(v.to_real());
    return out;
}

constexpr double kFxLimit = 32767.99;

} // namespace

TEST_CASE("registry lists every function once with its flags")
{
    const auto reg = function_registry();
    REQUIRE(reg.size() == 15);
    std::set<int> ids;
    for (const auto& f : reg) ids.insert(static_cast<int>(f.id));
    CHECK(ids.size() == 15);
    CHECK(function_info(FunctionId::sphere).separable);
    CHECK_FALSE(function_info(FunctionId::ackley).separable);
    CHECK(function_info(FunctionId::schwefel_2_21).unimodal);
    CHECK_FALSE(function_info(FunctionId::michalewicz).unimodal);
    CHECK(parse_function_id("f13") == FunctionId::moved_axis_parallel);
    CHECK_FALSE(parse_function_id("f16").has_value());
}

TEST_CASE("problem construction rejects bad shapes")
{
    CHECK_THROWS_AS(Problem(FunctionId::sphere, 0), std::invalid_argument);
    CHECK_THROWS_AS(Problem(FunctionId::sphere, 32), std::invalid_argument);
    CHECK_THROWS_AS(Problem(FunctionId::sphere, 3, Fx::one(), Fx::zero()), std::invalid_argument);
    CHECK_NOTHROW(Problem(FunctionId::sphere, 31));
    const Problem p(FunctionId::sphere, 3);
    const std::vector<Fx> short_x(2);
    CHECK_THROWS_AS(p.evaluate(short_x), std::invalid_argument);
}

TEST_CASE("evaluate examples")
{
    for (int n : {1, 5, 15, 25}) {
        const std::vector<Fx> zero(static_cast<std::size_t>(n));
        const std::vector<Fx> ones(static_cast<std::size_t>(n), Fx::one());
        CHECK(Problem(FunctionId::sphere, n).evaluate(zero) == Fx::zero());
        CHECK(Problem(FunctionId::rosenbrock, n).evaluate(ones) == Fx::zero());
        CHECK(std::abs(Problem(FunctionId::ackley, n).evaluate(zero).to_real()) <= 2 * kUlp);
    }
}

TEST_CASE("known optima")
{
    const FunctionId at_origin[] = {FunctionId::sphere,        FunctionId::ackley,          FunctionId::griewank,
                                    FunctionId::rastrigin,     FunctionId::schwefel_2_22,   FunctionId::alpine,
                                    FunctionId::axis_parallel, FunctionId::moved_axis_parallel, FunctionId::power_sum,
                                    FunctionId::zakharov,      FunctionId::schwefel_1_2};
    for (int n : {2, 5, 15, 25}) {
        const std::vector<Fx> zero(static_cast<std::size_t>(n));
        for (FunctionId id : at_origin) {
            CAPTURE(static_cast<int>(id));
            CHECK(std::abs(Problem(id, n).evaluate(zero).to_real()) <= 2 * kUlp);
        }
        const std::vector<Fx> low(static_cast<std::size_t>(n), Fx::from_int(-2));
        CHECK(Problem(FunctionId::schwefel_2_21, n).evaluate(low) == Fx::from_int(-2));
    }
}

TEST_CASE("schwefel best value on [-2,2]^5")
{
    // 1-D oracle: the function is separable and identical per coordinate, so
    // the 5-D minimum is 5 times the 1-D minimum. Dense grid then golden
    // section refinement in double.
    auto g = [](double v) { return 418.9829 - v * std::sin(std::sqrt(std::abs(v))); };
    double best_x = -2;
    for (int i = 0; i <= 400000; ++i) {
        const double v = -2 + 4.0 * i / 400000;
        if (g(v) < g(best_x)) best_x = v;
    }
    double a = std::max(-2.0, best_x - 1e-5), b = std::min(2.0, best_x + 1e-5);
    for (int it = 0; it < 200; ++it) {
        const double m1 = a + (b - a) * 0.382, m2 = a + (b - a) * 0.618;
        (g(m1) < g(m2) ? b : a) = (g(m1) < g(m2) ? m2 : m1);
    }
    const double oracle = 5 * g((a + b) / 2);
    CHECK(oracle == doctest::Approx(2085.0).epsilon(5e-4));

    // The Fx minimum over the representable grid near the optimum.
    const Problem p(FunctionId::schwefel, 5);
    double fx_best = 1e9;
    for (std::int32_t raw = Fx::from_int(2).raw() - 4000; raw <= Fx::from_int(2).raw(); ++raw) {
        const std::vector<Fx> x(5, Fx::from_raw(raw));
        fx_best = std::min(fx_best, p.evaluate(x).to_real());
    }
    CHECK(std::abs(fx_best - oracle) <= 10 * 5 * kUlp);
}

TEST_CASE("oracle equivalence on random in-bounds points")
{
    Rng rng(0xBE7C);
    for (const auto& info : function_registry()) {
        for (int n : {1, 2, 5, 15, 25, 31}) {
            const Problem p(info.id, n);
            const double tol = 10.0 * n * kUlp;
            int compared = 0;
            for (int k = 0; k < 1000; ++k) {
                const Solution s = random_solution(rng, p);
                const double ref = reference(info.id, to_double(s.x));
                if (std::abs(ref) > kFxLimit - 1) {
                    // Out of range: must overflow, never wrap silently.
                    if (std::abs(ref) > 32768.5) {
                        CHECK_THROWS_AS(p.evaluate(s.x), OverflowError);
                        CHECK(p.evaluate_or_max(s.x) == Fx::max());
                    }
                    continue;
                }
                const double got = p.evaluate(s.x).to_real();
                if (std::abs(got - ref) > tol) {
                    CAPTURE(info.key);
                    CAPTURE(n);
                    CAPTURE(ref);
                    CHECK(got == doctest::Approx(ref).epsilon(0).scale(0));
                }
                ++compared;
            }
            if (info.id != FunctionId::power_sum && info.id != FunctionId::zakharov) {
                CAPTURE(info.key);
                CHECK(compared > 0);
            }
        }
    }
}

TEST_CASE("toroidal wrap")
{
    const Fx lo = Fx::from_int(-2), hi = Fx::from_int(2);
    CHECK(wrap_coordinate(Fx::from_real(2.5), lo, hi) == Fx::from_real(-1.5));
    CHECK(wrap_coordinate(Fx::one(), lo, hi) == Fx::one());
    CHECK(wrap_coordinate(Fx::from_int(7), lo, hi) == Fx::from_int(-1));
    CHECK(wrap_coordinate(hi, lo, hi) == lo);
    CHECK(wrap_coordinate(Fx::from_real(-2.25), lo, hi) == Fx::from_real(1.75));
    CHECK(wrap_coordinate(std::int64_t{1} << 40, lo, hi) >= lo);

    const Problem p(FunctionId::sphere, 8);
    Rng rng(7);
    for (int k = 0; k < 20000; ++k) {
        std::vector<Fx> x(8);
        for (auto& v : x) v = Fx::from_raw(static_cast<std::int32_t>(rng.next_u64()));
        const auto once = toroidal_wrap(x, p);
        for (Fx v : once) {
            CHECK(v >= lo);
            CHECK(v < hi);
        }
        CHECK(toroidal_wrap(once, p) == once);
        // Congruence modulo the width.
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK((std::int64_t{x[i].raw()} - once[i].raw()) % (4 * 65536) == 0);
    }
}

TEST_CASE("separable functions improve coordinate-wise")
{
    Rng rng(99);
    for (const auto& info : function_registry()) {
        if (!info.separable) continue;
        const Problem p(info.id, 6);
        for (int trial = 0; trial < 30; ++trial) {
            Solution s = random_solution(rng, p);
            Fx f = p.evaluate(s.x);
            for (int i = 0; i < 6; ++i) {
                // Best value of coordinate i on a coarse grid, others fixed.
                Fx best_v = s.x[static_cast<std::size_t>(i)];
                Fx best_f = f;
                for (int g = 0; g <= 64; ++g) {
                    auto y = s.x;
                    y[static_cast<std::size_t>(i)] = wrap_coordinate(Fx::from_real(-2 + g / 16.0), p.lower(i), p.upper(i));
                    const Fx fy = p.evaluate(y);
                    if (fy < best_f) {
                        best_f = fy;
                        best_v = y[static_cast<std::size_t>(i)];
                    }
                }
                s.x[static_cast<std::size_t>(i)] = best_v;
                CAPTURE(info.key);
                CHECK(best_f <= f);
                f = best_f;
            }
            // Decomposition: changing one coordinate changes f by that
            // coordinate's term alone.
            auto a = s.x, b = s.x;
            a[0] = Fx::from_real(0.5);
            b[0] = Fx::from_real(-1.25);
            auto a2 = a, b2 = b;
            a2[3] = b2[3] = Fx::from_real(1.5);
            const double d1 = p.evaluate(a).to_real() - p.evaluate(b).to_real();
            const double d2 = p.evaluate(a2).to_real() - p.evaluate(b2).to_real();
            CHECK(std::abs(d1 - d2) <= 60 * kUlp);
        }
    }
}

TEST_CASE("random solutions")
{
    Rng rng(1234);
    const Problem p(FunctionId::sphere, 4);
    std::vector<double> sums(4, 0.0);
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) {
        const Solution s = random_solution(rng, p);
        CHECK_FALSE(s.fitness.has_value());
        for (std::size_t i = 0; i < 4; ++i) {
            REQUIRE(s.x[i] >= Fx::from_int(-2));
            REQUIRE(s.x[i] <= Fx::from_int(2));
            sums[i] += s.x[i].to_real();
        }
    }
    for (double s : sums) CHECK(std::abs(s / draws) <= 0.05);

    const Problem flat(FunctionId::sphere, 3, Fx::one(), Fx::one());
    const Solution s = random_solution(rng, flat);
    for (Fx v : s.x) CHECK(v == Fx::one());
}
