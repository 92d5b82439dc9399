#include "dowsn/algos.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

using namespace dowsn;

namespace {

constexpr double kUlp = 1.0 / 65536.0;

double ispo_oracle(const IspoParams& pr, int t, double L, double r)
{
    return pr.A.to_real() / std::pow(double(t), pr.P) * r + pr.B.to_real() * L;
}

double delta_oracle(std::int64_t k, double y, std::int64_t N, int b, double rho)
{
    return y * (1 - std::pow(rho, std::pow(1 - double(k) / double(N), b)));
}

OptimizerState evaluated_state(AlgorithmId id, const AlgoParams& params, const Problem& p, Rng& rng,
                               Evaluator& eval)
{
    auto s = init_state(id, params, p, rng, 1000);
    CHECK(step(s, params, eval, rng) == 1);
    return s;
}

} // namespace

TEST_CASE("algorithm ids and slots")
{
    CHECK(parse_algorithm_id("3some") == AlgorithmId::tsome);
    CHECK(parse_algorithm_id("nusa") == AlgorithmId::nusa);
    CHECK_FALSE(parse_algorithm_id("de").has_value());
    CHECK(to_string(AlgorithmId::ispo) == "ispo");

    const Problem p(FunctionId::sphere, 5);
    Rng rng(1);
    const AlgoParams params;
    CHECK(slot_count(init_state(AlgorithmId::rs, params, p, rng, 1000)) == 2);
    CHECK(slot_count(init_state(AlgorithmId::ispo, params, p, rng, 1000)) == 2);
    CHECK(slot_count(init_state(AlgorithmId::nusa, params, p, rng, 1000)) == 2);
    CHECK(slot_count(init_state(AlgorithmId::tsome, params, p, rng, 1000)) == 3);
    CHECK(algorithm_of(init_state(AlgorithmId::nusa, params, p, rng, 1000)) == AlgorithmId::nusa);
}

TEST_CASE("parameter validation")
{
    AlgoParams params;
    CHECK_NOTHROW(validate(params));
    params.ispo.H = 0;
    CHECK_THROWS_AS(validate(params), std::invalid_argument);
    params = {};
    params.nusa.alpha = Fx::one();
    CHECK_THROWS_AS(validate(params), std::invalid_argument);
    params = {};
    params.tsome.delta = Fx::zero();
    CHECK_THROWS_AS(validate(params), std::invalid_argument);
}

TEST_CASE("ispo velocity")
{
    const IspoParams pr;
    CHECK(ispo_velocity(pr, 1, Fx::zero(), Fx::from_real(0.5)) == Fx::from_real(0.5));
    CHECK(ispo_velocity(pr, 2, Fx::zero(), Fx::from_real(0.5)) == Fx::from_raw(32));
    CHECK(std::abs(ispo_velocity(pr, 2, Fx::zero(), Fx::from_real(0.5)).to_real() - 0.000488) < 1e-5);

    Rng rng(11);
    for (int k = 0; k < 20000; ++k) {
        const int t = 1 + static_cast<int>(rng.below(30));
        const Fx L = rng.uniform(Fx::from_int(-4), Fx::from_int(4));
        const Fx r = rng.uniform(Fx::from_real(-0.5), Fx::from_real(0.5));
        const double got = ispo_velocity(pr, t, L, r).to_real();
        CHECK(std::abs(got - ispo_oracle(pr, t, L.to_real(), r.to_real())) <= 2 * kUlp);
    }
    IspoParams alt;
    alt.A = Fx::from_real(3.5);
    alt.P = 2;
    alt.B = Fx::from_real(0.75);
    for (int k = 0; k < 5000; ++k) {
        const int t = 1 + static_cast<int>(rng.below(30));
        const Fx L = rng.uniform(Fx::from_int(-4), Fx::from_int(4));
        const Fx r = rng.uniform(Fx::from_real(-0.5), Fx::from_real(0.5));
        CHECK(std::abs(ispo_velocity(alt, t, L, r).to_real() - ispo_oracle(alt, t, L.to_real(), r.to_real()))
              <= 2 * kUlp);
    }
}

TEST_CASE("ispo learning factor")
{
    const IspoParams pr;
    CHECK(ispo_learn(pr, Fx::from_real(0.3), Fx::from_real(-0.7), true) == Fx::from_real(-0.7));
    CHECK(ispo_learn(pr, Fx::one(), Fx::from_real(-0.7), false) == Fx::from_real(0.25));

    // Repeated failures shrink by S_f until the value drops below epsilon.
    Fx L = Fx::from_real(1.5);
    double expected = 1.5;
    int m = 0;
    while (L != Fx::zero()) {
        L = ispo_learn(pr, L, Fx::zero(), false);
        expected /= 4;
        ++m;
        if (L != Fx::zero())
            CHECK(std::abs(L.to_real() - expected) <= kUlp);
    }
    CHECK(m <= 10);
    CHECK(expected < 2 * kUlp);

    IspoParams coarse;
    coarse.epsilon = Fx::from_real(0.01);
    CHECK(ispo_learn(coarse, Fx::from_real(0.03), Fx::zero(), false) == Fx::zero());
}

TEST_CASE("ispo step on a scripted stub")
{
    // Initial point scores 0, the first perturbation succeeds, every later one fails.
    const Problem p(FunctionId::sphere, 3);
    int calls = 0;
    Evaluator eval(p, [&](std::span<const Fx>) {
        ++calls;
        if (calls == 1)
            return Fx::zero();
        if (calls == 2)
            return Fx::from_int(-1);
        return Fx::from_int(5);
    });
    AlgoParams params;
    Rng rng(5);
    auto s = init_state(AlgorithmId::ispo, params, p, rng, 1000);
    CHECK(step(s, params, eval, rng) == 1);

    eval.set_allowance(1);
    CHECK(step(s, params, eval, rng) == 1);
    auto& st = std::get<IspoState>(s);
    const Fx v = st.L;
    CHECK(st.t == 2);
    CHECK(*st.particle.fitness == Fx::from_int(-1));

    double expected = v.to_real();
    for (int m = 1; m <= 12; ++m) {
        eval.set_allowance(1);
        CHECK(step(s, params, eval, rng) == 1);
        expected /= 4;
        if (std::abs(expected) >= kUlp)
            CHECK(std::abs(st.L.to_real() - expected) <= kUlp);
        CHECK(*st.particle.fitness == Fx::from_int(-1));
    }
    CHECK(st.L == Fx::zero());

    // Finishing the variable moves on to the next one with a cleared factor.
    eval.set_allowance(1000);
    CHECK(step(s, params, eval, rng) == params.ispo.H - 13);
    CHECK(st.var_index == 1);
    CHECK(st.t == 1);
    CHECK(eval.count() == 1 + params.ispo.H);
}

TEST_CASE("nusa delta")
{
    CHECK(nusa_delta(100, Fx::from_int(3), 100, 5, Fx::from_real(0.3)) == Fx::zero());
    CHECK(nusa_delta(10, Fx::zero(), 100, 5, Fx::from_real(0.3)) == Fx::zero());
    CHECK(nusa_delta(0, Fx::from_int(2), 100, 5, Fx::from_real(0.25)) == Fx::from_real(1.5));

    Rng rng(2024);
    for (int j = 0; j < 10000; ++j) {
        const auto N = static_cast<std::int64_t>(1 + rng.below(1000));
        const auto k = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(N) + 1));
        const Fx y = rng.uniform(Fx::zero(), Fx::from_int(4));
        const Fx rho = rng.open_unit();
        const Fx d = nusa_delta(k, y, N, 5, rho);
        CHECK(d >= Fx::zero());
        CHECK(d <= y);
        CHECK(std::abs(d.to_real() - delta_oracle(k, y.to_real(), N, 5, rho.to_real())) <= 4 * kUlp);
        CHECK(nusa_delta(N, y, N, 5, rho) == Fx::zero());
    }

    // For a fixed draw the step length never grows with k.
    for (int j = 0; j < 200; ++j) {
        const Fx rho = rng.open_unit();
        Fx prev = Fx::max();
        for (std::int64_t k = 0; k <= 50; ++k) {
            const Fx d = nusa_delta(k, Fx::from_int(4), 50, 5, rho);
            CHECK(d <= prev);
            prev = d;
        }
    }

    // k = 0 gives y(1 - rho): uniform over [0, y].
    std::array<int, 10> bins{};
    double sum = 0;
    for (int j = 0; j < 10000; ++j) {
        const double d = nusa_delta(0, Fx::from_int(2), 333, 5, rng).to_real() / 2;
        sum += d;
        ++bins[static_cast<std::size_t>(std::min(9, static_cast<int>(d * 10)))];
    }
    CHECK(std::abs(sum / 10000 - 0.5) < 0.01);
    for (int c : bins)
        CHECK(std::abs(c - 1000) < 130);
}

TEST_CASE("nusa perturbation")
{
    const Problem p(FunctionId::sphere, 4);
    Rng rng(77);
    std::vector<Fx> out(4);
    for (int j = 0; j < 25000; ++j) {
        const Solution s = random_solution(rng, p);
        const auto k = static_cast<std::int64_t>(rng.below(334));
        nusa_perturb(s.x, out, k, 333, 5, p, rng);
        REQUIRE(p.contains(out));
    }
    // Coordinates sitting on the bounds.
    const std::vector<Fx> top(4, Fx::from_int(2)), bottom(4, Fx::from_int(-2));
    for (int j = 0; j < 1000; ++j) {
        nusa_perturb(top, out, 0, 333, 5, p, rng);
        REQUIRE(p.contains(out));
        nusa_perturb(bottom, out, 0, 333, 5, p, rng);
        REQUIRE(p.contains(out));
    }

    const Solution s = random_solution(rng, p);
    nusa_perturb(s.x, out, 333, 333, 5, p, rng);
    CHECK(out == s.x);

    double prev = 1e9;
    for (std::int64_t k : {0, 50, 100, 150, 200, 250, 300, 330}) {
        double total = 0;
        for (int j = 0; j < 2000; ++j) {
            nusa_perturb(s.x, out, k, 333, 5, p, rng);
            for (std::size_t i = 0; i < 4; ++i)
                total += std::abs(out[i].to_real() - s.x[i].to_real());
        }
        CHECK(total < prev);
        prev = total;
    }
}

TEST_CASE("nusa acceptance probability")
{
    const NusaParams pr;
    CHECK(nusa_accept_probability(FxWide{}, 5, pr) == Fx::one());
    CHECK(nusa_accept_probability(FxWide::from_int(1000), 5, pr) == Fx::zero());
    Rng rng(3);
    for (int j = 0; j < 2000; ++j) {
        const Fx df = rng.uniform(Fx::epsilon(), Fx::from_int(3));
        const auto k = static_cast<int>(rng.below(400));
        const double oracle = std::exp(-df.to_real() / std::pow(pr.alpha.to_real(), k));
        CHECK(std::abs(nusa_accept_probability(df, k, pr).to_real() - oracle) <= 4 * kUlp);
    }
}

TEST_CASE("step evaluation counts")
{
    const Problem p(FunctionId::rastrigin, 5);
    AlgoParams params;
    Rng rng(8);
    Evaluator eval(p);

    auto rs = evaluated_state(AlgorithmId::rs, params, p, rng, eval);
    CHECK(step(rs, params, eval, rng) == 1);

    auto nu = evaluated_state(AlgorithmId::nusa, params, p, rng, eval);
    CHECK(step(nu, params, eval, rng) == 3);
    CHECK(std::get<NusaState>(nu).k == 1);
    CHECK(std::get<NusaState>(nu).N == 333);

    auto is = evaluated_state(AlgorithmId::ispo, params, p, rng, eval);
    CHECK(step(is, params, eval, rng) == 30);

    auto ts = evaluated_state(AlgorithmId::tsome, params, p, rng, eval);
    auto& st = std::get<TsomeState>(ts);
    st.stage = TsomeStage::middle_distance;
    CHECK(tsome_middle_step(st, params.tsome, eval, rng) == 4);
    CHECK_THROWS_AS(tsome_long_step(st, params.tsome, eval, rng), std::logic_error);

    // The allowance truncates an iteration.
    eval.set_allowance(2);
    CHECK(step(nu, params, eval, rng) == 2);
    CHECK(step(nu, params, eval, rng) == 0);
}

TEST_CASE("random search replaces only on strict improvement")
{
    const Problem p(FunctionId::sphere, 3);
    int calls = 0;
    const std::array<int, 4> script{5, 5, 3, 4};
    Evaluator eval(p, [&](std::span<const Fx>) { return Fx::from_int(script[static_cast<std::size_t>(calls++)]); });
    AlgoParams params;
    Rng rng(4);
    auto s = init_state(AlgorithmId::rs, params, p, rng, 100);
    step(s, params, eval, rng);
    const auto first = std::get<RsState>(s).current;
    step(s, params, eval, rng);
    CHECK(std::get<RsState>(s).current == first);
    step(s, params, eval, rng);
    CHECK(*std::get<RsState>(s).current.fitness == Fx::from_int(3));
    step(s, params, eval, rng);
    CHECK(*std::get<RsState>(s).current.fitness == Fx::from_int(3));
}

TEST_CASE("3some short distance descends one probe per dimension")
{
    const int n = 6;
    const Problem p(FunctionId::sphere, n);
    AlgoParams params;
    Rng rng(9);
    Evaluator eval(p);
    TsomeState s;
    s.elite.x.assign(n, Fx::from_real(1.5));
    s.elite.fitness = p.evaluate(s.elite.x);
    s.stage = TsomeStage::short_distance;
    s.radius = FxWide(params.tsome.rho);
    // x - 0.4 * 4 = -0.1 improves on every coordinate.
    CHECK(tsome_short_step(s, params.tsome, eval, rng) == n);
    for (Fx v : s.elite.x)
        CHECK(v == Fx::from_real(1.5) - mul_int(params.tsome.rho, 4));

    // From the optimum nothing improves: two probes per dimension, then the radius halves.
    s.elite.x.assign(n, Fx::zero());
    s.elite.fitness = Fx::zero();
    s.short_used = 0;
    CHECK(tsome_short_step(s, params.tsome, eval, rng) == 2 * n);
    CHECK(s.radius == div_int(FxWide(params.tsome.rho), 2));

    // The run ends after its evaluation budget, back to long distance.
    while (s.stage == TsomeStage::short_distance)
        tsome_short_step(s, params.tsome, eval, rng);
    CHECK(s.short_used == params.tsome.short_budget);
    CHECK(s.stage == TsomeStage::long_distance);
}

TEST_CASE("3some long distance crossover")
{
    CHECK(std::abs(tsome_crossover_rate(5, Fx::from_real(0.05)).to_real() - 0.0625) <= kUlp);
    CHECK(std::abs(tsome_crossover_rate(15, Fx::from_real(0.05)).to_real() - std::pow(0.5, 1 / 0.75)) <= 2 * kUlp);

    // With a vanishing inheritance fraction exactly one coordinate is inherited.
    const int n = 10;
    const Problem p(FunctionId::sphere, n);
    TsomeParams pr;
    pr.alpha_e = Fx::epsilon();
    Rng rng(21);
    int inherited = 0;
    const int trials = 2000;
    for (int j = 0; j < trials; ++j) {
        Evaluator eval(p, [](std::span<const Fx>) { return Fx::from_int(1); });
        TsomeState s;
        s.elite.x.assign(n, Fx::from_real(0.123456));
        s.elite.fitness = Fx::zero();
        CHECK(tsome_long_step(s, pr, eval, rng) == 1);
        for (Fx v : s.trial.x)
            inherited += v == s.elite.x[0];
        CHECK(s.stage == TsomeStage::long_distance);
    }
    CHECK(inherited >= trials);
    CHECK(inherited < trials + 20);

    // Default fraction at n = 5: expected run length 1 / (1 - 0.0625) (capped at n).
    pr = {};
    const Problem p5(FunctionId::sphere, 5);
    inherited = 0;
    for (int j = 0; j < 20000; ++j) {
        Evaluator eval(p5, [](std::span<const Fx>) { return Fx::from_int(1); });
        TsomeState s;
        s.elite.x.assign(5, Fx::from_real(0.123456));
        s.elite.fitness = Fx::zero();
        tsome_long_step(s, pr, eval, rng);
        for (Fx v : s.trial.x)
            inherited += v == s.elite.x[0];
    }
    CHECK(std::abs(inherited / 20000.0 - 1 / (1 - 0.0625)) < 0.02);
}

TEST_CASE("3some stage transitions")
{
    const Problem p(FunctionId::sphere, 4);
    AlgoParams params;
    Rng rng(13);
    Evaluator eval(p);
    auto state = init_state(AlgorithmId::tsome, params, p, rng, 100000);
    auto& s = std::get<TsomeState>(state);
    bool saw_middle = false, saw_short = false, saw_long_again = false;
    TsomeStage prev = s.stage;
    for (int j = 0; j < 3000; ++j) {
        step(state, params, eval, rng);
        if (prev == TsomeStage::long_distance && s.stage == TsomeStage::middle_distance)
            saw_middle = true;
        if (prev == TsomeStage::middle_distance && s.stage == TsomeStage::short_distance) {
            saw_short = true;
            CHECK(s.saved_elite == s.elite);
        }
        if (prev == TsomeStage::short_distance && s.stage == TsomeStage::long_distance)
            saw_long_again = true;
        CHECK_FALSE((prev == TsomeStage::long_distance && s.stage == TsomeStage::short_distance));
        prev = s.stage;
    }
    CHECK(saw_middle);
    CHECK(saw_short);
    CHECK(saw_long_again);
}

TEST_CASE("elitism, budget accounting and bounds for every algorithm")
{
    AlgoParams params;
    for (const FunctionId f : {FunctionId::sphere, FunctionId::rosenbrock, FunctionId::schwefel, FunctionId::zakharov}) {
        for (const AlgorithmId id : {AlgorithmId::rs, AlgorithmId::ispo, AlgorithmId::nusa, AlgorithmId::tsome}) {
            const Problem p(f, 7);
            Rng rng(static_cast<std::uint64_t>(f) * 31 + static_cast<std::uint64_t>(id));
            Evaluator eval(p);
            std::int64_t observed = 0;
            Fx best_observed = Fx::max();
            eval.set_observer([&](std::span<const Fx> x, Fx fit) {
                ++observed;
                REQUIRE(p.contains(x));
                best_observed = min(best_observed, fit);
            });
            auto s = init_state(id, params, p, rng, 1000);
            std::int64_t used = 0;
            Fx prev = Fx::max();
            for (int j = 0; j < 1000; ++j) {
                used += step(s, params, eval, rng);
                const auto b = best_fitness(s);
                REQUIRE(b.has_value());
                CHECK(*b <= prev);
                prev = *b;
            }
            CHECK(used == eval.count());
            CHECK(observed == eval.count());
            CHECK(*best_fitness(s) == best_observed);
        }
    }
}

TEST_CASE("adopt overwrites the working solution")
{
    const Problem p(FunctionId::sphere, 3);
    AlgoParams params;
    Rng rng(17);
    Evaluator eval(p);
    Solution incoming{{Fx::from_real(0.1), Fx::zero(), Fx::zero()}, std::nullopt};
    incoming.fitness = p.evaluate(incoming.x);

    for (const AlgorithmId id : {AlgorithmId::rs, AlgorithmId::ispo, AlgorithmId::nusa, AlgorithmId::tsome}) {
        auto s = evaluated_state(id, params, p, rng, eval);
        for (int j = 0; j < 3; ++j)
            step(s, params, eval, rng);
        const auto k_before = id == AlgorithmId::nusa ? std::get<NusaState>(s).k : 0;
        adopt(s, incoming, params, p);
        CHECK(working_solution(s) == incoming);
        CHECK(*best_fitness(s) <= *incoming.fitness);
        if (id == AlgorithmId::ispo)
            CHECK(std::get<IspoState>(s).L == Fx::zero());
        if (id == AlgorithmId::nusa)
            CHECK(std::get<NusaState>(s).k == k_before);
        if (id == AlgorithmId::tsome)
            CHECK(std::get<TsomeState>(s).stage == TsomeStage::middle_distance);
    }
    auto s = init_state(AlgorithmId::rs, params, p, rng, 10);
    CHECK_THROWS_AS(adopt(s, Solution{incoming.x, std::nullopt}, params, p), std::invalid_argument);
}

TEST_CASE("algorithm selection")
{
    Rng rng(123);
    for (int j = 0; j < 100; ++j)
        CHECK(adb_select(AdbMode::homogeneous, rng) == AlgorithmId::tsome);
    std::array<int, 4> counts{};
    for (int j = 0; j < 4000; ++j)
        ++counts[static_cast<std::size_t>(adb_select(AdbMode::heterogeneous, rng))];
    for (int c : counts)
        CHECK(std::abs(c / 4000.0 - 0.25) <= 0.02);

    Rng a(99), b(99);
    for (int j = 0; j < 50; ++j)
        CHECK(adb_select(AdbMode::heterogeneous, a) == adb_select(AdbMode::heterogeneous, b));
}
