#include "dowsn/algos.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace dowsn {

namespace {

constexpr std::array<std::string_view, 4> kAlgoKeys{"rs", "ispo", "nusa", "3some"};

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::int64_t width_raw(const Problem& p, int i) { return std::int64_t{p.upper(i).raw()} - p.lower(i).raw(); }

FxWide wide_width(const Problem& p, int i) { return FxWide::from_raw(width_raw(p, i) * Fx::kOneRaw); }

// Evaluates s in place if it has no fitness yet. True when the caller may
// proceed with a regular iteration.
bool ensure_evaluated(Solution& s, Evaluator& eval, int& used)
{
    if (s.fitness)
        return true;
    if (const auto f = eval(s.x)) {
        s.fitness = f;
        ++used;
    }
    return false;
}

bool improves(Fx f, const Solution& s) { return f < *s.fitness; }

int rs_step(RsState& s, Evaluator& eval, Rng& rng)
{
    int used = 0;
    if (!ensure_evaluated(s.current, eval, used) || eval.exhausted())
        return used;
    const Problem& p = eval.problem();
    s.trial.x.resize(s.current.x.size());
    randomize(s.trial.x, rng, p);
    const auto f = eval(s.trial.x);
    if (!f)
        return used;
    ++used;
    if (improves(*f, s.current)) {
        s.trial.fitness = f;
        std::swap(s.current, s.trial);
    }
    return used;
}

// Remainder of v modulo the range width, keeping the sign. Adding it to a
// coordinate then wrapping gives the same point as adding v itself.
Fx reduce_velocity(Fx v, std::int64_t width)
{
    if (width <= 0)
        return Fx::zero();
    return Fx::from_raw(static_cast<std::int32_t>(std::int64_t{v.raw()} % width));
}

int ispo_step(IspoState& s, const IspoParams& pr, Evaluator& eval, Rng& rng)
{
    int used = 0;
    if (!ensure_evaluated(s.particle, eval, used))
        return used;
    const Problem& p = eval.problem();
    const int n = p.dimension();
    const auto i = static_cast<std::size_t>(s.var_index);
    const std::int64_t width = width_raw(p, s.var_index);
    while (s.t <= pr.H) {
        if (eval.exhausted())
            return used;
        Fx v;
        try {
            v = reduce_velocity(ispo_velocity(pr, s.t, s.L, rng), width);
        } catch (const OverflowError&) {
            v = Fx::zero();
        }
        s.trial = s.particle;
        s.trial.x[i] = wrap_coordinate(std::int64_t{s.particle.x[i].raw()} + v.raw(), p.lower(s.var_index),
                                       p.upper(s.var_index));
        const auto f = eval(s.trial.x);
        ++used;
        const bool success = *f <= *s.particle.fitness;
        if (success) {
            s.trial.fitness = f;
            std::swap(s.particle, s.trial);
        }
        s.L = ispo_learn(pr, s.L, v, success);
        ++s.t;
    }
    s.t = 1;
    s.L = Fx::zero();
    s.var_index = (s.var_index + 1) % n;
    return used;
}

int nusa_step(NusaState& s, const NusaParams& pr, Evaluator& eval, Rng& rng)
{
    int used = 0;
    if (!ensure_evaluated(s.current, eval, used)) {
        if (s.current.fitness)
            s.best_seen = s.current.fitness;
        return used;
    }
    const Problem& p = eval.problem();
    s.trial.x.resize(s.current.x.size());
    for (int j = 0; j < pr.N_s; ++j) {
        if (eval.exhausted())
            return used;
        nusa_perturb(s.current.x, s.trial.x, s.k, s.N, pr.b, p, rng);
        const auto f = eval(s.trial.x);
        ++used;
        const FxWide df = FxWide(*f) - FxWide(*s.current.fitness);
        bool accept = df <= FxWide{};
        if (!accept)
            accept = rng.unit() < nusa_accept_probability(df, s.k, pr);
        if (accept) {
            s.trial.fitness = f;
            std::swap(s.current, s.trial);
        }
        if (!s.best_seen || *f < *s.best_seen)
            s.best_seen = f;
    }
    s.k = std::min(s.k + 1, s.N);
    return used;
}

void enter_short(TsomeState& s, const TsomeParams& pr)
{
    s.stage = TsomeStage::short_distance;
    s.saved_elite = s.elite;
    s.radius = FxWide(pr.rho);
    s.short_used = 0;
}

Fx short_radius(const TsomeState& s, const Problem& p, int i) { return (s.radius * wide_width(p, i)).narrow(); }

} // namespace

std::string_view to_string(AlgorithmId id) noexcept { return kAlgoKeys[static_cast<std::size_t>(id)]; }

std::optional<AlgorithmId> parse_algorithm_id(std::string_view key) noexcept
{
    for (std::size_t i = 0; i < kAlgoKeys.size(); ++i)
        if (kAlgoKeys[i] == key)
            return static_cast<AlgorithmId>(i);
    return std::nullopt;
}

void validate(const AlgoParams& params)
{
    const auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    const auto& is = params.ispo;
    if (is.H < 1)
        fail("ispo: H must be at least 1");
    if (is.P < 0)
        fail("ispo: P must be non-negative");
    if (is.S_f <= Fx::one())
        fail("ispo: S_f must exceed 1");
    if (is.epsilon <= Fx::zero())
        fail("ispo: epsilon must be positive");
    const auto& nu = params.nusa;
    if (nu.N_s < 1)
        fail("nusa: N_s must be at least 1");
    if (nu.b < 0)
        fail("nusa: b must be non-negative");
    if (nu.N < 0)
        fail("nusa: N must be non-negative");
    if (nu.alpha <= Fx::zero() || nu.alpha >= Fx::one())
        fail("nusa: alpha must lie in (0, 1)");
    if (nu.T0 <= Fx::zero())
        fail("nusa: T0 must be positive");
    const auto& ts = params.tsome;
    if (ts.alpha_e <= Fx::zero() || ts.alpha_e >= Fx::one())
        fail("3some: alpha_e must lie in (0, 1)");
    if (ts.delta <= Fx::zero() || ts.delta > Fx::one())
        fail("3some: delta must lie in (0, 1]");
    if (ts.k < 1)
        fail("3some: k must be at least 1");
    if (ts.rho <= Fx::zero() || ts.rho > Fx::one())
        fail("3some: rho must lie in (0, 1]");
    if (ts.short_budget < 1)
        fail("3some: short_budget must be at least 1");
}

std::optional<Fx> Evaluator::operator()(std::span<const Fx> x)
{
    if (allowance_ <= 0)
        return std::nullopt;
    if (!problem_->contains(x))
        throw std::logic_error("evaluator: trial point outside the search box");
    Fx f;
    if (fitness_) {
        f = fitness_(x);
    } else {
        f = problem_->evaluate_or_max(x);
    }
    ++count_;
    --allowance_;
    if (observer_)
        observer_(x, f);
    return f;
}

AlgorithmId algorithm_of(const OptimizerState& s) noexcept { return static_cast<AlgorithmId>(s.index()); }

int slot_count(const OptimizerState& s) noexcept
{
    return std::visit([](const auto& st) { return std::decay_t<decltype(st)>::kSlots; }, s);
}

OptimizerState init_state(AlgorithmId id, const AlgoParams& params, const Problem& p, Rng& rng,
                          std::int64_t eval_budget)
{
    Solution start = random_solution(rng, p);
    switch (id) {
    case AlgorithmId::rs: return RsState{std::move(start), {}};
    case AlgorithmId::ispo: return IspoState{std::move(start), {}, 0, 1, Fx::zero()};
    case AlgorithmId::nusa: {
        NusaState s;
        s.current = std::move(start);
        s.N = params.nusa.N > 0 ? params.nusa.N : std::max<std::int64_t>(1, eval_budget / params.nusa.N_s);
        return s;
    }
    case AlgorithmId::tsome: {
        TsomeState s;
        s.elite = std::move(start);
        s.radius = FxWide(params.tsome.rho);
        return s;
    }
    }
    throw std::invalid_argument("unknown algorithm id");
}

int step(OptimizerState& s, const AlgoParams& params, Evaluator& eval, Rng& rng)
{
    return std::visit(overloaded{
                          [&](RsState& st) { return rs_step(st, eval, rng); },
                          [&](IspoState& st) { return ispo_step(st, params.ispo, eval, rng); },
                          [&](NusaState& st) { return nusa_step(st, params.nusa, eval, rng); },
                          [&](TsomeState& st) {
                              int used = 0;
                              if (!ensure_evaluated(st.elite, eval, used))
                                  return used;
                              switch (st.stage) {
                              case TsomeStage::long_distance: return tsome_long_step(st, params.tsome, eval, rng);
                              case TsomeStage::middle_distance:
                                  return tsome_middle_step(st, params.tsome, eval, rng);
                              case TsomeStage::short_distance:
                                  return tsome_short_step(st, params.tsome, eval, rng);
                              }
                              return 0;
                          },
                      },
                      s);
}

std::optional<Fx> best_fitness(const OptimizerState& s) noexcept
{
    return std::visit(overloaded{
                          [](const RsState& st) { return st.current.fitness; },
                          [](const IspoState& st) { return st.particle.fitness; },
                          [](const NusaState& st) { return st.best_seen; },
                          [](const TsomeState& st) { return st.elite.fitness; },
                      },
                      s);
}

const Solution& working_solution(const OptimizerState& s) noexcept
{
    return std::visit(overloaded{
                          [](const RsState& st) -> const Solution& { return st.current; },
                          [](const IspoState& st) -> const Solution& { return st.particle; },
                          [](const NusaState& st) -> const Solution& { return st.current; },
                          [](const TsomeState& st) -> const Solution& { return st.elite; },
                      },
                      s);
}

void adopt(OptimizerState& s, const Solution& incoming, const AlgoParams& params, const Problem& p)
{
    if (!incoming.fitness || !p.contains(incoming.x))
        throw std::invalid_argument("adopt: incoming solution must be evaluated and inside the box");
    std::visit(overloaded{
                   [&](RsState& st) { st.current = incoming; },
                   [&](IspoState& st) {
                       st.particle = incoming;
                       st.L = Fx::zero();
                   },
                   [&](NusaState& st) {
                       st.current = incoming;
                       if (!st.best_seen || *incoming.fitness < *st.best_seen)
                           st.best_seen = incoming.fitness;
                   },
                   [&](TsomeState& st) {
                       st.elite = incoming;
                       st.stage = TsomeStage::middle_distance;
                       st.radius = FxWide(params.tsome.rho);
                       st.short_used = 0;
                   },
               },
               s);
}

Fx ispo_velocity(const IspoParams& pr, int t, Fx L, Fx r)
{
    if (t < 1)
        throw std::invalid_argument("ispo_velocity: t must be positive");
    // A / t^P as an exact division; t^P past int64 leaves nothing visible.
    FxWide accel;
    std::int64_t denom = 1;
    bool huge = false;
    for (int j = 0; j < pr.P && !huge; ++j)
        huge = __builtin_mul_overflow(denom, std::int64_t{t}, &denom);
    if (!huge)
        accel = div_int(FxWide(pr.A), denom);
    return (accel * FxWide(r) + FxWide(pr.B) * FxWide(L)).narrow();
}

Fx ispo_velocity(const IspoParams& pr, int t, Fx L, Rng& rng)
{
    return ispo_velocity(pr, t, L, rng.uniform(Fx::from_real(-0.5), Fx::from_real(0.5)));
}

Fx ispo_learn(const IspoParams& pr, Fx L, Fx v, bool success)
{
    Fx next = success ? v : L / pr.S_f;
    if (abs(next) < pr.epsilon)
        next = Fx::zero();
    return next;
}

Fx nusa_delta(std::int64_t k, Fx y, std::int64_t N, int b, Fx rho)
{
    if (N < 1)
        throw std::invalid_argument("nusa_delta: N must be positive");
    if (k >= N || y <= Fx::zero())
        return Fx::zero();
    if (rho <= Fx::zero() || rho >= Fx::one())
        throw std::invalid_argument("nusa_delta: rho must lie in (0, 1)");
    const FxWide one = FxWide(Fx::one());
    const FxWide frac = div_int(FxWide::from_int(std::max<std::int64_t>(k, 0)), N);
    const FxWide e = pow(one - frac, b);
    const FxWide rho_e = exp(e * log(FxWide(rho)));
    const Fx d = (FxWide(y) * (one - rho_e)).narrow();
    return std::clamp(d, Fx::zero(), y);
}

Fx nusa_delta(std::int64_t k, Fx y, std::int64_t N, int b, Rng& rng)
{
    return nusa_delta(k, y, N, b, rng.open_unit());
}

void nusa_perturb(std::span<const Fx> x, std::span<Fx> out, std::int64_t k, std::int64_t N, int b,
                  const Problem& p, Rng& rng)
{
    for (std::size_t i = 0; i < x.size(); ++i) {
        const int d = static_cast<int>(i);
        const bool up = rng.below(2) == 1;
        const Fx room = up ? p.upper(d) - x[i] : x[i] - p.lower(d);
        const Fx delta = nusa_delta(k, room, N, b, rng);
        out[i] = up ? x[i] + delta : x[i] - delta;
    }
}

Fx nusa_accept_probability(FxWide df, std::int64_t k, const NusaParams& pr)
{
    if (df <= FxWide{})
        return Fx::one();
    const FxWide t = FxWide(pr.T0) * pow(FxWide(pr.alpha), static_cast<int>(std::min<std::int64_t>(k, INT32_MAX)));
    if (t <= FxWide{})
        return Fx::zero();
    // exp(-x) is below half an ulp past x = 11.8; skip the division when it
    // could overflow.
    if (df > mul_int(t, 64))
        return Fx::zero();
    return exp(-(df / t)).narrow();
}

Fx tsome_crossover_rate(int n, Fx alpha_e)
{
    const FxWide inv = FxWide(Fx::one()) / mul_int(FxWide(alpha_e), n);
    return pow(FxWide(Fx::from_real(0.5)), inv).narrow();
}

int tsome_long_step(TsomeState& s, const TsomeParams& pr, Evaluator& eval, Rng& rng)
{
    if (s.stage != TsomeStage::long_distance)
        throw std::logic_error("3some: long distance step outside its stage");
    if (eval.exhausted())
        return 0;
    const Problem& p = eval.problem();
    const auto n = s.elite.x.size();
    s.trial.x.resize(n);
    randomize(s.trial.x, rng, p);
    // Exponential crossover: a run of consecutive elite coordinates, at least one.
    const Fx cr = tsome_crossover_rate(static_cast<int>(n), pr.alpha_e);
    auto j = static_cast<std::size_t>(rng.below(n));
    s.trial.x[j] = s.elite.x[j];
    for (std::size_t copied = 1; copied < n && rng.unit() < cr; ++copied) {
        j = (j + 1) % n;
        s.trial.x[j] = s.elite.x[j];
    }
    const auto f = eval(s.trial.x);
    if (improves(*f, s.elite)) {
        s.trial.fitness = f;
        std::swap(s.elite, s.trial);
        s.stage = TsomeStage::middle_distance;
    }
    return 1;
}

int tsome_middle_step(TsomeState& s, const TsomeParams& pr, Evaluator& eval, Rng& rng)
{
    if (s.stage != TsomeStage::middle_distance)
        throw std::logic_error("3some: middle distance step outside its stage");
    const Problem& p = eval.problem();
    const auto n = s.elite.x.size();
    s.trial.x.resize(n);
    int used = 0;
    bool improved = false;
    for (int j = 0; j < pr.k; ++j) {
        if (eval.exhausted())
            return used;
        for (std::size_t i = 0; i < n; ++i) {
            const int d = static_cast<int>(i);
            const Fx half = div_int(FxWide(pr.delta) * wide_width(p, d), 2).narrow();
            const Fx lo = s.elite.x[i] - half;
            const Fx off = rng.uniform(Fx::zero(), half + half);
            s.trial.x[i] = wrap_coordinate(std::int64_t{lo.raw()} + off.raw(), p.lower(d), p.upper(d));
        }
        const auto f = eval(s.trial.x);
        ++used;
        if (improves(*f, s.elite)) {
            s.trial.fitness = f;
            std::swap(s.elite, s.trial);
            improved = true;
        }
    }
    if (!improved)
        enter_short(s, pr);
    return used;
}

int tsome_short_step(TsomeState& s, const TsomeParams& pr, Evaluator& eval, Rng&)
{
    if (s.stage != TsomeStage::short_distance)
        throw std::logic_error("3some: short distance step outside its stage");
    const Problem& p = eval.problem();
    const int n = p.dimension();
    int used = 0;
    bool improved = false;
    bool full_sweep = true;
    bool any_radius = false;
    const auto probe = [&](int d, std::int64_t target) {
        const auto i = static_cast<std::size_t>(d);
        s.trial = s.elite;
        s.trial.x[i] = wrap_coordinate(target, p.lower(d), p.upper(d));
        const auto f = eval(s.trial.x);
        ++used;
        ++s.short_used;
        if (improves(*f, s.elite)) {
            s.trial.fitness = f;
            std::swap(s.elite, s.trial);
            return true;
        }
        return false;
    };
    const auto budget_left = [&] { return s.short_used < pr.short_budget && !eval.exhausted(); };
    for (int d = 0; d < n; ++d) {
        const Fx r = short_radius(s, p, d);
        if (r > Fx::zero())
            any_radius = true;
        else
            continue;
        if (!budget_left()) {
            full_sweep = false;
            break;
        }
        const auto i = static_cast<std::size_t>(d);
        const std::int64_t x = s.elite.x[i].raw();
        if (probe(d, x - r.raw())) {
            improved = true;
            continue;
        }
        if (!budget_left()) {
            full_sweep = false;
            break;
        }
        if (probe(d, x + div_int(r, 2).raw()))
            improved = true;
    }
    if (full_sweep && !improved)
        s.radius = div_int(s.radius, 2);
    if (s.short_used >= pr.short_budget || !any_radius)
        s.stage = TsomeStage::long_distance;
    return used;
}

AlgorithmId adb_select(AdbMode mode, Rng& rng)
{
    if (mode == AdbMode::homogeneous)
        return AlgorithmId::tsome;
    return static_cast<AlgorithmId>(rng.below(4));
}

} // namespace dowsn
