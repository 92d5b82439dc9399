#pragma once

// Memory-saving single-solution optimizers (the algorithm database): random
// search, ISPO, nuSA and 3SOME. Each is a steppable state machine that works
// purely in fixed point and only ever evaluates in-bounds points.

#include "dowsn/bench.hpp"
#include "dowsn/fx.hpp"
#include "dowsn/rng.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <variant>

namespace dowsn {

enum class AlgorithmId { rs, ispo, nusa, tsome };

std::string_view to_string(AlgorithmId id) noexcept;
std::optional<AlgorithmId> parse_algorithm_id(std::string_view key) noexcept;

struct IspoParams {
    Fx A = Fx::one();
    int P = 10;
    Fx B = Fx::from_int(2);
    Fx S_f = Fx::from_int(4);
    // 1e-5 is below the Q16.16 resolution; one ulp is the smallest usable threshold.
    Fx epsilon = Fx::epsilon();
    int H = 30;
};

struct NusaParams {
    int b = 5;
    int N_s = 3;
    // Horizon of the neighborhood schedule; 0 means derive from the eval budget.
    std::int64_t N = 0;
    Fx T0 = Fx::one();
    Fx alpha = Fx::from_real(0.99);
};

struct TsomeParams {
    Fx alpha_e = Fx::from_real(0.05);
    Fx delta = Fx::from_real(0.2);
    int k = 4;
    Fx rho = Fx::from_real(0.4);
    int short_budget = 150;
};

struct AlgoParams {
    IspoParams ispo;
    NusaParams nusa;
    TsomeParams tsome;
};

// Throws std::invalid_argument naming the first violated constraint.
void validate(const AlgoParams& params);

// Counts evaluations and enforces a per-call allowance. Every point passed in
// must lie inside the problem box; the observer sees each (point, fitness).
class Evaluator {
public:
    using Observer = std::function<void(std::span<const Fx>, Fx)>;
    using Fitness = std::function<Fx(std::span<const Fx>)>;

    explicit Evaluator(const Problem& problem) : problem_(&problem) {}
    // Replaces the problem's objective, e.g. with a scripted stub in tests.
    Evaluator(const Problem& problem, Fitness fitness) : problem_(&problem), fitness_(std::move(fitness)) {}

    const Problem& problem() const noexcept { return *problem_; }

    // Fitness of x, or nullopt when the allowance is used up (nothing counted).
    std::optional<Fx> operator()(std::span<const Fx> x);

    std::int64_t count() const noexcept { return count_; }
    bool exhausted() const noexcept { return allowance_ <= 0; }

    void set_allowance(std::int64_t n) noexcept { allowance_ = n; }
    std::int64_t allowance() const noexcept { return allowance_; }
    void set_observer(Observer obs) { observer_ = std::move(obs); }

private:
    const Problem* problem_;
    std::int64_t count_ = 0;
    std::int64_t allowance_ = INT64_MAX;
    Observer observer_;
    Fitness fitness_;
};

struct RsState {
    static constexpr int kSlots = 2;
    Solution current;
    Solution trial;
};

struct IspoState {
    static constexpr int kSlots = 2;
    Solution particle;
    Solution trial;
    int var_index = 0;
    int t = 1; // next perturbation, 1..H
    Fx L;
};

struct NusaState {
    static constexpr int kSlots = 2;
    Solution current;
    Solution trial;
    std::int64_t k = 0;
    std::int64_t N = 1;
    std::optional<Fx> best_seen; // a scalar, not a slot
};

enum class TsomeStage { long_distance, middle_distance, short_distance };

struct TsomeState {
    static constexpr int kSlots = 3;
    Solution elite;
    Solution trial;
    Solution saved_elite; // elite at the start of the current short-distance run
    TsomeStage stage = TsomeStage::long_distance;
    FxWide radius;      // short distance radius as a fraction of each range
    int short_used = 0; // evaluations spent in the current short run
};

using OptimizerState = std::variant<RsState, IspoState, NusaState, TsomeState>;

AlgorithmId algorithm_of(const OptimizerState& s) noexcept;
int slot_count(const OptimizerState& s) noexcept;

// Fresh state around a uniform random point (not yet evaluated). The eval
// budget only matters for nuSA, whose schedule horizon derives from it.
OptimizerState init_state(AlgorithmId id, const AlgoParams& params, const Problem& p, Rng& rng,
                          std::int64_t eval_budget);

// One algorithm iteration. The first step of a fresh state only evaluates the
// initial point. Returns the evaluations consumed, which is less than a full
// iteration only when the evaluator's allowance runs out.
int step(OptimizerState& s, const AlgoParams& params, Evaluator& eval, Rng& rng);

// Best fitness the optimizer has seen, unset before the first evaluation.
std::optional<Fx> best_fitness(const OptimizerState& s) noexcept;

// The solution the optimizer currently works from (current/particle/elite).
const Solution& working_solution(const OptimizerState& s) noexcept;

// Overwrites the working solution with an evaluated incoming one. ISPO's
// learning factor is cleared, nuSA keeps its iteration counter and 3SOME
// switches to middle distance exploration.
void adopt(OptimizerState& s, const Solution& incoming, const AlgoParams& params, const Problem& p);

// Velocity of one ISPO perturbation given the uniform draw r in [-0.5, 0.5].
Fx ispo_velocity(const IspoParams& pr, int t, Fx L, Fx r);
Fx ispo_velocity(const IspoParams& pr, int t, Fx L, Rng& rng);

// Learning-factor update after a perturbation: L = v on success (ties count),
// L / S_f otherwise, cleared once its magnitude drops below epsilon.
Fx ispo_learn(const IspoParams& pr, Fx L, Fx v, bool success);

// Non-uniform step length y * (1 - rho^((1 - k/N)^b)), rho in (0, 1).
Fx nusa_delta(std::int64_t k, Fx y, std::int64_t N, int b, Fx rho);
Fx nusa_delta(std::int64_t k, Fx y, std::int64_t N, int b, Rng& rng);

void nusa_perturb(std::span<const Fx> x, std::span<Fx> out, std::int64_t k, std::int64_t N, int b,
                  const Problem& p, Rng& rng);

// Probability of the Metropolis acceptance of a move that worsens the fitness
// by df at iteration k.
Fx nusa_accept_probability(FxWide df, std::int64_t k, const NusaParams& pr);

// Exponential crossover rate giving an expected inherited fraction alpha_e.
Fx tsome_crossover_rate(int n, Fx alpha_e);

// Individual 3SOME operators. Each requires the matching stage.
int tsome_long_step(TsomeState& s, const TsomeParams& pr, Evaluator& eval, Rng& rng);
int tsome_middle_step(TsomeState& s, const TsomeParams& pr, Evaluator& eval, Rng& rng);
int tsome_short_step(TsomeState& s, const TsomeParams& pr, Evaluator& eval, Rng& rng);

enum class AdbMode { homogeneous, heterogeneous };

AlgorithmId adb_select(AdbMode mode, Rng& rng);

} // namespace dowsn
