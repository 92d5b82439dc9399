#pragma once

#include "dowsn/fx.hpp"
#include "dowsn/rng.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dowsn {

enum class FunctionId : int {
    sphere = 1,
    rosenbrock,
    ackley,
    griewank,
    rastrigin,
    michalewicz,
    schwefel,
    schwefel_1_2,
    schwefel_2_21,
    schwefel_2_22,
    alpine,
    axis_parallel,
    moved_axis_parallel,
    power_sum,
    zakharov,
};

struct FunctionInfo {
    FunctionId id;
    std::string_view key; // "f1".."f15"
    std::string_view name;
    bool unimodal;
    bool separable;
};

std::span<const FunctionInfo> function_registry() noexcept;
const FunctionInfo& function_info(FunctionId id);
std::optional<FunctionId> parse_function_id(std::string_view key) noexcept;

// Minimization problem over a box. Immutable once constructed.
class Problem {
public:
    // A packet carries n coordinates plus the fitness in 128 bytes.
    static constexpr int kMaxDimension = 31;

    Problem(FunctionId id, int dimension);
    Problem(FunctionId id, int dimension, Fx lower, Fx upper);
    Problem(FunctionId id, std::vector<Fx> lower, std::vector<Fx> upper);

    FunctionId id() const noexcept { return id_; }
    const FunctionInfo& info() const { return function_info(id_); }
    int dimension() const noexcept { return static_cast<int>(lower_.size()); }
    Fx lower(int i) const { return lower_[static_cast<std::size_t>(i)]; }
    Fx upper(int i) const { return upper_[static_cast<std::size_t>(i)]; }
    std::span<const Fx> lower() const noexcept { return lower_; }
    std::span<const Fx> upper() const noexcept { return upper_; }

    // Objective value in fixed point. Throws OverflowError when the value (or
    // an intermediate) leaves the representable range, std::invalid_argument
    // on a dimension mismatch.
    Fx evaluate(std::span<const Fx> x) const;

    // Search-time evaluation: an overflowing point scores Fx::max() so that
    // every optimizer discards it.
    Fx evaluate_or_max(std::span<const Fx> x) const;

    bool contains(std::span<const Fx> x) const noexcept;

private:
    FunctionId id_;
    std::vector<Fx> lower_;
    std::vector<Fx> upper_;
};

struct Solution {
    std::vector<Fx> x;
    std::optional<Fx> fitness;

    friend bool operator==(const Solution&, const Solution&) = default;
};

// Maps v into [lo, hi): an excursion zeta past one bound re-enters zeta past
// the other, modulo the width. Degenerate intervals map everything to lo.
Fx wrap_coordinate(std::int64_t raw, Fx lo, Fx hi) noexcept;
inline Fx wrap_coordinate(Fx v, Fx lo, Fx hi) noexcept { return wrap_coordinate(std::int64_t{v.raw()}, lo, hi); }

std::vector<Fx> toroidal_wrap(std::span<const Fx> x, const Problem& p);
void toroidal_wrap_in_place(std::span<Fx> x, const Problem& p) noexcept;

// Uniform point in the box, fitness unset.
Solution random_solution(Rng& rng, const Problem& p);
void randomize(std::span<Fx> x, Rng& rng, const Problem& p);

} // namespace dowsn
