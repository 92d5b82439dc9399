#pragma once

// Run-level statistics: mean/std summaries, the Wilcoxon rank-sum comparison
// with a three-valued mark, and the sample-size rule.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dowsn {

// '+' the reference is better (lower), '-' worse, '=' no significant difference.
enum class Mark { plus, minus, equal };

char to_char(Mark m) noexcept;

struct RankSum {
    double w = 0;      // rank sum of the reference sample (midranks)
    double p = 1;      // two-sided p-value
    bool exact = false;
    Mark mark = Mark::equal;
};

// Samples of size >= 8 on both sides use the normal approximation with
// continuity and tie corrections; smaller ones use the exact distribution of
// the midrank sum. Throws std::invalid_argument on an empty sample.
RankSum rank_sum_test(std::span<const double> reference, std::span<const double> other, double alpha = 0.05);

inline Mark wilcoxon(std::span<const double> reference, std::span<const double> other, double alpha = 0.05)
{
    return rank_sum_test(reference, other, alpha).mark;
}

// Midranks (1-based) of the pooled sample.
std::vector<double> midranks(std::span<const double> pooled);

// ceil(16 sigma^2 / W^2), at least 1.
std::int64_t sample_size(double sigma, double width);

struct Summary {
    std::size_t count = 0;
    double mean = 0;
    double std = 0; // n-1 denominator; 0 for a single value
    double min = 0;
    double max = 0;
    bool single = false; // std is 0 by convention, not measured
};

Summary aggregate(std::span<const double> values);

double median(std::span<const double> values);

} // namespace dowsn
