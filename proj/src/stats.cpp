#include "dowsn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dowsn {

char to_char(Mark m) noexcept
{
    switch (m) {
    case Mark::plus: return '+';
    case Mark::minus: return '-';
    case Mark::equal: return '=';
    }
    return '?';
}

std::vector<double> midranks(std::span<const double> pooled)
{
    std::vector<std::size_t> order(pooled.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> rank(pooled.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]])
            ++j;
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2;
        for (std::size_t k = i; k <= j; ++k)
            rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

double median(std::span<const double> values)
{
    if (values.empty())
        throw std::invalid_argument("median of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

namespace {

// Two-sided exact p-value of the doubled rank sum w2 of an m-subset.
double exact_p(const std::vector<double>& ranks, std::size_t m, double w)
{
    // Doubled midranks are integers.
    std::vector<int> r2;
    int total = 0;
    for (double r : ranks) {
        r2.push_back(static_cast<int>(std::lround(2 * r)));
        total += r2.back();
    }
    // count[k][s]: subsets of size k with doubled sum s.
    std::vector<std::vector<double>> count(m + 1, std::vector<double>(static_cast<std::size_t>(total) + 1, 0.0));
    count[0][0] = 1;
    for (int v : r2)
        for (std::size_t k = m; k >= 1; --k)
            for (int s = total; s >= v; --s)
                count[k][static_cast<std::size_t>(s)] += count[k - 1][static_cast<std::size_t>(s - v)];
    const auto w2 = std::lround(2 * w);
    double all = 0, low = 0, high = 0;
    for (int s = 0; s <= total; ++s) {
        const double c = count[m][static_cast<std::size_t>(s)];
        all += c;
        if (s <= w2)
            low += c;
        if (s >= w2)
            high += c;
    }
    return std::min(1.0, 2 * std::min(low, high) / all);
}

} // namespace

RankSum rank_sum_test(std::span<const double> reference, std::span<const double> other, double alpha)
{
    if (reference.empty() || other.empty())
        throw std::invalid_argument("rank-sum test needs two non-empty samples");
    if (!(alpha > 0 && alpha < 1))
        throw std::invalid_argument("rank-sum test: alpha must lie in (0, 1)");
    const std::size_t m = reference.size();
    const std::size_t n = other.size();
    std::vector<double> pooled(reference.begin(), reference.end());
    pooled.insert(pooled.end(), other.begin(), other.end());
    for (double v : pooled)
        if (std::isnan(v))
            throw std::invalid_argument("rank-sum test: NaN in sample");
    const auto ranks = midranks(pooled);

    RankSum out;
    out.w = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(m), 0.0);
    if (m >= 8 && n >= 8) {
        const double big_n = static_cast<double>(m + n);
        const double mean = static_cast<double>(m) * (big_n + 1) / 2;
        // Tie correction.
        std::vector<double> sorted = pooled;
        std::sort(sorted.begin(), sorted.end());
        double ties = 0;
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i])
                ++j;
            const double t = static_cast<double>(j - i);
            ties += t * t * t - t;
            i = j;
        }
        const double var =
            static_cast<double>(m * n) / 12.0 * ((big_n + 1) - ties / (big_n * (big_n - 1)));
        if (var <= 0) {
            out.p = 1;
        } else {
            const double diff = out.w - mean;
            const double corrected = std::max(0.0, std::abs(diff) - 0.5);
            const double z = corrected / std::sqrt(var);
            out.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
        }
    } else {
        out.exact = true;
        out.p = exact_p(ranks, m, out.w);
    }

    if (out.p < alpha) {
        const double ma = median(reference);
        const double mb = median(other);
        bool better;
        if (ma != mb) {
            better = ma < mb;
        } else {
            const double rank_a = out.w / static_cast<double>(m);
            const double rank_b = (static_cast<double>((m + n) * (m + n + 1)) / 2 - out.w) / static_cast<double>(n);
            better = rank_a < rank_b;
        }
        out.mark = better ? Mark::plus : Mark::minus;
    }
    return out;
}

std::int64_t sample_size(double sigma, double width)
{
    if (!(sigma >= 0) || !(width > 0) || !std::isfinite(sigma) || !std::isfinite(width))
        throw std::invalid_argument("sample size: need sigma >= 0 and a positive interval width");
    if (sigma == 0)
        return 1;
    const double n = 16 * sigma * sigma / (width * width);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(n - 1e-9)));
}

Summary aggregate(std::span<const double> values)
{
    if (values.empty())
        throw std::invalid_argument("aggregate of an empty sample");
    Summary s;
    s.count = values.size();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.count);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    // Guard against rounding pushing the mean outside the sample range.
    s.mean = std::clamp(s.mean, s.min, s.max);
    if (s.count == 1) {
        s.single = true;
        return s;
    }
    double ss = 0;
    for (double v : values)
        ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.count - 1));
    return s;
}

} // namespace dowsn
