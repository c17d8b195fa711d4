#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace occis {

/// Componentwise first and second moment accumulator.
struct MomentSums {
    std::vector<double> sum;
    std::vector<double> sum_sq;
    std::uint64_t count = 0;

    double mean(int c = 0) const { return sum[c] / static_cast<double>(count); }

    /// Unbiased sample variance, clamped at zero against cancellation.
    double variance(int c = 0) const {
        if (count < 2) return 0.0;
        double n = static_cast<double>(count);
        double v = (sum_sq[c] - sum[c] * sum[c] / n) / (n - 1.0);
        return v > 0.0 ? v : 0.0;
    }
};

/// Evaluates eval(path_index, out[components]) for path_index in [0, count)
/// and accumulates per-component sums. Work is split into fixed-size blocks
/// whose partial sums are combined in index order, so the result is bit-exact
/// for any thread count. Exceptions from workers are rethrown.
MomentSums accumulate_moments(
    std::uint64_t count, int components, int threads,
    const std::function<void(std::uint64_t, double*)>& eval);

}  // namespace occis
