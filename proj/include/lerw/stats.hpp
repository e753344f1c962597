#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "lerw/point.hpp"

namespace lerw {

// Moment accumulator over integer-valued samples.  Sums are kept in 128-bit
// integers, so merging partial accumulators is exactly associative and
// commutative: any partition of the sample range over workers folds to the
// same totals bit for bit.
struct Accumulator {
    uint64_t count = 0;
    i128 sum = 0;
    i128 sum_sq = 0;

    void add(i64 v) {
        ++count;
        sum += v;
        sum_sq += (i128)v * v;
    }
    void merge(const Accumulator& o) {
        count += o.count;
        sum += o.sum;
        sum_sq += o.sum_sq;
    }

    double mean() const;
    double variance() const;        // unbiased sample variance (0 when count < 2)
    double stderr_mean() const;     // sample std dev / sqrt(count)
};

// Runs item(i) for i in [0, items) split into `workers` contiguous blocks,
// each with its own State, then folds the block states left to right.  When
// per-item contributions commute exactly (integer accumulators), the result
// is independent of the worker count.
template <typename State, typename ItemFn>
State parallel_fold(uint64_t items, int workers, State init, ItemFn item) {
    if (workers < 1) workers = 1;
    if ((uint64_t)workers > items && items > 0) workers = (int)items;
    if (workers <= 1) {
        for (uint64_t i = 0; i < items; ++i) item(i, init);
        return init;
    }
    std::vector<State> parts((size_t)workers, init);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        uint64_t lo = items * (uint64_t)w / workers;
        uint64_t hi = items * (uint64_t)(w + 1) / workers;
        threads.emplace_back([&, w, lo, hi] {
            for (uint64_t i = lo; i < hi; ++i) item(i, parts[(size_t)w]);
        });
    }
    for (auto& t : threads) t.join();
    for (int w = 1; w < workers; ++w) parts[0].merge(parts[(size_t)w]);
    return parts[0];
}

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x),
// via the series for x < a+1 and the Lentz continued fraction otherwise.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Upper tail of the chi-squared distribution with k degrees of freedom.
double chi2_sf(double x, double k);

struct Chi2Result {
    double statistic = 0;
    double dof = 0;
    double p_value = 1;
    size_t cells_used = 0;    // categories after pooling
    size_t cells_pooled = 0;  // categories merged away
};

// Goodness of fit of observed counts against a probability vector (must sum
// to 1 within 1e-9; add an explicit remainder category when the model has
// truncation mass).  Categories with expected count below min_expected are
// pooled together, smallest first, so the asymptotic chi-squared law is
// usable.
Chi2Result chi2_gof(const std::vector<uint64_t>& observed, const std::vector<double>& probs,
                    double min_expected = 5.0);

// Two-sample homogeneity test on two count vectors over the same categories.
// Columns with small expected counts are pooled as above.
Chi2Result chi2_homogeneity(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b,
                            double min_expected = 5.0);

struct LineFit {
    double slope = 0;
    double intercept = 0;
    double slope_stderr = 0;
    double intercept_stderr = 0;
    double ci_half_width = 0;  // 1.96 * slope_stderr
};

// Weighted least squares y = intercept + slope * x with weights 1/se^2.
// Parameter errors come from the exact normal-equation covariance.
LineFit fit_line_weighted(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& se);

} // namespace lerw
