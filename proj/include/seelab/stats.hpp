#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace seelab {

/// Pairwise (cascade) summation. Result depends only on the order of `values`.
double pairwise_sum(std::span<const double> values);

struct MeanStderr {
    double mean = 0.0;
    double std_error = 0.0;  // sample standard deviation / sqrt(n)
    std::size_t n = 0;
};

MeanStderr mean_stderr(std::span<const double> values);

/// Trapezoidal integral of equally spaced samples.
double trapezoid(std::span<const double> samples, double h);

/// Batch-means standard error for an autocorrelated series.
MeanStderr batch_means(std::span<const double> series, std::size_t n_batches);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two points.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace seelab
