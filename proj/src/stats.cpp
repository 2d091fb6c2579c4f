#include "seelab/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace seelab {

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

MeanStderr mean_stderr(std::span<const double> values) {
    MeanStderr out;
    out.n = values.size();
    if (values.empty()) return out;
    out.mean = pairwise_sum(values) / static_cast<double>(values.size());
    if (values.size() < 2) return out;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
    out.std_error = std::sqrt(var / static_cast<double>(values.size()));
    return out;
}

double trapezoid(std::span<const double> samples, double h) {
    if (samples.size() < 2) return 0.0;
    double s = 0.5 * (samples.front() + samples.back());
    for (std::size_t i = 1; i + 1 < samples.size(); ++i) s += samples[i];
    return s * h;
}

MeanStderr batch_means(std::span<const double> series, std::size_t n_batches) {
    if (n_batches < 2 || series.size() < n_batches) return mean_stderr(series);
    const std::size_t len = series.size() / n_batches;
    std::vector<double> means(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        means[b] = pairwise_sum(series.subspan(b * len, len)) / static_cast<double>(len);
    }
    MeanStderr out = mean_stderr(means);
    out.mean = pairwise_sum(series.first(len * n_batches)) / static_cast<double>(len * n_batches);
    out.n = n_batches;
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("fit_line: need at least two paired points");
    }
    const double n = static_cast<double>(x.size());
    const double mx = pairwise_sum(x) / n;
    const double my = pairwise_sum(y) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    LineFit fit;
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

}  // namespace seelab
