#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "seelab/coupling.hpp"
#include "seelab/stats.hpp"

namespace seelab {

/// Monte Carlo layout shared by every estimator. Path p uses noise
/// (base_seed, first_path + p).
struct MonteCarloPlan {
    std::size_t n_paths = 200;
    std::vector<double> t_grid;
    std::uint64_t base_seed = 1;
    std::uint64_t first_path = 0;
    StepperConfig stepper;
    std::size_t workers = 1;
};

void validate_plan(const MonteCarloPlan& plan);

struct EstimatePoint {
    double t = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_effective = 0;
    double bound = 0.0;
    bool pass = true;
};

struct EstimateSeries {
    std::vector<EstimatePoint> points;

    std::vector<double> times() const;
    std::vector<double> means() const;
};

/// CSV: t,mean,stderr,bound,pass
void write_series_csv(const EstimateSeries& series, std::ostream& os);

/// One pass/fail decision against a stated inequality.
struct Verdict {
    std::string name;
    std::string inequality;
    bool passed = false;
    double margin = 0.0;  // positive when passing, in the units of the inequality
    std::string detail;
};

struct SeriesVerdict {
    EstimateSeries series;
    Verdict verdict;
};

/// E[exp(-4 int ||X||^2) |X - Y|^2] against exp((4 C_1 - 3 lambda_{N+1}/4) t) |x - y|^2.
SeriesVerdict weighted_contraction_estimate(const ModelSpec& model, const StateVector& x, const StateVector& y,
                                            const MonteCarloPlan& plan);

/// E[exp(-8 int ||X||^2) |X - Y|^4]; passes when the ratio to |x - y|^4 stays
/// within 10x of its value at the first grid time.
SeriesVerdict fourth_moment_estimate(const ModelSpec& model, const StateVector& x, const StateVector& y,
                                     const MonteCarloPlan& plan);

/// exp(4 delta + (8 delta |f(0)|^2 + (8 delta + 64 delta^2)(|sigma(0)|^2 + C_1)) t)
double exp_integrability_bound(const ModelSpec& model, double delta, double t);

/// E[exp(4 delta int ||X||^2)] against exp_integrability_bound.
SeriesVerdict exp_integrability_estimate(const ModelSpec& model, const StateVector& x, double delta,
                                         const MonteCarloPlan& plan);

struct LyapunovResult {
    SeriesVerdict result;  // series holds E|X(t)|^2 and the right-hand side as bound
    double gamma = 0.0;    // lambda_1
    double k_const = 0.0;  // 2 (|f(0)|^2 + |sigma(0)|^2 + 2 C_1)
};

/// E|X(t)|^2 <= |x|^2 - lambda_1 int_0^t E|X|^2 ds + K t.
LyapunovResult lyapunov_check(const ModelSpec& model, const StateVector& x, const MonteCarloPlan& plan);

struct FellerResult {
    std::vector<double> scales;  // multipliers applied to v' - v
    std::vector<double> ratios;  // E[sup_{s<=T} h(s) |X^v - X^v'|^2] / |v - v'|^2, T = last grid time
    SeriesVerdict base;          // series for the unscaled pair
};

/// Synchronous coupling (shared noise, no correction), h(s) = exp(-4 int_0^s ||X^v||^2).
/// Passes when the ratio stays within a factor 4 across scales 1, 0.1, 0.01.
FellerResult feller_modulus_estimate(const ModelSpec& model, const StateVector& v, const StateVector& v_prime,
                                     const MonteCarloPlan& plan);

/// E d_N(X^x(t), Y^y(t)) over the Girsanov-corrected coupling on plan.t_grid:
/// the coupled-pair distance, an upper estimate for W_{d_N}.
EstimateSeries coupled_distance_series(const ModelSpec& model, const StateVector& x, const StateVector& y,
                                       const MonteCarloPlan& plan, const DistanceParams& p);

MeanStderr wasserstein_upper(const ModelSpec& model, const StateVector& x, const StateVector& y, double t,
                             const MonteCarloPlan& plan, const DistanceParams& p);

struct ContractionResult {
    Verdict verdict;
    bool found = false;
    double t0 = 0.0;
    double alpha = 0.0;  // max over pairs of (mean + 2 stderr) / d_N(x, y) at t0 (or at the last t)
    std::vector<double> worst_ratio;  // per search time
    std::size_t pairs = 0;
};

/// Smallest grid time at which every sampled pair (d_N < 1) has ratio <= 2/3.
ContractionResult contraction_check(const ModelSpec& model, const MonteCarloPlan& plan, const DistanceParams& p,
                                    const std::vector<double>& t0_search_grid, std::size_t n_pairs = 20);

struct DSmallResult {
    Verdict verdict;
    double epsilon = 0.0;
    double max_upper = 0.0;
    std::size_t pairs = 0;
};

/// Pairs drawn from {|x|_H^2 <= M_level} within the ball; epsilon = 1 - max(mean + 2 stderr).
DSmallResult d_small_check(const ModelSpec& model, const MonteCarloPlan& plan, const DistanceParams& p,
                           double level, double t, std::size_t n_pairs = 20);

struct OccupationMeasure {
    std::vector<std::vector<double>> samples;
    std::vector<double> weights;
    std::vector<double> mean;            // per mode
    std::vector<double> second_moment;   // per mode
    std::vector<double> second_moment_stderr;  // batch means
    MeanStderr energy;                   // |X|_H^2, batch means
    double time_avg_v2 = 0.0;            // (1/t) int_0^t ||X||^2 over the whole path
    double time_avg_v2_bound = 0.0;      // |x|^2 / t + 2 (|f(0)|^2 + |sigma(0)|^2 + 2 C_1)
};

OccupationMeasure occupation_sampler(const ModelSpec& model, const StateVector& x, double t_burn, double t_avg,
                                     std::size_t thin, const StepperConfig& cfg, std::uint64_t seed,
                                     std::uint64_t path_index = 0);

struct TestFunction {
    std::string name;
    std::function<double(std::span<const double>)> fn;
};

/// Bounded Lipschitz observables: two truncated energies, then sin/cos of
/// successive modes.
std::vector<TestFunction> default_test_functions(std::size_t dim, std::size_t count);

struct InvarianceResidual {
    std::string name;
    double residual = 0.0;  // E_occ[phi(X_Delta)] - E_occ[phi]
    double std_error = 0.0;
    bool pass = false;      // |residual| <= 3 stderr
};

/// Restarts one path from every occupation sample for time `horizon` using
/// noise (plan.base_seed, plan.first_path + j).
std::vector<InvarianceResidual> invariance_residual(const ModelSpec& model, const OccupationMeasure& occ,
                                                    double horizon, const std::vector<TestFunction>& tests,
                                                    const MonteCarloPlan& plan);
std::vector<InvarianceResidual> invariance_residual(const ModelSpec& model, const OccupationMeasure& occ,
                                                    double horizon, std::size_t n_test_fns,
                                                    const MonteCarloPlan& plan);

struct RateFit {
    double rate = 0.0;      // r, positive for decay
    double constant = 0.0;  // C
    double r_squared = 0.0;
    std::size_t used_points = 0;
    std::size_t dropped_points = 0;
};

/// Least squares of log(mean) against t. Nonpositive means are dropped; needs 3 points.
RateFit fit_exponential_rate(const EstimateSeries& series);

struct DeltaChoice {
    double delta = 0.5;
    double exponent = 0.0;  // 8d|f0|^2 + (8d+64d^2)|s0|^2 + (64d^2+12d)C_1 - (3/4) d lambda_{N+1}
};

double combined_exponent(const ModelSpec& model, double delta);
/// Grid search over {0.05, 0.10, ..., 0.95}; ties go to the smaller delta.
DeltaChoice select_delta(const ModelSpec& model);

struct ErgodicityReport {
    RateFit fit;
    std::vector<Verdict> verdicts;
    double lyapunov_gamma = 0.0;
    double lyapunov_k = 0.0;
    DistanceParams distance;
    double t0 = 0.0;
    double epsilon = 0.0;
    double mean_shift_cost = 0.0;
    bool h1_passed = false;
    std::string notes;

    bool all_passed() const;
};

void write_report_text(const ErgodicityReport& report, std::ostream& os);

}  // namespace seelab
