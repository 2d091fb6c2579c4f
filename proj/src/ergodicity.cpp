#include "seelab/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "seelab/h1_condition.hpp"
#include "seelab/parallel.hpp"

namespace seelab {
namespace {

constexpr double kRoundSlack = 1e-12;

std::vector<std::size_t> grid_steps(const MonteCarloPlan& plan) {
    std::vector<std::size_t> steps;
    steps.reserve(plan.t_grid.size());
    for (double t : plan.t_grid) steps.push_back(steps_for(t, plan.stepper.dt));
    return steps;
}

double diff_norm2(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

struct PairState {
    std::span<const double> x;
    std::span<const double> y;
    double int_v2;      // trapezoid of ||X||^2 on the step grid
    double sup_h_w2;    // sup_{s<=t} exp(-4 int_0^s ||X||^2) |X-Y|^2
};

// One row of grid values per path, rows in path order.
template <class Value>
std::vector<std::vector<double>> sample_coupled(const ModelSpec& model, const StateVector& x, const StateVector& y,
                                                const MonteCarloPlan& plan, bool correction, Value value) {
    const auto steps = grid_steps(plan);
    const std::size_t total = steps.back();
    const double dt = plan.stepper.dt;
    return parallel_map(plan.n_paths, plan.workers, [&](std::size_t p) {
        CoupledStepper stepper(model, plan.stepper, correction);
        std::vector<double> xs = x.coeffs, ys = y.coeffs;
        std::vector<double> dw(stepper.noise_dim()), dlx(xs.size()), dly(xs.size());
        std::vector<double> out(steps.size());
        double integral = 0.0;
        double prev_v2 = v_norm_squared(model.basis, xs);
        double sup_h_w2 = diff_norm2(xs, ys);
        std::size_t g = 0;
        auto emit = [&](std::size_t k) {
            while (g < steps.size() && steps[g] == k) {
                out[g++] = value(PairState{xs, ys, integral, sup_h_w2});
            }
        };
        emit(0);
        const std::uint64_t path_index = plan.first_path + p;
        for (std::size_t k = 0; k < total; ++k) {
            gaussian_increments(plan.base_seed, path_index, k, dt, dw);
            stepper.advance(xs, ys, dw, dlx, dly);
            const double v2 = v_norm_squared(model.basis, xs);
            integral += 0.5 * dt * (prev_v2 + v2);
            prev_v2 = v2;
            sup_h_w2 = std::max(sup_h_w2, std::exp(-4.0 * integral) * diff_norm2(xs, ys));
            emit(k + 1);
        }
        return out;
    });
}

struct SingleState {
    std::span<const double> x;
    double int_v2;  // trapezoid of ||X||^2
    double int_h2;  // trapezoid of |X|_H^2
};

template <class Value>
std::vector<std::vector<double>> sample_single(const ModelSpec& model, const StateVector& x,
                                               const MonteCarloPlan& plan, Value value) {
    const auto steps = grid_steps(plan);
    const std::size_t total = steps.back();
    const double dt = plan.stepper.dt;
    return parallel_map(plan.n_paths, plan.workers, [&](std::size_t p) {
        ReflectedStepper stepper(model, plan.stepper);
        std::vector<double> xs = x.coeffs;
        std::vector<double> dw(stepper.noise_dim()), dl(xs.size());
        std::vector<double> out(steps.size());
        double int_v2 = 0.0, int_h2 = 0.0;
        double prev_v2 = v_norm_squared(model.basis, xs), prev_h2 = h_inner(xs, xs);
        std::size_t g = 0;
        auto emit = [&](std::size_t k) {
            while (g < steps.size() && steps[g] == k) out[g++] = value(SingleState{xs, int_v2, int_h2});
        };
        emit(0);
        const std::uint64_t path_index = plan.first_path + p;
        for (std::size_t k = 0; k < total; ++k) {
            gaussian_increments(plan.base_seed, path_index, k, dt, dw);
            stepper.advance(xs, dw, dl);
            const double v2 = v_norm_squared(model.basis, xs), h2 = h_inner(xs, xs);
            int_v2 += 0.5 * dt * (prev_v2 + v2);
            int_h2 += 0.5 * dt * (prev_h2 + h2);
            prev_v2 = v2;
            prev_h2 = h2;
            emit(k + 1);
        }
        return out;
    });
}

MeanStderr column(const std::vector<std::vector<double>>& rows, std::size_t j) {
    std::vector<double> col(rows.size());
    for (std::size_t p = 0; p < rows.size(); ++p) col[p] = rows[p][j];
    return mean_stderr(col);
}

EstimateSeries aggregate(const std::vector<std::vector<double>>& rows, const std::vector<double>& grid) {
    EstimateSeries s;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto ms = column(rows, j);
        s.points.push_back({grid[j], ms.mean, ms.std_error, ms.n, 0.0, true});
    }
    return s;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

void require_in_ball(const ModelSpec& model, const StateVector& x, const char* what) {
    require_in_basis(model.basis, x);
    check_initial_state(x, what);
}

}  // namespace

void validate_plan(const MonteCarloPlan& plan) {
    if (plan.n_paths < 2) throw ValidationError("plan needs n_paths >= 2");
    if (plan.t_grid.empty()) throw ValidationError("plan t_grid must be nonempty");
    for (std::size_t i = 0; i < plan.t_grid.size(); ++i) {
        if (plan.t_grid[i] < 0.0) throw ValidationError("plan t_grid must be nonnegative");
        if (i > 0 && !(plan.t_grid[i] > plan.t_grid[i - 1])) throw ValidationError("plan t_grid must increase");
    }
    validate_stepper(plan.stepper);
    for (double t : plan.t_grid) steps_for(t, plan.stepper.dt);
}

std::vector<double> EstimateSeries::times() const {
    std::vector<double> out;
    for (const auto& p : points) out.push_back(p.t);
    return out;
}

std::vector<double> EstimateSeries::means() const {
    std::vector<double> out;
    for (const auto& p : points) out.push_back(p.mean);
    return out;
}

void write_series_csv(const EstimateSeries& series, std::ostream& os) {
    os << "t,mean,stderr,bound,pass\n";
    char buf[160];
    for (const auto& p : series.points) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", p.t, p.mean, p.std_error, p.bound,
                      p.pass ? 1 : 0);
        os << buf;
    }
}

SeriesVerdict weighted_contraction_estimate(const ModelSpec& model, const StateVector& x, const StateVector& y,
                                            const MonteCarloPlan& plan) {
    validate_plan(plan);
    require_in_ball(model, x, "x");
    require_in_ball(model, y, "y");
    const double lambda_next = model.basis.lambda_next(model.coupling_n);
    const double exponent = 4.0 * model.lipschitz_c1 - 0.75 * lambda_next;
    const double alt_exponent = 5.0 * model.lipschitz_c1 - 0.8 * lambda_next;
    const double gap2 = diff_norm2(x.coeffs, y.coeffs);

    const auto rows = sample_coupled(model, x, y, plan, true, [](const PairState& s) {
        return std::exp(-4.0 * s.int_v2) * diff_norm2(s.x, s.y);
    });
    SeriesVerdict out;
    out.series = aggregate(rows, plan.t_grid);
    bool all = true, alt_all = true;
    double margin = std::numeric_limits<double>::infinity();
    for (auto& p : out.series.points) {
        p.bound = std::exp(exponent * p.t) * gap2;
        p.pass = p.mean - 2.0 * p.std_error <= p.bound * (1.0 + kRoundSlack);
        all = all && p.pass;
        alt_all = alt_all && (p.mean - 2.0 * p.std_error <= std::exp(alt_exponent * p.t) * gap2 * (1.0 + kRoundSlack));
        margin = std::min(margin, p.bound - (p.mean - 2.0 * p.std_error));
    }
    out.verdict.name = "weighted_contraction";
    out.verdict.inequality = "E[exp(-4 int ||X||^2) |X-Y|^2] <= exp((4C_1 - 3 lambda_{N+1}/4) t) |x-y|^2";
    out.verdict.passed = all && exponent < 0.0;
    out.verdict.margin = margin;
    out.verdict.detail = "exponent " + fmt(exponent) + (exponent < 0.0 ? "" : " (not negative: H.1 violated)") +
                         "; alternative exponent 5C_1 - 4 lambda_{N+1}/5 = " + fmt(alt_exponent) +
                         (alt_all ? " also holds" : " fails");
    return out;
}

SeriesVerdict fourth_moment_estimate(const ModelSpec& model, const StateVector& x, const StateVector& y,
                                     const MonteCarloPlan& plan) {
    validate_plan(plan);
    require_in_ball(model, x, "x");
    require_in_ball(model, y, "y");
    const double gap2 = diff_norm2(x.coeffs, y.coeffs);
    const double gap4 = gap2 * gap2;
    const auto rows = sample_coupled(model, x, y, plan, true, [](const PairState& s) {
        const double w2 = diff_norm2(s.x, s.y);
        return std::exp(-8.0 * s.int_v2) * w2 * w2;
    });
    SeriesVerdict out;
    out.series = aggregate(rows, plan.t_grid);
    out.verdict.name = "fourth_moment";
    out.verdict.inequality = "E[exp(-8 int ||X||^2) |X-Y|^4] / |x-y|^4 <= 10 x (value at first grid time)";
    if (gap4 == 0.0) {
        for (auto& p : out.series.points) p.pass = p.mean == 0.0;
        out.verdict.passed = std::all_of(out.series.points.begin(), out.series.points.end(),
                                         [](const EstimatePoint& p) { return p.pass; });
        out.verdict.detail = "x = y";
        return out;
    }
    const double first = out.series.points.front().mean / gap4;
    double worst = 0.0;
    for (auto& p : out.series.points) {
        p.bound = 10.0 * first * gap4;
        p.pass = p.mean <= p.bound * (1.0 + kRoundSlack);
        worst = std::max(worst, p.mean / gap4);
    }
    out.verdict.passed = worst <= 10.0 * first;
    out.verdict.margin = 10.0 * first - worst;
    out.verdict.detail = "max ratio " + fmt(worst) + ", first ratio " + fmt(first);
    return out;
}

double exp_integrability_bound(const ModelSpec& model, double delta, double t) {
    const double f2 = model.f0_vstar * model.f0_vstar;
    const double s2 = model.sigma0_hs * model.sigma0_hs;
    const double q = 8.0 * delta + 64.0 * delta * delta;
    return std::exp(4.0 * delta + (8.0 * delta * f2 + q * s2 + q * model.lipschitz_c1) * t);
}

SeriesVerdict exp_integrability_estimate(const ModelSpec& model, const StateVector& x, double delta,
                                         const MonteCarloPlan& plan) {
    validate_plan(plan);
    require_in_ball(model, x, "x");
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0,1)");
    const auto rows = sample_single(model, x, plan,
                                    [delta](const SingleState& s) { return std::exp(4.0 * delta * s.int_v2); });
    SeriesVerdict out;
    out.series = aggregate(rows, plan.t_grid);
    bool all = true;
    double margin = std::numeric_limits<double>::infinity();
    std::string overflow;
    for (auto& p : out.series.points) {
        p.bound = exp_integrability_bound(model, delta, p.t);
        if (!std::isfinite(p.mean)) {
            p.pass = false;
            overflow = "; estimate overflowed at t=" + fmt(p.t);
        } else {
            const double rel = p.mean > 0.0 ? p.std_error / p.mean : 0.0;
            p.pass = p.mean <= p.bound * (1.0 + 2.0 * rel);
            margin = std::min(margin, std::log(p.bound) - std::log(p.mean));
        }
        all = all && p.pass;
    }
    out.verdict.name = "exp_integrability";
    out.verdict.inequality =
        "E[exp(4 delta int ||X||^2)] <= exp(4 delta + (8 delta |f(0)|^2 + (8 delta + 64 delta^2)(|sigma(0)|^2 + C_1)) t)";
    out.verdict.passed = all;
    out.verdict.margin = margin;
    out.verdict.detail = "delta " + fmt(delta) + ", log-margin " + fmt(margin) + overflow;
    return out;
}

LyapunovResult lyapunov_check(const ModelSpec& model, const StateVector& x, const MonteCarloPlan& plan) {
    validate_plan(plan);
    require_in_ball(model, x, "x");
    LyapunovResult out;
    const double lambda1 = model.basis.eigenvalue(0);
    out.gamma = lambda1;
    out.k_const = 2.0 * (model.f0_vstar * model.f0_vstar + model.sigma0_hs * model.sigma0_hs +
                         2.0 * model.lipschitz_c1);
    const double x2 = h_inner(x.coeffs, x.coeffs);

    // Per path: |X(t)|^2 and lambda_1 int |X|^2; both enter the inequality linearly.
    const auto lhs_rows = sample_single(model, x, plan, [](const SingleState& s) {
        return h_inner(s.x, s.x);
    });
    const auto int_rows = sample_single(model, x, plan, [](const SingleState& s) { return s.int_h2; });

    auto& series = out.result.series;
    bool all = true;
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < plan.t_grid.size(); ++j) {
        std::vector<double> combined(lhs_rows.size());
        for (std::size_t p = 0; p < lhs_rows.size(); ++p) combined[p] = lhs_rows[p][j] + lambda1 * int_rows[p][j];
        const auto lhs = column(lhs_rows, j);
        const auto comb = mean_stderr(combined);
        const double t = plan.t_grid[j];
        const double mean_int = column(int_rows, j).mean;
        const double rhs = x2 - lambda1 * mean_int + out.k_const * t;
        const double allowance = x2 + out.k_const * t;
        const bool pass = comb.mean <= allowance + 0.05 * std::abs(allowance) + 2.0 * comb.std_error;
        series.points.push_back({t, lhs.mean, lhs.std_error, lhs.n, rhs, pass});
        all = all && pass;
        margin = std::min(margin, allowance + 0.05 * std::abs(allowance) + 2.0 * comb.std_error - comb.mean);
    }
    out.result.verdict.name = "lyapunov";
    out.result.verdict.inequality = "E|X(t)|^2 <= |x|^2 - lambda_1 int_0^t E|X|^2 ds + K t";
    out.result.verdict.passed = all;
    out.result.verdict.margin = margin;
    out.result.verdict.detail = "gamma = lambda_1 = " + fmt(lambda1) + ", K = " + fmt(out.k_const);
    return out;
}

FellerResult feller_modulus_estimate(const ModelSpec& model, const StateVector& v, const StateVector& v_prime,
                                     const MonteCarloPlan& plan) {
    validate_plan(plan);
    require_in_ball(model, v, "v");
    require_in_ball(model, v_prime, "v'");
    FellerResult out;
    out.scales = {1.0, 0.1, 0.01};
    const double gap2 = diff_norm2(v.coeffs, v_prime.coeffs);
    for (double scale : out.scales) {
        StateVector vp = v;
        for (std::size_t i = 0; i < vp.size(); ++i) vp.coeffs[i] = v.coeffs[i] + scale * (v_prime.coeffs[i] - v.coeffs[i]);
        const auto rows = sample_coupled(model, v, vp, plan, false, [](const PairState& s) { return s.sup_h_w2; });
        auto series = aggregate(rows, plan.t_grid);
        const double g2 = gap2 * scale * scale;
        out.ratios.push_back(g2 > 0.0 ? series.points.back().mean / g2 : 0.0);
        if (scale == 1.0) {
            for (auto& p : series.points) {
                p.bound = g2 > 0.0 ? p.mean / g2 : 0.0;  // the ratio C_t
            }
            out.base.series = std::move(series);
        }
    }
    const auto [lo, hi] = std::minmax_element(out.ratios.begin(), out.ratios.end());
    out.base.verdict.name = "feller_modulus";
    out.base.verdict.inequality = "E[sup h(s)|X^v - X^v'|^2] <= C_t |v - v'|^2 with C_t stable over two decades";
    if (gap2 == 0.0) {
        out.base.verdict.passed = out.base.series.points.back().mean == 0.0;
        out.base.verdict.detail = "v = v'";
    } else {
        out.base.verdict.passed = *lo > 0.0 && *hi <= 4.0 * *lo;
        out.base.verdict.margin = 4.0 * *lo - *hi;
        out.base.verdict.detail = "ratios " + fmt(out.ratios[0]) + ", " + fmt(out.ratios[1]) + ", " + fmt(out.ratios[2]);
    }
    return out;
}

EstimateSeries coupled_distance_series(const ModelSpec& model, const StateVector& x, const StateVector& y,
                                       const MonteCarloPlan& plan, const DistanceParams& p) {
    validate_plan(plan);
    validate_distance(p);
    require_in_ball(model, x, "x");
    require_in_ball(model, y, "y");
    const auto rows = sample_coupled(model, x, y, plan, true,
                                     [&p](const PairState& s) { return d_distance(s.x, s.y, p); });
    auto series = aggregate(rows, plan.t_grid);
    for (auto& pt : series.points) {
        if (pt.t == 0.0) {
            pt.mean = d_distance(std::span<const double>(x.coeffs), std::span<const double>(y.coeffs), p);
            pt.std_error = 0.0;
        }
    }
    return series;
}

MeanStderr wasserstein_upper(const ModelSpec& model, const StateVector& x, const StateVector& y, double t,
                             const MonteCarloPlan& plan, const DistanceParams& p) {
    if (t == 0.0) {
        validate_distance(p);
        return {d_distance(x, y, p), 0.0, plan.n_paths};
    }
    MonteCarloPlan single = plan;
    single.t_grid = {t};
    const auto s = coupled_distance_series(model, x, y, single, p);
    return {s.points[0].mean, s.points[0].std_error, s.points[0].n_effective};
}

namespace {

std::vector<double> ball_point(std::size_t dim, CounterRng& rng, double max_radius) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    const double r = max_radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    const double n = h_norm(v);
    for (double& x : v) x *= r / n;
    return v;
}

}  // namespace

ContractionResult contraction_check(const ModelSpec& model, const MonteCarloPlan& plan, const DistanceParams& p,
                                    const std::vector<double>& t0_search_grid, std::size_t n_pairs) {
    validate_distance(p);
    MonteCarloPlan search = plan;
    search.t_grid = t0_search_grid;
    validate_plan(search);
    const std::size_t dim = model.basis.dim();
    const double exponent = 2.0 * p.delta / (1.0 + p.delta);
    CounterRng rng(plan.base_seed, 0xC0'0000ull);

    ContractionResult out;
    out.worst_ratio.assign(t0_search_grid.size(), 0.0);
    std::size_t pair_no = 0;
    while (out.pairs < n_pairs) {
        auto x = ball_point(dim, rng, 1.0);
        const double target = rng.uniform(0.2, 0.95);
        const double radius = std::pow(target / p.n_tilde, 1.0 / exponent);
        auto dir = ball_point(dim, rng, 1.0);
        const double dn = h_norm(dir);
        std::vector<double> y(dim);
        for (std::size_t i = 0; i < dim; ++i) y[i] = x[i] + std::min(radius, 1.0) * dir[i] / dn;
        project_ball_inplace(y);
        const double d0 = d_distance(std::span<const double>(x), std::span<const double>(y), p);
        if (!(d0 > 0.0 && d0 < 1.0)) continue;  // excluded: d = 0 or saturated

        MonteCarloPlan pair_plan = search;
        pair_plan.first_path = plan.first_path + pair_no * plan.n_paths;
        ++pair_no;
        const auto series = coupled_distance_series(model, StateVector::from(model.basis, x),
                                                    StateVector::from(model.basis, y), pair_plan, p);
        for (std::size_t j = 0; j < series.points.size(); ++j) {
            const auto& pt = series.points[j];
            out.worst_ratio[j] = std::max(out.worst_ratio[j], (pt.mean + 2.0 * pt.std_error) / d0);
        }
        ++out.pairs;
    }
    for (std::size_t j = 0; j < t0_search_grid.size(); ++j) {
        if (out.worst_ratio[j] <= 2.0 / 3.0) {
            out.found = true;
            out.t0 = t0_search_grid[j];
            out.alpha = out.worst_ratio[j];
            break;
        }
    }
    if (!out.found) {
        out.t0 = t0_search_grid.back();
        out.alpha = out.worst_ratio.back();
    }
    out.verdict.name = "contraction";
    out.verdict.inequality = "E d_N(X^x(t0), Y^y(t0)) <= (2/3) d_N(x, y) for sampled pairs with d_N < 1";
    out.verdict.passed = out.found;
    out.verdict.margin = 2.0 / 3.0 - out.alpha;
    out.verdict.detail = out.found ? "t0 = " + fmt(out.t0) + ", alpha = " + fmt(out.alpha)
                                   : "no t0 on the grid; ratio at largest t = " + fmt(out.alpha);
    return out;
}

DSmallResult d_small_check(const ModelSpec& model, const MonteCarloPlan& plan, const DistanceParams& p,
                           double level, double t, std::size_t n_pairs) {
    validate_distance(p);
    if (level < 0.0) throw ValidationError("d_small_check: level must be nonnegative");
    const std::size_t dim = model.basis.dim();
    const double radius = std::min(1.0, std::sqrt(level));
    CounterRng rng(plan.base_seed, 0xD5'0000ull);

    std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
    std::vector<double> a(dim, 0.0), b(dim, 0.0);
    a[0] = radius;
    b[0] = -radius;
    pairs.emplace_back(a, b);  // antipodal extreme
    if (dim > 1) {
        b.assign(dim, 0.0);
        b[1] = radius;
        pairs.emplace_back(a, b);
    }
    while (pairs.size() < n_pairs) pairs.emplace_back(ball_point(dim, rng, radius), ball_point(dim, rng, radius));
    pairs.resize(std::max<std::size_t>(n_pairs, 1));

    DSmallResult out;
    out.pairs = pairs.size();
    MonteCarloPlan pair_plan = plan;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        pair_plan.first_path = plan.first_path + i * plan.n_paths;
        const auto est = wasserstein_upper(model, StateVector::from(model.basis, pairs[i].first),
                                           StateVector::from(model.basis, pairs[i].second), t, pair_plan, p);
        out.max_upper = std::max(out.max_upper, est.mean + 2.0 * est.std_error);
    }
    out.epsilon = 1.0 - out.max_upper;
    out.verdict.name = "d_small";
    out.verdict.inequality = "sup_{x,y in {V <= M}} E d_N(X^x(t), Y^y(t)) <= 1 - epsilon, epsilon >= 0.05";
    out.verdict.passed = out.epsilon >= 0.05;
    out.verdict.margin = out.epsilon - 0.05;
    out.verdict.detail = "M = " + fmt(level) + ", t = " + fmt(t) + ", epsilon = " + fmt(out.epsilon);
    return out;
}

OccupationMeasure occupation_sampler(const ModelSpec& model, const StateVector& x, double t_burn, double t_avg,
                                     std::size_t thin, const StepperConfig& cfg, std::uint64_t seed,
                                     std::uint64_t path_index) {
    require_in_ball(model, x, "x");
    if (thin == 0) throw ValidationError("occupation_sampler: thin must be positive");
    const std::size_t burn = steps_for(t_burn, cfg.dt);
    const std::size_t avg = steps_for(t_avg, cfg.dt);
    const std::size_t dim = model.basis.dim();

    OccupationMeasure occ;
    ReflectedStepper stepper(model, cfg);
    std::vector<double> state = x.coeffs;
    double integral = 0.0, prev_v2 = v_norm_squared(model.basis, state);
    std::vector<double> energy_series;
    std::vector<std::vector<double>> mode_sq(dim);
    run_path(stepper, state, burn + avg, seed, path_index,
             [&](std::size_t k, std::span<const double> s, std::span<const double>) {
                 const double v2 = v_norm_squared(model.basis, s);
                 integral += 0.5 * cfg.dt * (prev_v2 + v2);
                 prev_v2 = v2;
                 if (k > burn && (k - burn) % thin == 0) {
                     occ.samples.emplace_back(s.begin(), s.end());
                     energy_series.push_back(h_inner(s, s));
                     for (std::size_t i = 0; i < dim; ++i) mode_sq[i].push_back(s[i] * s[i]);
                 }
             });
    const std::size_t n = occ.samples.size();
    occ.weights.assign(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
    occ.mean.assign(dim, 0.0);
    occ.second_moment.assign(dim, 0.0);
    occ.second_moment_stderr.assign(dim, 0.0);
    const std::size_t batches = std::min<std::size_t>(20, n);
    for (std::size_t i = 0; i < dim && n > 0; ++i) {
        std::vector<double> c(n);
        for (std::size_t j = 0; j < n; ++j) c[j] = occ.samples[j][i];
        occ.mean[i] = pairwise_sum(c) / static_cast<double>(n);
        const auto bm = batch_means(mode_sq[i], batches);
        occ.second_moment[i] = bm.mean;
        occ.second_moment_stderr[i] = bm.std_error;
    }
    occ.energy = batch_means(energy_series, batches);
    const double total_t = static_cast<double>(burn + avg) * cfg.dt;
    occ.time_avg_v2 = total_t > 0.0 ? integral / total_t : 0.0;
    occ.time_avg_v2_bound = (total_t > 0.0 ? h_inner(x.coeffs, x.coeffs) / total_t : 0.0) +
                            2.0 * (model.f0_vstar * model.f0_vstar + model.sigma0_hs * model.sigma0_hs +
                                   2.0 * model.lipschitz_c1);
    return occ;
}

std::vector<TestFunction> default_test_functions(std::size_t dim, std::size_t count) {
    std::vector<TestFunction> out;
    out.push_back({"energy_min_0.5", [](std::span<const double> x) { return std::min(h_inner(x, x), 0.5); }});
    out.push_back({"energy_min_0.05", [](std::span<const double> x) { return std::min(h_inner(x, x), 0.05); }});
    constexpr double omega = 8.0;
    for (std::size_t m = 0; out.size() < count; ++m) {
        const std::size_t mode = m % dim;
        out.push_back({"sin_mode_" + std::to_string(mode + 1),
                       [mode](std::span<const double> x) { return std::sin(omega * x[mode]); }});
        if (out.size() < count) {
            out.push_back({"cos_mode_" + std::to_string(mode + 1),
                           [mode](std::span<const double> x) { return std::cos(omega * x[mode]); }});
        }
    }
    out.resize(count);
    return out;
}

std::vector<InvarianceResidual> invariance_residual(const ModelSpec& model, const OccupationMeasure& occ,
                                                    double horizon, const std::vector<TestFunction>& tests,
                                                    const MonteCarloPlan& plan) {
    validate_stepper(plan.stepper);
    const std::size_t steps = steps_for(horizon, plan.stepper.dt);
    const auto ends = parallel_map(occ.samples.size(), plan.workers, [&](std::size_t j) {
        ReflectedStepper stepper(model, plan.stepper);
        std::vector<double> state = occ.samples[j];
        run_path(stepper, state, steps, plan.base_seed, plan.first_path + j,
                 [](std::size_t, std::span<const double>, std::span<const double>) {});
        return state;
    });
    std::vector<InvarianceResidual> out;
    for (const auto& tf : tests) {
        std::vector<double> diff(occ.samples.size());
        for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = tf.fn(ends[j]) - tf.fn(occ.samples[j]);
        const auto ms = mean_stderr(diff);
        out.push_back({tf.name, ms.mean, ms.std_error, std::abs(ms.mean) <= 3.0 * ms.std_error});
    }
    return out;
}

std::vector<InvarianceResidual> invariance_residual(const ModelSpec& model, const OccupationMeasure& occ,
                                                    double horizon, std::size_t n_test_fns,
                                                    const MonteCarloPlan& plan) {
    return invariance_residual(model, occ, horizon, default_test_functions(model.basis.dim(), n_test_fns), plan);
}

RateFit fit_exponential_rate(const EstimateSeries& series) {
    std::vector<double> t, logm;
    RateFit fit;
    for (const auto& p : series.points) {
        if (p.mean > 0.0 && std::isfinite(p.mean)) {
            t.push_back(p.t);
            logm.push_back(std::log(p.mean));
        } else {
            ++fit.dropped_points;
        }
    }
    if (t.size() < 3) throw ValidationError("fit_exponential_rate: fewer than 3 usable points");
    const auto line = fit_line(t, logm);
    fit.rate = -line.slope;
    fit.constant = std::exp(line.intercept);
    fit.r_squared = line.r_squared;
    fit.used_points = t.size();
    return fit;
}

double combined_exponent(const ModelSpec& model, double delta) {
    const double f2 = model.f0_vstar * model.f0_vstar;
    const double s2 = model.sigma0_hs * model.sigma0_hs;
    const double lambda_next = model.basis.lambda_next(model.coupling_n);
    return 8.0 * delta * f2 + (8.0 * delta + 64.0 * delta * delta) * s2 +
           (64.0 * delta * delta + 12.0 * delta) * model.lipschitz_c1 - 0.75 * delta * lambda_next;
}

DeltaChoice select_delta(const ModelSpec& model) {
    DeltaChoice best{0.05, combined_exponent(model, 0.05)};
    for (int i = 2; i <= 19; ++i) {
        const double delta = 0.05 * i;
        const double e = combined_exponent(model, delta);
        if (e < best.exponent) best = {delta, e};
    }
    return best;
}

bool ErgodicityReport::all_passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

void write_report_text(const ErgodicityReport& report, std::ostream& os) {
    os << "ergodicity report\n";
    os << "h1_passed: " << (report.h1_passed ? "yes" : "no") << '\n';
    os << "distance: n_tilde=" << fmt(report.distance.n_tilde) << " delta=" << fmt(report.distance.delta) << '\n';
    os << "lyapunov: gamma=" << fmt(report.lyapunov_gamma) << " K=" << fmt(report.lyapunov_k) << '\n';
    os << "fitted rate: r=" << fmt(report.fit.rate) << " C=" << fmt(report.fit.constant)
       << " r_squared=" << fmt(report.fit.r_squared) << '\n';
    os << "contraction t0=" << fmt(report.t0) << " d-small epsilon=" << fmt(report.epsilon) << '\n';
    os << "mean girsanov shift cost=" << fmt(report.mean_shift_cost) << '\n';
    for (const auto& v : report.verdicts) {
        os << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.inequality << " | " << v.detail << '\n';
    }
    if (!report.notes.empty()) os << "notes: " << report.notes << '\n';
}

}  // namespace seelab
