#include "seelab/reflection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace seelab {

void validate_stepper(const StepperConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ValidationError("stepper dt must be positive");
    if (cfg.scheme == Scheme::penalized && !(cfg.penalty_n > 0.0)) {
        throw ValidationError("penalized scheme needs penalty_n > 0");
    }
}

std::string to_string(Scheme scheme) { return scheme == Scheme::projected ? "projected" : "penalized"; }

std::size_t steps_for(double horizon, double dt) {
    if (horizon < 0.0) throw ValidationError("time horizon must be nonnegative");
    const double ratio = horizon / dt;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
        throw ValidationError("time " + std::to_string(horizon) + " is not a multiple of dt");
    }
    return static_cast<std::size_t>(n);
}

bool project_ball_inplace(std::span<double> y) {
    const double r = h_norm(y);
    if (r <= 1.0) return false;
    for (double& v : y) v /= r;
    // Rounding can leave the computed norm a few ulp above 1.
    double shrink = 1.0;
    while (h_norm(y) > 1.0) {
        shrink = std::nextafter(shrink, 0.0);
        for (double& v : y) v *= shrink;
    }
    return true;
}

StateVector project_ball(const StateVector& y) {
    StateVector out = y;
    project_ball_inplace(out.coeffs);
    return out;
}

void penalize_inplace(std::span<double> z, double dt_n) {
    const double r = h_norm(z);
    if (r <= 1.0) return;
    const double factor = (r + dt_n) / ((1.0 + dt_n) * r);
    for (double& v : z) v *= factor;
}

ReflectedStepper::ReflectedStepper(const ModelSpec& model, const StepperConfig& cfg)
    : model_(&model),
      cfg_(cfg),
      noise_dim_(model.noise.noise_dim(model.basis.dim())),
      drift_(model.basis.dim()),
      bilinear_(model.basis.dim()),
      noise_(model.basis.dim()),
      pre_(model.basis.dim()) {
    validate_stepper(cfg);
}

void ReflectedStepper::free_step(std::span<const double> state, std::span<const double> dw, std::span<double> out,
                                 std::span<const double> extra_drift) {
    const ModelSpec& m = *model_;
    const std::size_t dim = state.size();
    const double dt = cfg_.dt;
    const auto lambda = m.basis.eigenvalues();

    m.drift.apply(state, drift_);
    const bool has_b = !m.bilinear.entries.empty();
    if (has_b) m.bilinear.apply(state, state, bilinear_);

    if (m.noise.kind == NoiseKind::diag_affine) {
        const double g = m.noise.modulation(h_norm(state));
        for (std::size_t i = 0; i < dim; ++i) noise_[i] = m.noise.amplitudes[i] * g * dw[i];
    } else {
        const std::size_t k = m.noise.columns;
        for (std::size_t i = 0; i < dim; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) s += m.noise.matrix[i * k + j] * dw[j];
            noise_[i] = s;
        }
    }

    const double gamma = m.damping_gamma;
    const double sign = m.bilinear.sign;
    for (std::size_t i = 0; i < dim; ++i) {
        double explicit_drift = drift_[i] - gamma * state[i];
        if (has_b) explicit_drift += sign * bilinear_[i];
        if (!extra_drift.empty()) explicit_drift += extra_drift[i];
        out[i] = (state[i] + dt * explicit_drift + noise_[i]) / (1.0 + dt * lambda[i]);
    }
}

bool ReflectedStepper::advance(std::span<double> state, std::span<const double> dw, std::span<double> dl,
                               std::span<const double> extra_drift) {
    free_step(state, dw, pre_, extra_drift);
    for (double v : pre_) {
        if (!std::isfinite(v)) throw SimulationError("non-finite state after semi-implicit update");
    }
    std::copy(pre_.begin(), pre_.end(), state.begin());
    bool active;
    if (cfg_.scheme == Scheme::projected) {
        active = project_ball_inplace(state);
    } else {
        active = h_norm(state) > 1.0;
        penalize_inplace(state, cfg_.dt * cfg_.penalty_n);
    }
    for (std::size_t i = 0; i < state.size(); ++i) dl[i] = active ? state[i] - pre_[i] : 0.0;
    return active;
}

ProjectedStep step_projected(const ModelSpec& model, const StateVector& state, const StepperConfig& cfg,
                             std::span<const double> noise) {
    require_in_basis(model.basis, state);
    StepperConfig c = cfg;
    c.scheme = Scheme::projected;
    ReflectedStepper stepper(model, c);
    if (noise.size() != stepper.noise_dim()) throw ValidationError("noise increment has wrong dimension");
    ProjectedStep out{state, StateVector::zeros(model.basis)};
    stepper.advance(out.state.coeffs, noise, out.dl.coeffs);
    return out;
}

StateVector step_penalized(const ModelSpec& model, const StateVector& state, const StepperConfig& cfg,
                           std::span<const double> noise) {
    require_in_basis(model.basis, state);
    StepperConfig c = cfg;
    c.scheme = Scheme::penalized;
    ReflectedStepper stepper(model, c);
    if (noise.size() != stepper.noise_dim()) throw ValidationError("noise increment has wrong dimension");
    StateVector out = state;
    std::vector<double> dl(model.basis.dim());
    stepper.advance(out.coeffs, noise, dl);
    return out;
}

std::vector<double> LocalTimeLedger::increment(std::size_t step, std::size_t dim) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), step,
                               [](const LedgerEntry& e, std::size_t s) { return e.step < s; });
    if (it != entries.end() && it->step == step) return it->dl;
    return std::vector<double>(dim, 0.0);
}

void check_initial_state(const StateVector& x0, const char* what) {
    if (h_norm(x0) > 1.0 + kBallTolerance) {
        throw ValidationError(std::string(what) + " lies outside the closed unit ball");
    }
}

PathSample simulate_path(const ModelSpec& model, const StateVector& x0, double horizon, const StepperConfig& cfg,
                         std::uint64_t seed, std::uint64_t path_index) {
    require_in_basis(model.basis, x0);
    check_initial_state(x0, "initial state");
    validate_stepper(cfg);
    const std::size_t steps = steps_for(horizon, cfg.dt);

    PathSample path;
    path.model_name = model.name;
    path.noise_seed = seed;
    path.path_index = path_index;
    path.ledger.steps = steps;
    path.times.reserve(steps + 1);
    path.states.reserve(steps + 1);
    path.times.push_back(0.0);
    path.states.push_back(x0);

    ReflectedStepper stepper(model, cfg);
    std::vector<double> state = x0.coeffs;
    try {
        run_path(stepper, state, steps, seed, path_index,
                 [&](std::size_t k, std::span<const double> x, std::span<const double> dl) {
                     path.times.push_back(static_cast<double>(k) * cfg.dt);
                     path.states.push_back(StateVector{{x.begin(), x.end()}, model.basis.id()});
                     const double dln = h_norm(dl);
                     if (dln > 0.0) {
                         path.ledger.entries.push_back({k - 1, {dl.begin(), dl.end()}});
                         path.ledger.total_variation += dln;
                     }
                 });
    } catch (const SimulationError& e) {
        throw SimulationError(std::string(e.what()) + " (seed " + std::to_string(seed) + ", path " +
                              std::to_string(path_index) + ", step " + std::to_string(path.states.size() - 1) + ")");
    }
    return path;
}

namespace {
void put_double(std::ostream& os, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}
}  // namespace

void write_path_csv(const PathSample& path, std::ostream& os) {
    const std::size_t dim = path.states.empty() ? 0 : path.states.front().size();
    os << "t";
    for (std::size_t i = 0; i < dim; ++i) os << ",mode_" << (i + 1);
    os << ",dl_norm\n";
    std::size_t next_entry = 0;
    for (std::size_t k = 0; k < path.states.size(); ++k) {
        put_double(os, path.times[k]);
        for (double v : path.states[k].coeffs) {
            os << ',';
            put_double(os, v);
        }
        double dln = 0.0;
        if (k > 0 && next_entry < path.ledger.entries.size() && path.ledger.entries[next_entry].step == k - 1) {
            dln = h_norm(path.ledger.entries[next_entry].dl);
            ++next_entry;
        }
        os << ',';
        put_double(os, dln);
        os << '\n';
    }
}

std::string path_csv_name(std::uint64_t seed, std::uint64_t path_index) {
    return "path_" + std::to_string(seed) + "_" + std::to_string(path_index) + ".csv";
}

double obstacle_sum(const PathSample& path, std::span<const StateVector> phi) {
    double sum = 0.0;
    for (const auto& e : path.ledger.entries) {
        const auto& next = path.states[e.step + 1].coeffs;
        const auto& p = phi[e.step].coeffs;
        for (std::size_t i = 0; i < next.size(); ++i) sum += (p[i] - next[i]) * e.dl[i];
    }
    return sum;
}

namespace {

// Angle between a and b without acos cancellation near zero.
double angle_between(std::span<const double> a, std::span<const double> b) {
    const double nb = h_norm(b);
    const double na = h_norm(a);
    if (na == 0.0 || nb == 0.0) return 0.0;
    const double along = h_inner(a, b) / nb;
    double perp2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double p = a[i] - along * b[i] / nb;
        perp2 += p * p;
    }
    return std::atan2(std::sqrt(perp2), along);
}

std::vector<double> random_ball_point(std::size_t dim, CounterRng& rng) {
    std::vector<double> v(dim);
    for (double& x : v) x = rng.normal();
    const double r = std::pow(rng.uniform(), 1.0 / static_cast<double>(dim));
    const double n = h_norm(v);
    for (double& x : v) x *= r / n;
    return v;
}

}  // namespace

ObstacleReport discrete_obstacle_inequality(const PathSample& path, std::size_t trials, std::uint64_t seed) {
    ObstacleReport report;
    report.tolerance = 1e-10 * path.ledger.total_variation;
    const std::size_t dim = path.states.empty() ? 0 : path.states.front().size();
    const std::size_t steps = path.ledger.steps;

    for (const auto& e : path.ledger.entries) {
        const auto& next = path.states[e.step + 1].coeffs;
        std::vector<double> inward(next.size());
        for (std::size_t i = 0; i < next.size(); ++i) inward[i] = -next[i];
        report.max_angle = std::max(report.max_angle, angle_between(e.dl, inward));
        report.max_contact_defect = std::max(report.max_contact_defect, std::abs(h_norm(next) - 1.0));
    }
    report.direction_ok = report.max_angle <= 1e-8 && report.max_contact_defect <= kBallTolerance;

    CounterRng rng(seed, path.path_index);
    report.sums.reserve(trials);
    for (std::size_t t = 0; t < trials; ++t) {
        // Piecewise-constant phi with a random number of pieces.
        const std::size_t pieces = 1 + rng.below(8);
        std::vector<std::size_t> breaks{0};
        for (std::size_t p = 1; p < pieces; ++p) breaks.push_back(steps == 0 ? 0 : rng.below(steps + 1));
        std::sort(breaks.begin(), breaks.end());
        std::vector<std::vector<double>> values;
        for (std::size_t p = 0; p < pieces; ++p) values.push_back(random_ball_point(dim, rng));

        double sum = 0.0;
        for (const auto& e : path.ledger.entries) {
            const std::size_t piece =
                static_cast<std::size_t>(std::upper_bound(breaks.begin(), breaks.end(), e.step) - breaks.begin()) - 1;
            const auto& phi = values[piece];
            const auto& next = path.states[e.step + 1].coeffs;
            for (std::size_t i = 0; i < dim; ++i) sum += (phi[i] - next[i]) * e.dl[i];
        }
        report.sums.push_back(sum);
    }
    report.min_sum = report.sums.empty() ? 0.0 : *std::min_element(report.sums.begin(), report.sums.end());
    report.passed = report.sums.empty() || report.min_sum >= -report.tolerance;
    return report;
}

ConvergenceTable penalization_convergence_study(const ModelSpec& model, const StateVector& x0, double horizon,
                                                double dt, const std::vector<double>& n_list, std::uint64_t seed,
                                                std::uint64_t path_index) {
    require_in_basis(model.basis, x0);
    check_initial_state(x0, "initial state");
    const std::size_t steps = steps_for(horizon, dt);

    StepperConfig proj_cfg{dt, Scheme::projected, 1.0};
    ReflectedStepper projected(model, proj_cfg);
    std::vector<std::vector<double>> reference;
    reference.reserve(steps);
    std::vector<double> state = x0.coeffs;
    run_path(projected, state, steps, seed, path_index,
             [&](std::size_t, std::span<const double> x, std::span<const double>) {
                 reference.emplace_back(x.begin(), x.end());
             });

    ConvergenceTable table;
    std::vector<double> diff(model.basis.dim());
    for (double n : n_list) {
        ReflectedStepper penalized(model, StepperConfig{dt, Scheme::penalized, n});
        ConvergenceRow row;
        row.penalty_n = n;
        state = x0.coeffs;
        run_path(penalized, state, steps, seed, path_index,
                 [&](std::size_t k, std::span<const double> x, std::span<const double>) {
                     const auto& ref = reference[k - 1];
                     for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = x[i] - ref[i];
                     row.sup_gap = std::max(row.sup_gap, h_norm(diff));
                     row.max_excess = std::max(row.max_excess, h_norm(x) - 1.0);
                 });
        table.rows.push_back(row);
    }
    table.nonincreasing = true;
    table.strictly_decreasing = true;
    table.min_decade_factor = table.rows.size() > 1 ? INFINITY : 0.0;
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const auto& a = table.rows[r - 1];
        const auto& b = table.rows[r];
        if (b.sup_gap > a.sup_gap) table.nonincreasing = false;
        if (!(b.sup_gap < a.sup_gap)) table.strictly_decreasing = false;
        const double decades = std::log10(b.penalty_n / a.penalty_n);
        if (decades > 0.0 && b.sup_gap > 0.0) {
            table.min_decade_factor = std::min(table.min_decade_factor, std::pow(a.sup_gap / b.sup_gap, 1.0 / decades));
        } else if (b.sup_gap == 0.0 && a.sup_gap == 0.0) {
            table.min_decade_factor = std::min(table.min_decade_factor, 1.0);
        }
    }
    return table;
}

}  // namespace seelab
