#include "seelab/coupling.hpp"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <ostream>
#include <tuple>

#include "seelab/h1_condition.hpp"

namespace seelab {

void validate_distance(const DistanceParams& p) {
    if (!(p.delta > 0.0 && p.delta < 1.0)) throw ValidationError("distance delta must lie in (0,1)");
    if (!(p.n_tilde > 0.0)) throw ValidationError("distance n_tilde must be positive");
}

double d_distance(std::span<const double> x, std::span<const double> y, const DistanceParams& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    if (s == 0.0) return 0.0;
    // |x-y|^(2 delta/(1+delta)) = (|x-y|^2)^(delta/(1+delta))
    return std::min(1.0, p.n_tilde * std::pow(s, p.delta / (1.0 + p.delta)));
}

double d_distance(const StateVector& x, const StateVector& y, const DistanceParams& p) {
    if (x.size() != y.size()) throw ValidationError("d_distance: dimension mismatch");
    return d_distance(std::span<const double>(x.coeffs), std::span<const double>(y.coeffs), p);
}

void girsanov_shift_into(const ModelSpec& model, std::span<const double> x, std::span<const double> y,
                         std::span<double> out) {
    const std::size_t n = model.coupling_n;
    const double half_gap = 0.5 * model.basis.lambda_next(n);
    std::fill(out.begin(), out.end(), 0.0);
    if (model.noise.kind == NoiseKind::diag_affine) {
        const double g = model.noise.modulation(h_norm(y));
        for (std::size_t i = 0; i < n; ++i) out[i] = half_gap * (x[i] - y[i]) / (model.noise.amplitudes[i] * g);
        return;
    }
    if (!model.noise.pseudo_inverse) {
        throw ValidationError("girsanov_shift: noise map provides no pseudo-inverse on the low modes");
    }
    std::vector<double> target(x.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) target[i] = half_gap * (x[i] - y[i]);
    model.noise.pseudo_inverse(y, target, out);
}

std::vector<double> girsanov_shift(const ModelSpec& model, const StateVector& x, const StateVector& y) {
    require_in_basis(model.basis, x);
    require_in_basis(model.basis, y);
    std::vector<double> out(model.noise.noise_dim(model.basis.dim()));
    girsanov_shift_into(model, x.coeffs, y.coeffs, out);
    return out;
}

double shift_bound_constant(const ModelSpec& model) {
    if (model.noise.kind != NoiseKind::diag_affine || !(model.noise.c_min > 0.0)) {
        throw ValidationError("shift bound requires diag_affine noise with c_min > 0");
    }
    return model.basis.lambda_next(model.coupling_n) / (2.0 * model.noise.c_min * model.noise.modulation.lo);
}

CoupledStepper::CoupledStepper(const ModelSpec& model, const StepperConfig& cfg, bool correction)
    : model_(&model),
      x_(model, cfg),
      y_(model, cfg),
      correction_(correction),
      half_gap_(0.5 * model.basis.lambda_next(model.coupling_n)),
      extra_(model.basis.dim(), 0.0) {}

void CoupledStepper::advance(std::span<double> x, std::span<double> y, std::span<const double> dw,
                             std::span<double> dlx, std::span<double> dly) {
    if (correction_) {
        for (std::size_t i = 0; i < model_->coupling_n; ++i) extra_[i] = half_gap_ * (x[i] - y[i]);
    }
    // Y reads X's pre-step value, so it is advanced first.
    if (correction_) {
        y_.advance(y, dw, dly, extra_);
    } else {
        y_.advance(y, dw, dly);
    }
    x_.advance(x, dw, dlx);
}

CoupledPath simulate_coupled(const ModelSpec& model, const StateVector& x, const StateVector& y, double horizon,
                             const StepperConfig& cfg, std::uint64_t seed, std::uint64_t path_index) {
    require_in_basis(model.basis, x);
    require_in_basis(model.basis, y);
    check_initial_state(x, "coupled start x");
    check_initial_state(y, "coupled start y");
    const std::size_t steps = steps_for(horizon, cfg.dt);

    CoupledPath out;
    const auto h1 = validate_h1(model, model.coupling_n);
    out.h1_passed = h1.passed;
    if (!h1.passed) {
        out.warning = "H.1 fails: lambda_{N+1}=" + std::to_string(h1.lambda_next) +
                      " <= threshold " + std::to_string(h1.threshold);
    }
    for (PathSample* p : {&out.x_path, &out.y_path}) {
        p->model_name = model.name;
        p->noise_seed = seed;
        p->path_index = path_index;
        p->ledger.steps = steps;
        p->times.push_back(0.0);
    }
    out.x_path.states.push_back(x);
    out.y_path.states.push_back(y);

    const std::size_t k_dim = model.noise.noise_dim(model.basis.dim());
    std::vector<double> beta(k_dim);
    auto record_shift = [&](std::span<const double> xs, std::span<const double> ys) {
        girsanov_shift_into(model, xs, ys, beta);
        out.shift_record.push_back(beta);
    };
    record_shift(x.coeffs, y.coeffs);
    out.shift_cost_cumulative.push_back(0.0);

    CoupledStepper stepper(model, cfg, true);
    std::vector<double> xs = x.coeffs, ys = y.coeffs;
    std::vector<double> dw(k_dim), dlx(model.basis.dim()), dly(model.basis.dim());
    for (std::size_t k = 0; k < steps; ++k) {
        gaussian_increments(seed, path_index, k, cfg.dt, dw);
        try {
            stepper.advance(xs, ys, dw, dlx, dly);
        } catch (const SimulationError& e) {
            throw SimulationError(std::string(e.what()) + " (coupled path " + std::to_string(path_index) +
                                  ", step " + std::to_string(k) + ")");
        }
        const double t = static_cast<double>(k + 1) * cfg.dt;
        for (auto [p, s, dl] : {std::tuple{&out.x_path, &xs, &dlx}, std::tuple{&out.y_path, &ys, &dly}}) {
            p->times.push_back(t);
            p->states.push_back(StateVector{*s, model.basis.id()});
            const double n = h_norm(*dl);
            if (n > 0.0) {
                p->ledger.entries.push_back({k, *dl});
                p->ledger.total_variation += n;
            }
        }
        const double prev = h_inner(out.shift_record.back(), out.shift_record.back());
        record_shift(xs, ys);
        const double cur = h_inner(beta, beta);
        out.shift_cost_cumulative.push_back(out.shift_cost_cumulative.back() + 0.5 * cfg.dt * (prev + cur));
    }
    out.shift_cost = out.shift_cost_cumulative.back();
    return out;
}

void write_coupled_csv(const CoupledPath& path, const DistanceParams& p, std::ostream& os) {
    os << "t,|x-y|_H,d_N,shift_cost_cum\n";
    std::vector<double> diff;
    char buf[128];
    for (std::size_t k = 0; k < path.x_path.states.size(); ++k) {
        const auto& x = path.x_path.states[k].coeffs;
        const auto& y = path.y_path.states[k].coeffs;
        diff.resize(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) diff[i] = x[i] - y[i];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", path.x_path.times[k], h_norm(diff),
                      d_distance(std::span<const double>(x), std::span<const double>(y), p),
                      path.shift_cost_cumulative[k]);
        os << buf;
    }
}

std::string coupled_csv_name(std::uint64_t seed, std::uint64_t path_index) {
    return "coupled_" + std::to_string(seed) + "_" + std::to_string(path_index) + ".csv";
}

}  // namespace seelab
