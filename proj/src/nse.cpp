#include "seelab/nse.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <set>
#include <tuple>

#include "seelab/coupling.hpp"
#include "seelab/parallel.hpp"
#include "seelab/reflection.hpp"

namespace seelab {
namespace {

using cplx = std::complex<double>;

// Coefficient of exp(i s theta) in cos(theta) or sin(theta), s = +-1.
cplx trig_coeff(bool cosine, int s) {
    return cosine ? cplx(0.5, 0.0) : cplx(0.0, -0.5 * s);
}

// int over [0,2pi]^2 of T_a(k.x) T_b(l.x) T_c(m.x).
double triple_integral(const FourierMode& a, bool ca, const FourierMode& b, bool cb, const FourierMode& c,
                       bool cc) {
    cplx sum = 0.0;
    for (int s1 : {-1, 1}) {
        for (int s2 : {-1, 1}) {
            for (int s3 : {-1, 1}) {
                if (s1 * a.k1 + s2 * b.k1 + s3 * c.k1 != 0 || s1 * a.k2 + s2 * b.k2 + s3 * c.k2 != 0) continue;
                sum += trig_coeff(ca, s1) * trig_coeff(cb, s2) * trig_coeff(cc, s3);
            }
        }
    }
    constexpr double area = 4.0 * std::numbers::pi * std::numbers::pi;
    return area * sum.real();
}

bool can_interact(const FourierMode& a, const FourierMode& b, const FourierMode& c) {
    for (int s2 : {-1, 1}) {
        for (int s3 : {-1, 1}) {
            if (a.k1 + s2 * b.k1 + s3 * c.k1 == 0 && a.k2 + s2 * b.k2 + s3 * c.k2 == 0) return true;
        }
    }
    return false;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

FourierGrid build_fourier_grid(int kappa) {
    if (kappa < 1) throw ValidationError("nse kappa must be >= 1");
    FourierGrid grid;
    grid.max_wavenumber = kappa;
    for (int k1 = 0; k1 <= kappa; ++k1) {
        for (int k2 = -kappa; k2 <= kappa; ++k2) {
            if ((k1 == 0 && k2 <= 0) || k1 * k1 + k2 * k2 > kappa * kappa) continue;
            grid.modes.push_back({k1, k2, true});
            grid.modes.push_back({k1, k2, false});
        }
    }
    std::sort(grid.modes.begin(), grid.modes.end(), [](const FourierMode& a, const FourierMode& b) {
        return std::make_tuple(a.norm2(), a.k1, a.k2, !a.cosine) < std::make_tuple(b.norm2(), b.k1, b.k2, !b.cosine);
    });
    return grid;
}

bool divergence_free_structure(const FourierGrid& grid) {
    std::set<std::tuple<int, int, bool>> seen;
    for (const auto& m : grid.modes) {
        if (m.k1 == 0 && m.k2 == 0) return false;
        if (m.k1 < 0 || (m.k1 == 0 && m.k2 < 0)) return false;
        if (m.norm2() > grid.max_wavenumber * grid.max_wavenumber) return false;
        // k . (-k2, k1)
        if (m.k1 * -m.k2 + m.k2 * m.k1 != 0) return false;
        if (!seen.emplace(m.k1, m.k2, m.cosine).second) return false;
    }
    return true;
}

double nse_mode_coefficient(const FourierGrid& grid, std::size_t p, std::size_t q, std::size_t r) {
    const auto& a = grid.modes.at(p);
    const auto& b = grid.modes.at(q);
    const auto& c = grid.modes.at(r);
    if (!can_interact(a, b, c)) return 0.0;
    const double na = std::sqrt(static_cast<double>(a.norm2()));
    const double nb = std::sqrt(static_cast<double>(b.norm2()));
    const double nc = std::sqrt(static_cast<double>(c.norm2()));
    // e_a . l_b and e_b . e_c with e = (-k2, k1)/|k|
    const double ea_dot_l = (-a.k2 * b.k1 + a.k1 * b.k2) / na;
    const double eb_dot_ec = static_cast<double>(b.k2 * c.k2 + b.k1 * c.k1) / (nb * nc);
    if (ea_dot_l == 0.0 || eb_dot_ec == 0.0) return 0.0;
    // d/dtheta cos = -sin, d/dtheta sin = cos
    const double dsign = b.cosine ? -1.0 : 1.0;
    const double integral = triple_integral(a, a.cosine, b, !b.cosine, c, c.cosine);
    const double n = 1.0 / (std::numbers::sqrt2 * std::numbers::pi);
    return n * n * n * ea_dot_l * eb_dot_ec * dsign * integral;
}

NseModel build_nse_model(const NseParams& params) {
    if (!(params.gamma >= 0.0)) throw ValidationError("nse gamma must be >= 0");
    if (params.noise_amplitude < 0.0) throw ValidationError("nse noise_amplitude must be >= 0");
    auto grid = build_fourier_grid(params.kappa);
    const std::size_t m = grid.size();
    if (params.forcing.size() > m) {
        throw ValidationError("nse forcing has " + std::to_string(params.forcing.size()) + " entries but only " +
                              std::to_string(m) + " modes");
    }
    std::vector<double> lambda(m);
    for (std::size_t i = 0; i < m; ++i) lambda[i] = grid.modes[i].norm2();

    std::vector<double> forcing(m, 0.0);
    std::copy(params.forcing.begin(), params.forcing.end(), forcing.begin());

    BilinearForm form;
    form.kind = BilinearKind::nse_convective;
    form.sign = -1.0;
    for (std::size_t p = 0; p < m; ++p) {
        for (std::size_t q = 0; q < m; ++q) {
            for (std::size_t r = q + 1; r < m; ++r) {
                if (!can_interact(grid.modes[p], grid.modes[q], grid.modes[r])) continue;
                const double c = 0.5 * (nse_mode_coefficient(grid, p, q, r) - nse_mode_coefficient(grid, p, r, q));
                if (c != 0.0) {
                    form.entries.push_back({static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(q),
                                            static_cast<std::uint32_t>(r), c});
                }
            }
        }
    }

    DriftMap drift;
    drift.kind = DriftKind::affine;
    drift.rates.assign(m, 0.0);
    drift.offset = forcing;

    NoiseMap noise;
    noise.kind = NoiseKind::diag_affine;
    noise.modulation = params.modulation;
    noise.amplitudes.resize(m);
    for (std::size_t i = 0; i < m; ++i) noise.amplitudes[i] = params.noise_amplitude * std::pow(lambda[i], -params.noise_decay);
    noise.c_min = params.coupling_n > 0 && params.coupling_n <= m ? noise.amplitudes[params.coupling_n - 1] : 0.0;

    ModelSpec spec{"nse_kappa" + std::to_string(params.kappa), build_basis(lambda), drift, form, noise};
    spec.damping_gamma = params.gamma;
    spec.coupling_n = params.coupling_n;
    spec.f0_vstar = compute_f0_vstar(spec);
    spec.sigma0_hs = compute_sigma0_hs(spec);
    spec.lipschitz_c1 = analytic_c1(spec).value_or(0.0);
    validate_model(spec);
    return NseModel{std::move(grid), params.gamma, std::move(forcing), std::move(spec)};
}

double nse_trilinear(const NseModel& model, std::span<const double> u, std::span<const double> v,
                     std::span<const double> w) {
    const std::size_t m = model.grid.size();
    if (u.size() != m || v.size() != m || w.size() != m) {
        throw ValidationError("nse_trilinear: expected " + std::to_string(m) + " coefficients");
    }
    return model.spec.bilinear.trilinear(u, v, w);
}

NseExperiment parse_nse_experiment(const std::string& name) {
    if (name == "verify-model") return NseExperiment::verify_model;
    if (name == "simulate") return NseExperiment::simulate;
    if (name == "ergodicity") return NseExperiment::ergodicity;
    throw ValidationError("unknown nse experiment '" + name + "' (expected verify-model, simulate or ergodicity)");
}

std::string to_string(NseExperiment kind) {
    switch (kind) {
        case NseExperiment::verify_model: return "verify-model";
        case NseExperiment::simulate: return "simulate";
        case NseExperiment::ergodicity: return "ergodicity";
    }
    return "?";
}

bool NseReport::all_passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

NseReport run_nse_experiment(const NseModel& model, NseExperiment kind, const MonteCarloPlan& plan,
                             const DistanceParams& distance, const StateVector& x0) {
    const auto& spec = model.spec;
    NseReport report;
    report.kind = kind;
    report.h1_generic = validate_h1(spec, spec.coupling_n, H1Variant::generic);
    report.h1_nse = validate_h1(spec, spec.coupling_n, H1Variant::nse);
    report.notes = "H.1 generic threshold " + fmt(report.h1_generic.threshold) +
                   (report.h1_generic.passed ? " (holds)" : " (violated)") + ", nse threshold " +
                   fmt(report.h1_nse.threshold) + (report.h1_nse.passed ? " (holds)" : " (violated)") +
                   ", lambda_{N+1} = " + fmt(report.h1_nse.lambda_next);

    const bool structure = divergence_free_structure(model.grid) && spec.basis.dim() == model.grid.size();
    report.verdicts.push_back({"divergence_free", "every mode direction is orthogonal to its wave vector", structure,
                               structure ? 0.0 : -1.0, std::to_string(model.grid.size()) + " modes"});

    switch (kind) {
        case NseExperiment::verify_model: {
            const auto fb = check_form_bounds(spec, 1000, plan.base_seed);
            report.verdicts.push_back({"form_bounds",
                                       "antisymmetry and cancellation <= 1e-12 scale, |B(u,u)|_{V*} ratio <= 1 + 1e-9",
                                       fb.passed, 1.0 - fb.max_trilinear_ratio,
                                       "trilinear ratio " + fmt(fb.max_trilinear_ratio) + ", bilinear ratio " +
                                           fmt(fb.max_bilinear_ratio) + ", antisymmetry " +
                                           fmt(fb.max_antisymmetry_defect) + ", cancellation " +
                                           fmt(fb.max_cancellation_defect)});
            const auto lp = lipschitz_probe(spec, 500, plan.base_seed);
            report.verdicts.push_back({"lipschitz", "sampled C_1 estimate <= declared C_1", lp.passed,
                                       lp.declared - lp.estimate,
                                       "estimate " + fmt(lp.estimate) + ", declared " + fmt(lp.declared)});
            report.verdicts.push_back({"h1_nse", "lambda_{N+1} > (32/3)|sigma(0)|^2 + 12 C_1 + 16 gamma^2",
                                       report.h1_nse.passed, report.h1_nse.lambda_next - report.h1_nse.threshold,
                                       "threshold " + fmt(report.h1_nse.threshold)});
            break;
        }
        case NseExperiment::simulate: {
            validate_plan(plan);
            require_in_basis(spec.basis, x0);
            check_initial_state(x0, "x0");
            const std::size_t total = steps_for(plan.t_grid.back(), plan.stepper.dt);
            std::vector<std::size_t> grid_steps;
            for (double t : plan.t_grid) grid_steps.push_back(steps_for(t, plan.stepper.dt));
            struct PathOut {
                std::vector<double> energy;
                double max_increase;
            };
            const auto outs = parallel_map(plan.n_paths, plan.workers, [&](std::size_t p) {
                ReflectedStepper stepper(spec, plan.stepper);
                std::vector<double> state = x0.coeffs;
                PathOut out{std::vector<double>(grid_steps.size()), 0.0};
                double prev = h_inner(state, state);
                std::size_t g = 0;
                while (g < grid_steps.size() && grid_steps[g] == 0) out.energy[g++] = prev;
                run_path(stepper, state, total, plan.base_seed, plan.first_path + p,
                         [&](std::size_t k, std::span<const double> s, std::span<const double>) {
                             const double e = h_inner(s, s);
                             out.max_increase = std::max(out.max_increase, (e - prev) / std::max(prev, 1e-300));
                             prev = e;
                             while (g < grid_steps.size() && grid_steps[g] == k) out.energy[g++] = e;
                         });
                return out;
            });
            for (std::size_t j = 0; j < plan.t_grid.size(); ++j) {
                std::vector<double> col;
                for (const auto& o : outs) col.push_back(o.energy[j]);
                const auto ms = mean_stderr(col);
                report.energy.points.push_back({plan.t_grid[j], ms.mean, ms.std_error, ms.n, 0.0, true});
            }
            double worst = -std::numeric_limits<double>::infinity();
            for (const auto& o : outs) {
                report.max_energy_increase.push_back(o.max_increase);
                worst = std::max(worst, o.max_increase);
            }
            const bool unforced = spec.sigma0_hs == 0.0 && spec.f0_vstar == 0.0;
            if (unforced) {
                report.verdicts.push_back({"energy_nonincreasing", "|X(t_{k+1})|^2 <= (1 + 1e-6)|X(t_k)|^2",
                                           worst <= 1e-6, 1e-6 - worst, "max relative increase " + fmt(worst)});
            } else {
                report.notes += "; energy check skipped (noise or forcing present)";
            }
            break;
        }
        case NseExperiment::ergodicity: {
            if (!report.h1_nse.passed) report.notes += "; warning: H.1 (nse variant) violated";
            report.verdicts.push_back({"h1_nse", "lambda_{N+1} > (32/3)|sigma(0)|^2 + 12 C_1 + 16 gamma^2",
                                       report.h1_nse.passed, report.h1_nse.lambda_next - report.h1_nse.threshold,
                                       "threshold " + fmt(report.h1_nse.threshold)});
            StateVector y0 = x0;
            for (double& c : y0.coeffs) c = -c;
            report.energy = coupled_distance_series(spec, x0, y0, plan, distance);
            std::vector<double> search;
            for (double t : plan.t_grid) {
                if (t > 0.0) search.push_back(t);
            }
            if (search.empty()) throw ValidationError("nse ergodicity needs positive grid times");
            const auto cc = contraction_check(spec, plan, distance, search);
            report.verdicts.push_back(cc.verdict);
            break;
        }
    }
    return report;
}

}  // namespace seelab
