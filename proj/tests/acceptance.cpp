// One PASS/FAIL line per acceptance criterion; exit status 0 iff all pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "nse_oracle.hpp"
#include "seelab/ergodicity.hpp"
#include "seelab/h1_condition.hpp"
#include "seelab/harness.hpp"
#include "seelab/nse.hpp"
#include "seelab/parallel.hpp"

using namespace seelab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string g(double v) { return fmt("%.4g", v); }

std::size_t workers() { return std::max<std::size_t>(default_workers(), 1); }

StateVector unit_multiple(const SpectralBasis& basis, std::initializer_list<std::pair<std::size_t, double>> entries) {
    auto v = StateVector::zeros(basis);
    for (const auto& [i, c] : entries) v.coeffs[i] = c;
    return v;
}

// Criteria 1 and 2 share one 2000-path run on the boundary-active model.
struct BallRun {
    double max_projected = 0.0;
    double max_penalized = 0.0;
    double min_slack = 1e300;  // min over paths of (min obstacle sum + tolerance)
    double max_angle = 0.0;
    double max_defect = 0.0;
    std::size_t contacts = 0;
    std::size_t paths = 0;
    double seconds = 0.0;
};

BallRun ball_run() {
    const auto model = fixtures::boundary_active_model();
    const auto x0 = unit_multiple(model.basis, {{0, 0.5}});
    constexpr std::size_t n_paths = 2000;
    constexpr double horizon = 2.0;
    struct PerPath {
        double proj, pen, slack, angle, defect;
        std::size_t contacts;
    };
    const auto start = std::chrono::steady_clock::now();
    const auto rows = parallel_map(n_paths, workers(), [&](std::size_t p) {
        const StepperConfig proj_cfg{1e-3, Scheme::projected, 1e4};
        const auto path = simulate_path(model, x0, horizon, proj_cfg, 2024, p);
        double proj = 0.0;
        for (const auto& s : path.states) proj = std::max(proj, h_norm(s));
        const auto ob = discrete_obstacle_inequality(path, 100, 2024 + p);

        const StepperConfig pen_cfg{1e-3, Scheme::penalized, 1e4};
        ReflectedStepper stepper(model, pen_cfg);
        std::vector<double> state = x0.coeffs;
        double pen = h_norm(state);
        run_path(stepper, state, steps_for(horizon, pen_cfg.dt), 2024, p,
                 [&](std::size_t, std::span<const double> z, std::span<const double>) { pen = std::max(pen, h_norm(z)); });
        return PerPath{proj, pen, ob.min_sum + ob.tolerance, ob.max_angle, ob.max_contact_defect,
                       path.ledger.entries.size()};
    });
    BallRun r;
    r.paths = n_paths;
    for (const auto& row : rows) {
        r.max_projected = std::max(r.max_projected, row.proj);
        r.max_penalized = std::max(r.max_penalized, row.pen);
        r.min_slack = std::min(r.min_slack, row.slack);
        r.max_angle = std::max(r.max_angle, row.angle);
        r.max_defect = std::max(r.max_defect, row.defect);
        r.contacts += row.contacts;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

Outcome criterion1(const BallRun& r) {
    const bool ok = r.max_projected <= 1.0 && r.max_penalized <= 1.0 + 1e-3 && r.seconds < 120.0;
    return {ok, std::to_string(r.paths) + " paths, max |X| projected - 1 = " + g(r.max_projected - 1.0) +
                    ", penalized(1e4) - 1 = " + g(r.max_penalized - 1.0) + ", contacts/path " +
                    g(static_cast<double>(r.contacts) / r.paths) + ", " + g(r.seconds) + " s"};
}

Outcome criterion2(const BallRun& r) {
    const bool ok = r.min_slack >= 0.0 && r.max_angle <= 1e-8 && r.contacts > 0;
    return {ok, "min(obstacle sum + 1e-10 TV) = " + g(r.min_slack) + ", max angle " + g(r.max_angle) +
                    " rad, max contact defect " + g(r.max_defect)};
}

Outcome criterion3() {
    const auto skew = check_form_bounds(fixtures::wide_gap_model(), 1000, 31);
    NseParams p;
    p.kappa = 3;
    p.gamma = 0.5;
    p.coupling_n = 2;
    const auto nse = check_form_bounds(build_nse_model(p).spec, 1000, 32);
    auto ok = [](const FormBoundsReport& r) {
        return r.max_antisymmetry_defect <= 1e-12 && r.max_cancellation_defect <= 1e-12 &&
               r.max_bilinear_ratio <= 1.0 + 1e-9 && r.passed;
    };
    return {ok(skew) && ok(nse),
            "skew_shear: antisym " + g(skew.max_antisymmetry_defect) + ", cancel " + g(skew.max_cancellation_defect) +
                ", B ratio " + g(skew.max_bilinear_ratio) + "; nse_convective: antisym " +
                g(nse.max_antisymmetry_defect) + ", cancel " + g(nse.max_cancellation_defect) + ", B ratio " +
                g(nse.max_bilinear_ratio)};
}

Outcome criterion4() {
    const auto model = fixtures::boundary_active_model();
    const auto x0 = unit_multiple(model.basis, {{0, 0.5}});
    const auto start = std::chrono::steady_clock::now();
    const auto tab = penalization_convergence_study(model, x0, 2.0, 1e-3, {10, 100, 1000, 10000}, 11, 0);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string gaps;
    for (const auto& row : tab.rows) gaps += (gaps.empty() ? "" : ", ") + g(row.sup_gap);
    return {tab.strictly_decreasing && tab.min_decade_factor >= 2.0 && seconds < 60.0,
            "sup gaps [" + gaps + "], min factor/decade " + g(tab.min_decade_factor) + ", " + g(seconds) + " s"};
}

Outcome criterion5() {
    const auto model = fixtures::wide_gap_model();
    MonteCarloPlan plan;
    plan.n_paths = 2000;
    plan.workers = workers();
    for (int i = 0; i <= 10; ++i) plan.t_grid.push_back(0.1 * i);
    const auto x = unit_multiple(model.basis, {{0, 0.5}, {3, 0.3}});
    const auto y = unit_multiple(model.basis, {{0, -0.4}, {5, 0.2}});
    const auto start = std::chrono::steady_clock::now();
    const auto est = weighted_contraction_estimate(model, x, y, plan);
    const auto fit = fit_exponential_rate(est.series);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto h1 = validate_h1(model, model.coupling_n);
    const double exponent = 4.0 * model.lipschitz_c1 - 0.75 * model.basis.eigenvalue(model.coupling_n);
    const double limit = exponent + 0.2 * std::abs(exponent);
    const double slope = -fit.rate;
    return {h1.passed && slope <= limit && fit.r_squared >= 0.9 && seconds < 300.0,
            "slope " + g(slope) + " <= " + g(limit) + ", r^2 " + fmt("%.5f", fit.r_squared) + ", H.1 threshold " +
                g(h1.threshold) + " < " + g(h1.lambda_next) + ", " + g(seconds) + " s"};
}

MonteCarloPlan wide_gap_plan(std::size_t paths) {
    MonteCarloPlan plan;
    plan.n_paths = paths;
    plan.workers = workers();
    plan.t_grid = {0.0, 0.25, 0.5, 1.0, 2.0};
    return plan;
}

Outcome criterion6() {
    const auto model = fixtures::wide_gap_model();
    const auto delta = select_delta(model).delta;
    const auto x = unit_multiple(model.basis, {{0, 0.9}});
    const auto est = exp_integrability_estimate(model, x, delta, wide_gap_plan(1000));
    std::string pts;
    for (const auto& p : est.series.points) {
        if (p.t > 0.0) pts += (pts.empty() ? "" : ", ") + g(p.mean) + "/" + g(p.bound);
    }
    return {est.verdict.passed, "delta " + g(delta) + ", mean/bound [" + pts + "]"};
}

Outcome criterion7() {
    const auto model = fixtures::wide_gap_model();
    const auto x = unit_multiple(model.basis, {{0, 0.9}});
    const auto res = lyapunov_check(model, x, wide_gap_plan(1000));
    return {res.result.verdict.passed, res.result.verdict.detail};
}

Outcome criterion8() {
    const auto model = fixtures::wide_gap_model();
    const DistanceParams dist{1.0, select_delta(model).delta};
    const auto res = contraction_check(model, wide_gap_plan(200), dist, {0.05, 0.1, 0.25, 0.5, 1.0, 2.0}, 20);
    return {res.found && res.t0 <= 2.0 && res.pairs == 20 && res.verdict.passed,
            "t0 " + g(res.t0) + ", alpha " + g(res.alpha) + ", pairs " + std::to_string(res.pairs)};
}

Outcome criterion9() {
    const auto model = fixtures::wide_gap_model();
    const DistanceParams dist{1.0, select_delta(model).delta};
    const auto res = d_small_check(model, wide_gap_plan(200), dist, 1.0, 4.0, 20);
    return {res.epsilon >= 0.05, "epsilon " + g(res.epsilon) + " over " + std::to_string(res.pairs) + " pairs"};
}

Outcome criterion10() {
    const StepperConfig cfg;
    const double s = 0.7;
    const auto one = fixtures::one_mode_model(s);
    const auto occ1 = occupation_sampler(one, StateVector::zeros(one.basis), 5.0, 4000.0, 50, cfg, 1);
    const double exact = fixtures::one_mode_exact_second_moment(s);
    const double z1 = (occ1.second_moment[0] - exact) / occ1.second_moment_stderr[0];

    const auto model = fixtures::wide_gap_model();
    const auto x = StateVector::zeros(model.basis);
    const auto occ_a = occupation_sampler(model, x, 2.0, 1000.0, 1000, cfg, 1);
    MonteCarloPlan restart;
    restart.base_seed = 1;
    restart.first_path = std::uint64_t{1} << 40;
    restart.workers = workers();
    const auto residuals = invariance_residual(model, occ_a, 0.5, 10, restart);
    std::size_t passed = 0;
    for (const auto& r : residuals) passed += r.pass ? 1 : 0;

    const auto occ_b = occupation_sampler(model, x, 2.0, 1000.0, 1000, cfg, 10);
    const auto occ_c = occupation_sampler(model, x, 2.0, 1000.0, 1000, cfg, 11);
    const double joint = std::hypot(occ_b.energy.std_error, occ_c.energy.std_error);
    const double z2 = (occ_b.energy.mean - occ_c.energy.mean) / joint;

    return {std::abs(z1) <= 3.0 && passed == residuals.size() && residuals.size() == 10 && std::abs(z2) <= 3.0,
            "1-mode E x^2 " + g(occ1.second_moment[0]) + " vs exact " + g(exact) + " (z " + fmt("%.2f", z1) +
                "); invariance " + std::to_string(passed) + "/" + std::to_string(residuals.size()) +
                "; seed energies z " + fmt("%.2f", z2)};
}

Outcome criterion11() {
    const auto model = fixtures::gentle_model();
    MonteCarloPlan plan;
    plan.n_paths = 1000;
    plan.workers = workers();
    for (int i = 0; i <= 20; ++i) plan.t_grid.push_back(0.1 * i);
    const DistanceParams dist{1.0, 0.5};

    auto run = [&](double xr, double yr) {
        const auto x = unit_multiple(model.basis, {{0, xr}});
        const auto y = unit_multiple(model.basis, {{0, yr}});
        const auto series = coupled_distance_series(model, x, y, plan, dist);
        double rel = 0.0;
        for (const auto& p : series.points) {
            if (p.mean > 0.0) rel = std::max(rel, p.std_error / p.mean);
        }
        return std::make_pair(fit_exponential_rate(series), 2.0 * rel);
    };
    // |x|^2 = 0 then 1, so 1 + |x|^2 doubles; |x - y| is held at 0.3.
    const auto [a, ci_a] = run(0.0, 0.3);
    const auto [b, ci_b] = run(1.0, 0.7);
    const double ci = std::max(ci_a, ci_b);
    const bool rates_ok = a.rate > 0.0 && b.rate > 0.0 && a.r_squared >= 0.9 && b.r_squared >= 0.9;
    const bool rate_stable = std::abs(b.rate - a.rate) <= 0.1 * a.rate;
    const bool c_ok = b.constant <= 2.0 * a.constant * (1.0 + ci);
    return {rates_ok && rate_stable && c_ok,
            "r " + g(a.rate) + " -> " + g(b.rate) + ", r^2 " + fmt("%.4f", std::min(a.r_squared, b.r_squared)) +
                ", C " + g(a.constant) + " -> " + g(b.constant) + " (<= 2C(1 + " + g(ci) + "))"};
}

Outcome criterion12() {
    bool structure = true;
    for (int k = 1; k <= 4; ++k) structure = structure && divergence_free_structure(build_fourier_grid(k));

    NseParams p;
    p.kappa = 3;
    p.gamma = 0.5;
    p.coupling_n = 4;
    const auto decay = build_nse_model(p);
    MonteCarloPlan plan;
    plan.n_paths = 4;
    plan.workers = workers();
    plan.t_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> x(decay.grid.size(), 0.0);
    for (std::size_t i = 0; i < 4; ++i) x[i] = 0.3;
    const auto sim = run_nse_experiment(decay, NseExperiment::simulate, plan, {1.0, 0.3},
                                        StateVector::from(decay.spec.basis, x));
    double max_increase = 0.0;
    for (double v : sim.max_energy_increase) max_increase = std::max(max_increase, v);

    CounterRng rng(12, 0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> u(decay.grid.size()), v(u.size()), w(u.size());
        for (auto* vec : {&u, &v, &w}) {
            for (double& c : *vec) c = rng.normal();
        }
        const double oracle = fixtures::quadrature_trilinear(decay.grid, u, v, w);
        const double spectral = nse_trilinear(decay, u, v, w);
        const double scale = std::max(std::abs(oracle), decay.spec.bilinear.magnitude(u, v, w));
        worst = std::max(worst, std::abs(spectral - oracle) / scale);
    }

    p.noise_amplitude = 0.05;
    p.gamma = 0.7;
    const auto noisy = build_nse_model(p);
    const double s2 = noisy.spec.sigma0_hs * noisy.spec.sigma0_hs;
    const double expected = 32.0 / 3.0 * s2 + 12.0 * noisy.spec.lipschitz_c1 + 16.0 * 0.7 * 0.7;
    const bool threshold_ok = h1_threshold(noisy.spec, H1Variant::nse) == expected;

    return {structure && sim.all_passed() && max_increase <= 1e-6 && worst <= 1e-8 && threshold_ok,
            std::string("divergence-free ") + (structure ? "yes" : "no") + ", max relative energy increase " +
                g(max_increase) + ", quadrature rel. error " + g(worst) + ", H.1 threshold " +
                (threshold_ok ? "exact" : "mismatch")};
}

std::map<std::string, std::string> output_files(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.txt") continue;
        std::ifstream is(e.path(), std::ios::binary);
        std::ostringstream os;
        os << is.rdbuf();
        out[fs::relative(e.path(), dir).string()] = os.str();
    }
    return out;
}

Outcome criterion13() {
    const std::string small = R"(
[model]
name = determinism
[basis]
dim = 8
scale = 4
[constants]
lipschitz_c1 = 1
coupling_n = 2
[stepper]
dt = 0.005
horizon = 1
[plan]
n_paths = 24
t_grid = 0, 0.25, 0.5, 1
base_seed = 99
[ergodicity]
contraction_grid = 0.25, 0.5, 1
contraction_pairs = 3
dsmall_time = 1
burn = 0.5
average = 20
test_functions = 4
[output]
trajectories = 3
)";
    const std::string nse = R"(
[nse]
kappa = 2
gamma = 0.3
noise_amplitude = 0.05
experiment = ergodicity
[constants]
coupling_n = 4
[stepper]
dt = 0.005
horizon = 1
[plan]
n_paths = 16
t_grid = 0, 0.5, 1
[ergodicity]
contraction_grid = 0.5, 1
contraction_pairs = 3
)";
    const auto root = fs::temp_directory_path() / "seelab_acceptance_determinism";
    fs::remove_all(root);
    std::size_t compared = 0;
    std::string mismatch;
    std::ostringstream log;
    auto check = [&](const std::string& sub, const std::string& text) {
        std::vector<std::map<std::string, std::string>> outs;
        for (std::size_t w : {1, 8, 8}) {
            RunOverrides o;
            o.workers = w;
            o.out = (root / (sub + "_" + std::to_string(w) + "_" + std::to_string(outs.size()))).string();
            run_subcommand(sub, parse_config_text(text), o, log);
            outs.push_back(output_files(*o.out));
        }
        if (outs[0].empty() || outs[0] != outs[1] || outs[1] != outs[2]) mismatch += " " + sub;
        compared += outs[0].size();
    };
    for (const char* sub : {"simulate", "couple", "ergodicity", "verify-model", "convergence"}) check(sub, small);
    check("nse", nse);
    fs::remove_all(root);
    return {mismatch.empty(), std::to_string(compared) + " files byte-identical across workers 1/8/8" +
                                  (mismatch.empty() ? "" : "; mismatch in" + mismatch)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    BallRun ball;
    bool ball_ok = false;
    std::string ball_error;
    auto ensure_ball = [&] {
        if (ball_ok || !ball_error.empty()) return;
        try {
            ball = ball_run();
            ball_ok = true;
        } catch (const std::exception& e) {
            ball_error = e.what();
        }
    };
    const std::vector<Criterion> criteria{
        {1, "ball invariance", [&] { ensure_ball(); return ball_ok ? criterion1(ball) : Outcome{false, ball_error}; }},
        {2, "local-time structure", [&] { ensure_ball(); return ball_ok ? criterion2(ball) : Outcome{false, ball_error}; }},
        {3, "trilinear form identities", criterion3},
        {4, "penalization convergence", criterion4},
        {5, "weighted gap exponent", criterion5},
        {6, "exponential integrability", criterion6},
        {7, "Lyapunov condition", criterion7},
        {8, "contraction", criterion8},
        {9, "d-smallness", criterion9},
        {10, "occupation measure and invariance", criterion10},
        {11, "exponential ergodicity", criterion11},
        {12, "Navier-Stokes instance", criterion12},
        {13, "determinism across workers", criterion13},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += o.pass ? 0 : 1;
        std::printf("[%s] C%d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), s);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
