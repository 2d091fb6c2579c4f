#include "seelab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "seelab/coupling.hpp"
#include "seelab/h1_condition.hpp"
#include "seelab/nse.hpp"
#include "seelab/parallel.hpp"
#include "seelab/reflection.hpp"

namespace seelab {
namespace {

namespace fs = std::filesystem;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Output files are staged in memory and written by the coordinator only.
class OutputTree {
public:
    explicit OutputTree(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

    void write(const std::string& name, const std::string& content) {
        const fs::path target = root_ / name;
        const fs::path tmp = root_ / (name + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw SimulationError("cannot write " + target.string());
            out << content;
            if (!out) throw SimulationError("write failed for " + target.string());
        }
        fs::rename(tmp, target);
        if (name != "manifest.txt") files_.push_back(name);
    }

    const std::vector<std::string>& files() const { return files_; }
    const fs::path& root() const { return root_; }

private:
    fs::path root_;
    std::vector<std::string> files_;
};

std::string series_csv(const EstimateSeries& s) {
    std::ostringstream os;
    write_series_csv(s, os);
    return os.str();
}

H1Variant variant_for(const ExperimentConfig& cfg) { return cfg.nse ? H1Variant::nse : H1Variant::generic; }

Verdict h1_verdict(const H1Report& h) {
    return {"h1_" + to_string(h.variant), "lambda_{N+1} > threshold", h.passed, h.lambda_next - h.threshold,
            "lambda_{N+1} = " + short_num(h.lambda_next) + ", threshold = " + short_num(h.threshold)};
}

void h1_warning(const ExperimentConfig& cfg, RunResult& result, std::ostream& log) {
    const auto h = validate_h1(*cfg.model, cfg.model->coupling_n, variant_for(cfg));
    if (!h.passed) {
        const std::string w = "H.1 violated: lambda_{N+1} = " + short_num(h.lambda_next) +
                              " <= threshold " + short_num(h.threshold) + "; contraction is not expected";
        log << "warning: " << w << '\n';
        result.warnings.push_back(w);
    }
}

struct SimSummary {
    double max_norm = 0.0;
    std::size_t contacts = 0;
    double total_variation = 0.0;
    double obstacle_min = 0.0;
    double obstacle_tol = 0.0;
    double max_angle = 0.0;
    bool obstacle_ok = true;
    bool direction_ok = true;
};

void run_simulate(const ExperimentConfig& cfg, std::size_t workers, OutputTree& out, RunResult& result) {
    const auto& model = *cfg.model;
    const auto& plan = cfg.plan;
    const bool projected = cfg.stepper.scheme == Scheme::projected;
    const auto summaries = parallel_map(plan.n_paths, workers, [&](std::size_t p) {
        const auto path = simulate_path(model, cfg.x0, cfg.horizon, cfg.stepper, plan.base_seed, plan.first_path + p);
        SimSummary s;
        for (const auto& x : path.states) s.max_norm = std::max(s.max_norm, h_norm(x));
        s.contacts = path.ledger.entries.size();
        s.total_variation = path.ledger.total_variation;
        if (projected) {
            const auto ob = discrete_obstacle_inequality(path, 100, plan.base_seed);
            s.obstacle_min = ob.min_sum;
            s.obstacle_tol = ob.tolerance;
            s.max_angle = ob.max_angle;
            s.obstacle_ok = ob.passed;
            s.direction_ok = ob.direction_ok;
        }
        return s;
    });

    for (std::size_t p = 0; p < std::min(cfg.output.trajectories, plan.n_paths); ++p) {
        const auto path = simulate_path(model, cfg.x0, cfg.horizon, cfg.stepper, plan.base_seed, plan.first_path + p);
        std::ostringstream os;
        write_path_csv(path, os);
        out.write(path_csv_name(plan.base_seed, plan.first_path + p), os.str());
    }

    std::ostringstream os;
    os << "path_index,max_norm,contacts,local_time_tv,obstacle_min_sum,max_angle\n";
    double worst_norm = 0.0, worst_angle = 0.0, worst_obstacle = std::numeric_limits<double>::infinity();
    bool obstacle_ok = true, direction_ok = true;
    for (std::size_t p = 0; p < summaries.size(); ++p) {
        const auto& s = summaries[p];
        os << plan.first_path + p << ',' << num(s.max_norm) << ',' << s.contacts << ',' << num(s.total_variation)
           << ',' << num(s.obstacle_min) << ',' << num(s.max_angle) << '\n';
        worst_norm = std::max(worst_norm, s.max_norm);
        worst_angle = std::max(worst_angle, s.max_angle);
        worst_obstacle = std::min(worst_obstacle, s.obstacle_min + s.obstacle_tol);
        obstacle_ok = obstacle_ok && s.obstacle_ok;
        direction_ok = direction_ok && s.direction_ok;
    }
    out.write("simulate_summary.csv", os.str());
    if (summaries.empty()) return;

    const double limit = projected ? 1.0 : 1.0 + 1e-3;
    result.verdicts.push_back({"ball_invariance", projected ? "|X|_H <= 1 at every step" : "|X|_H <= 1 + 1e-3",
                               worst_norm <= limit, limit - worst_norm, "max |X|_H = " + num(worst_norm)});
    if (projected) {
        result.verdicts.push_back({"obstacle_inequality",
                                   "sum (phi - X, dL) >= -1e-10 TV(L) for 100 random ball-valued phi per path",
                                   obstacle_ok, worst_obstacle, "min slack " + short_num(worst_obstacle)});
        result.verdicts.push_back({"local_time_direction", "dL antiparallel to X within 1e-8 rad at contact",
                                   direction_ok, 1e-8 - worst_angle, "max angle " + short_num(worst_angle)});
    }
}

void run_couple(const ExperimentConfig& cfg, MonteCarloPlan plan, OutputTree& out, RunResult& result,
                std::ostream& log) {
    const auto& model = *cfg.model;
    h1_warning(cfg, result, log);
    for (std::size_t p = 0; p < std::min(cfg.output.trajectories, plan.n_paths); ++p) {
        const auto path =
            simulate_coupled(model, cfg.x0, cfg.y0, cfg.horizon, cfg.stepper, plan.base_seed, plan.first_path + p);
        std::ostringstream os;
        write_coupled_csv(path, cfg.distance, os);
        out.write(coupled_csv_name(plan.base_seed, plan.first_path + p), os.str());
    }
    if (plan.n_paths == 0) return;
    out.write("coupled_distance.csv", series_csv(coupled_distance_series(model, cfg.x0, cfg.y0, plan, cfg.distance)));
    auto weighted = weighted_contraction_estimate(model, cfg.x0, cfg.y0, plan);
    out.write("weighted_gap.csv", series_csv(weighted.series));
    result.verdicts.push_back(weighted.verdict);
}

void run_verify(const ExperimentConfig& cfg, OutputTree& out, RunResult& result) {
    const auto& model = *cfg.model;
    const auto seed = cfg.plan.base_seed;
    const auto fb = check_form_bounds(model, 1000, seed);
    const auto lp = lipschitz_probe(model, 500, seed);
    const auto h1 = validate_h1(model, model.coupling_n, variant_for(cfg));

    CounterRng rng(seed, 0x9C'0000ull);
    double worst_poincare = std::numeric_limits<double>::infinity();
    bool poincare_ok = true;
    for (int i = 0; i < 200; ++i) {
        const auto v = StateVector::from(model.basis, random_probe_vector(model.basis, rng, 1.0));
        const auto g = poincare_gap_check(model.basis, v, model.coupling_n);
        poincare_ok = poincare_ok && g.holds;
        worst_poincare = std::min(worst_poincare, g.residual);
    }

    result.verdicts.push_back({"form_bounds", "antisymmetry, cancellation, |b| and |B(u,u)| bounds", fb.passed,
                               1.0 - std::max(fb.max_trilinear_ratio, fb.max_bilinear_ratio),
                               "trilinear ratio " + short_num(fb.max_trilinear_ratio) + ", bilinear ratio " +
                                   short_num(fb.max_bilinear_ratio) + ", antisymmetry " +
                                   short_num(fb.max_antisymmetry_defect) + ", cancellation " +
                                   short_num(fb.max_cancellation_defect)});
    result.verdicts.push_back({"lipschitz", "|f(u)-f(v)|_{V*}^2 + |sigma(u)-sigma(v)|_HS^2 <= C_1 |u-v|^2",
                               lp.passed, lp.declared - lp.estimate,
                               "estimate " + short_num(lp.estimate) + ", declared " + short_num(lp.declared)});
    result.verdicts.push_back({"poincare_gap", "||v||^2 >= lambda_{N+1} |(I-P_N)v|^2", poincare_ok, worst_poincare,
                               "min residual " + short_num(worst_poincare)});
    result.verdicts.push_back(h1_verdict(h1));
    if (cfg.nse) result.verdicts.push_back(h1_verdict(validate_h1(model, model.coupling_n, H1Variant::generic)));
    if (cfg.nse) {
        const bool ok = divergence_free_structure(cfg.nse->grid);
        result.verdicts.push_back({"divergence_free", "every mode direction is orthogonal to its wave vector", ok,
                                   ok ? 0.0 : -1.0, std::to_string(cfg.nse->grid.size()) + " modes"});
    }

    std::ostringstream os;
    os << "model: " << model.name << '\n'
       << "dim: " << model.basis.dim() << '\n'
       << "coupling_n: " << model.coupling_n << '\n'
       << "lambda_next: " << num(h1.lambda_next) << '\n'
       << "C_1: " << num(model.lipschitz_c1) << '\n'
       << "|f(0)|_V*: " << num(model.f0_vstar) << '\n'
       << "|sigma(0)|_HS: " << num(model.sigma0_hs) << '\n'
       << "h1_variant: " << to_string(h1.variant) << '\n'
       << "h1_threshold: " << num(h1.threshold) << '\n'
       << "h1_range_condition: " << (h1.range_condition ? "yes" : "no") << '\n'
       << "h1_pseudo_inverse_bound: " << num(h1.pseudo_inverse_bound) << '\n'
       << "max_trilinear_ratio: " << num(fb.max_trilinear_ratio) << '\n'
       << "max_bilinear_ratio: " << num(fb.max_bilinear_ratio) << '\n'
       << "max_antisymmetry_defect: " << num(fb.max_antisymmetry_defect) << '\n'
       << "max_cancellation_defect: " << num(fb.max_cancellation_defect) << '\n'
       << "max_riesz_defect: " << num(fb.max_riesz_defect) << '\n'
       << "lipschitz_estimate: " << num(lp.estimate) << '\n';
    out.write("verify_model.txt", os.str());
}

void run_ergodicity(const ExperimentConfig& cfg, MonteCarloPlan plan, OutputTree& out, RunResult& result,
                    std::ostream& log) {
    const auto& model = *cfg.model;
    const auto& eg = cfg.ergodicity;
    h1_warning(cfg, result, log);
    result.verdicts.push_back(h1_verdict(validate_h1(model, model.coupling_n, variant_for(cfg))));
    if (plan.n_paths == 0) return;

    ErgodicityReport report;
    report.distance = cfg.distance;
    report.h1_passed = validate_h1(model, model.coupling_n, variant_for(cfg)).passed;

    auto weighted = weighted_contraction_estimate(model, cfg.x0, cfg.y0, plan);
    out.write("weighted_gap.csv", series_csv(weighted.series));
    report.verdicts.push_back(weighted.verdict);

    auto fourth = fourth_moment_estimate(model, cfg.x0, cfg.y0, plan);
    out.write("fourth_moment.csv", series_csv(fourth.series));
    report.verdicts.push_back(fourth.verdict);

    auto expi = exp_integrability_estimate(model, cfg.x0, cfg.distance.delta, plan);
    out.write("exp_integrability.csv", series_csv(expi.series));
    report.verdicts.push_back(expi.verdict);

    auto lyap = lyapunov_check(model, cfg.x0, plan);
    out.write("lyapunov.csv", series_csv(lyap.result.series));
    report.verdicts.push_back(lyap.result.verdict);
    report.lyapunov_gamma = lyap.gamma;
    report.lyapunov_k = lyap.k_const;

    auto feller = feller_modulus_estimate(model, cfg.x0, cfg.y0, plan);
    out.write("feller.csv", series_csv(feller.base.series));
    report.verdicts.push_back(feller.base.verdict);

    const auto dist = coupled_distance_series(model, cfg.x0, cfg.y0, plan, cfg.distance);
    out.write("coupled_distance.csv", series_csv(dist));
    try {
        report.fit = fit_exponential_rate(dist);
        const bool ok = report.fit.rate > 0.0 && report.fit.r_squared >= 0.9;
        report.verdicts.push_back({"exponential_rate", "log E d_N(X(t), Y(t)) linear in t with r > 0, r^2 >= 0.9",
                                   ok, report.fit.r_squared - 0.9,
                                   "r = " + short_num(report.fit.rate) + ", C = " + short_num(report.fit.constant) +
                                       ", r^2 = " + short_num(report.fit.r_squared)});
    } catch (const ValidationError& e) {
        report.verdicts.push_back({"exponential_rate", "fit on E d_N", false, -1.0, e.what()});
    }

    const auto contraction = contraction_check(model, plan, cfg.distance, eg.contraction_grid, eg.contraction_pairs);
    report.verdicts.push_back(contraction.verdict);
    report.t0 = contraction.t0;

    const auto dsmall = d_small_check(model, plan, cfg.distance, eg.dsmall_level, eg.dsmall_time, eg.contraction_pairs);
    report.verdicts.push_back(dsmall.verdict);
    report.epsilon = dsmall.epsilon;

    const auto thin = steps_for(eg.thin, cfg.stepper.dt);
    const auto occ = occupation_sampler(model, cfg.x0, eg.burn, eg.average, thin, cfg.stepper, plan.base_seed,
                                        plan.first_path);
    MonteCarloPlan restart = plan;
    restart.first_path = plan.first_path + (std::uint64_t{1} << 40);
    const auto residuals = invariance_residual(model, occ, eg.invariance_horizon, eg.test_functions, restart);
    std::ostringstream inv;
    inv << "test_function,residual,stderr,pass\n";
    bool inv_ok = true;
    for (const auto& r : residuals) {
        inv << r.name << ',' << num(r.residual) << ',' << num(r.std_error) << ',' << (r.pass ? 1 : 0) << '\n';
        inv_ok = inv_ok && r.pass;
    }
    out.write("invariance.csv", inv.str());
    report.verdicts.push_back({"invariance", "|mean(phi(X_h) - phi(x_j))| <= 3 stderr under the occupation measure",
                               inv_ok, 0.0,
                               std::to_string(residuals.size()) + " test functions, " +
                                   std::to_string(occ.samples.size()) + " samples"});
    report.verdicts.push_back({"occupation_v_norm",
                               "time average of ||X||^2 <= |x|^2/t + 2(|f(0)|^2 + |sigma(0)|^2 + 2C_1)",
                               occ.time_avg_v2 <= occ.time_avg_v2_bound, occ.time_avg_v2_bound - occ.time_avg_v2,
                               "average " + short_num(occ.time_avg_v2) + ", bound " + short_num(occ.time_avg_v2_bound)});

    // Mean Girsanov cost over the trajectory sample.
    double cost = 0.0;
    const std::size_t n_cost = std::min<std::size_t>(std::max<std::size_t>(cfg.output.trajectories, 1), plan.n_paths);
    for (std::size_t p = 0; p < n_cost; ++p) {
        cost += simulate_coupled(model, cfg.x0, cfg.y0, cfg.horizon, cfg.stepper, plan.base_seed, plan.first_path + p)
                    .shift_cost;
    }
    report.mean_shift_cost = cost / static_cast<double>(n_cost);
    if (!report.h1_passed) report.notes = "H.1 violated; contraction verdicts are not expected to hold";

    std::ostringstream os;
    write_report_text(report, os);
    out.write("ergodicity_report.txt", os.str());
    result.verdicts.insert(result.verdicts.end(), report.verdicts.begin(), report.verdicts.end());
}

void run_nse(const ExperimentConfig& cfg, MonteCarloPlan plan, OutputTree& out, RunResult& result,
             std::ostream& log) {
    if (!cfg.nse) throw ValidationError("the nse subcommand needs an [nse] section in the config");
    const auto report = run_nse_experiment(*cfg.nse, cfg.nse_experiment, plan, cfg.distance, cfg.x0);
    if (!report.h1_nse.passed) {
        const std::string w = "H.1 (nse variant) violated: lambda_{N+1} = " + short_num(report.h1_nse.lambda_next) +
                              " <= " + short_num(report.h1_nse.threshold);
        log << "warning: " << w << '\n';
        result.warnings.push_back(w);
    }
    if (!report.energy.points.empty()) {
        out.write(cfg.nse_experiment == NseExperiment::simulate ? "nse_energy.csv" : "nse_distance.csv",
                  series_csv(report.energy));
    }
    std::ostringstream os;
    os << "nse experiment: " << to_string(report.kind) << '\n'
       << "modes: " << cfg.nse->grid.size() << '\n'
       << "gamma: " << num(cfg.nse->gamma) << '\n'
       << "h1_generic_threshold: " << num(report.h1_generic.threshold)
       << (report.h1_generic.passed ? " (holds)" : " (violated)") << '\n'
       << "h1_nse_threshold: " << num(report.h1_nse.threshold) << (report.h1_nse.passed ? " (holds)" : " (violated)")
       << '\n'
       << "lambda_next: " << num(report.h1_nse.lambda_next) << '\n';
    for (const auto& v : report.verdicts) {
        os << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.inequality << " | " << v.detail << '\n';
    }
    if (!report.notes.empty()) os << "notes: " << report.notes << '\n';
    out.write("nse_report.txt", os.str());
    result.verdicts.insert(result.verdicts.end(), report.verdicts.begin(), report.verdicts.end());
}

void run_convergence(const ExperimentConfig& cfg, OutputTree& out, RunResult& result) {
    const auto table = penalization_convergence_study(*cfg.model, cfg.x0, cfg.horizon, cfg.stepper.dt, cfg.penalties,
                                                      cfg.plan.base_seed, cfg.plan.first_path);
    std::ostringstream os;
    os << "penalty_n,sup_gap,max_excess\n";
    for (const auto& r : table.rows) os << num(r.penalty_n) << ',' << num(r.sup_gap) << ',' << num(r.max_excess) << '\n';
    out.write("convergence.csv", os.str());
    const bool active = !table.rows.empty() && table.rows.front().sup_gap > 0.0;
    const bool ok = active && table.strictly_decreasing && table.min_decade_factor >= 2.0;
    result.verdicts.push_back({"penalization_convergence",
                               "sup |X^n - X| strictly decreasing in n, factor >= 2 per decade", ok,
                               table.min_decade_factor - 2.0,
                               active ? "min factor per decade " + short_num(table.min_decade_factor)
                                      : "boundary never active: penalized and projected paths coincide"});
}

std::string manifest_text(const std::string& sub, const ExperimentConfig& cfg, const MonteCarloPlan& plan,
                          std::size_t workers, double seconds, const OutputTree& out, const RunResult& result) {
    std::ostringstream os;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(cfg.hash));
    os << "see-lab manifest\n"
       << "version: " << kVersion << '\n'
       << "subcommand: " << sub << '\n'
       << "config_hash: " << hash << '\n'
       << "base_seed: " << plan.base_seed << '\n'
       << "n_paths: " << plan.n_paths << '\n'
       << "workers: " << workers << '\n'
       << "wall_clock_seconds: " << short_num(seconds) << '\n'
       << "files:\n";
    for (const auto& f : out.files()) os << "  " << f << '\n';
    os << "warnings:\n";
    for (const auto& w : result.warnings) os << "  " << w << '\n';
    os << "verdicts:\n";
    for (const auto& v : result.verdicts) {
        os << "  " << (v.passed ? "PASS " : "FAIL ") << v.name << " | " << v.inequality << " | " << v.detail << '\n';
    }
    os << "status: " << (result.exit_code == 0 ? "PASS" : "FAIL") << '\n';
    return os.str();
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"simulate", "couple", "verify-model", "ergodicity", "nse", "convergence"};
    return names;
}

RunResult run_subcommand(const std::string& sub, ExperimentConfig cfg, const RunOverrides& overrides,
                         std::ostream& log) {
    if (std::find(subcommands().begin(), subcommands().end(), sub) == subcommands().end()) {
        throw ValidationError("unknown subcommand '" + sub + "'");
    }
    const auto start = std::chrono::steady_clock::now();
    if (overrides.seed) cfg.plan.base_seed = *overrides.seed;
    if (overrides.paths) cfg.plan.n_paths = *overrides.paths;
    if (overrides.out) cfg.output.directory = *overrides.out;
    const std::size_t workers = overrides.workers.value_or(default_workers());
    if (workers == 0) throw ValidationError("workers must be >= 1");
    cfg.plan.workers = workers;
    cfg.plan.stepper = cfg.stepper;

    OutputTree out(cfg.output.directory);
    RunResult result;
    log << "see-lab " << sub << ": model " << cfg.model->name << ", dim " << cfg.model->basis.dim() << ", "
        << cfg.plan.n_paths << " paths, " << workers << " worker(s)\n";

    if (sub == "simulate") {
        run_simulate(cfg, workers, out, result);
    } else if (sub == "couple") {
        run_couple(cfg, cfg.plan, out, result, log);
    } else if (sub == "verify-model") {
        run_verify(cfg, out, result);
    } else if (sub == "ergodicity") {
        run_ergodicity(cfg, cfg.plan, out, result, log);
    } else if (sub == "nse") {
        run_nse(cfg, cfg.plan, out, result, log);
    } else {
        run_convergence(cfg, out, result);
    }

    const bool all = std::all_of(result.verdicts.begin(), result.verdicts.end(), [](const Verdict& v) { return v.passed; });
    result.exit_code = all ? 0 : 1;
    result.files = out.files();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.write("manifest.txt", manifest_text(sub, cfg, cfg.plan, workers, seconds, out, result));
    for (const auto& v : result.verdicts) {
        log << (v.passed ? "PASS " : "FAIL ") << v.name << ": " << v.detail << '\n';
    }
    return result;
}

int run_cli(const std::string& sub, const std::string& config_path, const RunOverrides& overrides, std::ostream& log,
            std::ostream& err) {
    try {
        auto cfg = parse_config(config_path);
        const auto result = run_subcommand(sub, std::move(cfg), overrides, log);
        for (const auto& v : result.verdicts) {
            if (!v.passed) err << "failure: " << v.name << ": " << v.detail << '\n';
        }
        return result.exit_code;
    } catch (const ConfigError& e) {
        for (const auto& msg : e.errors()) err << "config error: " << msg << '\n';
        return 2;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const PathFailure& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const SimulationError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    }
}

}  // namespace seelab
