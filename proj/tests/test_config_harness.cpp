#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <sys/wait.h>

#include "doctest.h"
#include "seelab/harness.hpp"

using namespace seelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("seelab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

std::string config_dir() {
    const char* env = std::getenv("SEE_LAB_CONFIGS");
    return env ? env : "configs";
}

std::vector<std::string> config_errors(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.errors();
    }
    return {};
}

bool any_contains(const std::vector<std::string>& errs, const std::string& needle) {
    for (const auto& e : errs) {
        if (e.find(needle) != std::string::npos) return true;
    }
    return false;
}

// Every file except the manifest, which carries wall-clock time and worker count.
std::map<std::string, std::string> output_files(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file() || e.path().filename() == "manifest.txt") continue;
        out[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return out;
}

RunResult run(const std::string& sub, const std::string& text, RunOverrides o) {
    std::ostringstream log;
    return run_subcommand(sub, parse_config_text(text), o, log);
}

const char* kSmallSim = R"(
[model]
name = small
[basis]
dim = 6
[stepper]
dt = 0.01
horizon = 0.5
[plan]
n_paths = 6
t_grid = 0, 0.25, 0.5
[output]
trajectories = 2
)";

}  // namespace

TEST_CASE("minimal config fills defaults") {
    const auto cfg = parse_config_text("[model]\nname = m\n");
    CHECK(cfg.stepper.dt == 1e-3);
    CHECK(cfg.model->basis.dim() == 16);
    CHECK(cfg.model->coupling_n == 4);
    CHECK(cfg.model->bilinear.kind == BilinearKind::skew_shear);
    CHECK(cfg.nse == nullptr);
    CHECK(cfg.hash == fnv1a64(cfg.source));

    const auto empty = parse_config_text("");
    CHECK(empty.model->basis.dim() == 16);
}

TEST_CASE("config violations are all reported") {
    CHECK(any_contains(config_errors("[basis]\ndim = 4\n[constants]\ncoupling_n = 4\n"),
                       "coupling_n must be < basis dim"));

    const auto dup = config_errors("[stepper]\ndt = 0.01\nhorizon = 1\ndt = 0.02\n");
    REQUIRE(dup.size() == 1);
    CHECK(dup[0].find("line 4") != std::string::npos);
    CHECK(dup[0].find("line 2") != std::string::npos);

    CHECK(any_contains(config_errors("[stepper]\ntimestep = 0.01\n"), "unknown key 'timestep'"));
    CHECK(any_contains(config_errors("[bogus]\n"), "unknown section"));
    CHECK(any_contains(config_errors("dt = 1\n"), "outside of any section"));

    const auto many = config_errors("[stepper]\ndt = abc\n[plan]\nn_paths = -3\n[initial]\nx0 = 2\n");
    CHECK(many.size() >= 2);

    CHECK(any_contains(config_errors("[stepper]\ndt = 0.01\nhorizon = 1\n[plan]\nt_grid = 0, 0.5, 2\n"),
                       "outside [0, horizon]"));
    CHECK(any_contains(config_errors("[nse]\nkappa = 1\n[basis]\ndim = 4\n"), "cannot be combined"));
    CHECK(any_contains(config_errors("[nse]\nkappa = 1\n[constants]\ncoupling_n = 4\n"),
                       "coupling_n must be < basis dim"));
    CHECK_THROWS_AS(parse_config_text("[stepper]\ndt = 0\n"), ConfigError);
}

TEST_CASE("nse sections build the convective model") {
    const auto cfg = parse_config_text("[nse]\nkappa = 2\ngamma = 0.3\nexperiment = simulate\n[constants]\ncoupling_n = 2\n");
    REQUIRE(cfg.nse != nullptr);
    CHECK(cfg.model->basis.dim() == cfg.nse->grid.size());
    CHECK(cfg.nse_experiment == NseExperiment::simulate);
    CHECK(cfg.model->damping_gamma == 0.3);
}

TEST_CASE("verify-model on the default model passes") {
    RunOverrides o;
    o.out = scratch("verify").string();
    const auto r = run("verify-model", "[model]\nname = default\n", o);
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(fs::path(*o.out) / "manifest.txt"));
    CHECK(fs::exists(fs::path(*o.out) / "verify_model.txt"));
}

TEST_CASE("ergodicity on an H.1-violating spectrum warns and fails") {
    RunOverrides o;
    o.out = scratch("h1").string();
    const auto r = run("ergodicity", slurp(fs::path(config_dir()) / "h1_violating.ini"), o);
    CHECK(r.exit_code != 0);
    REQUIRE_FALSE(r.warnings.empty());
    CHECK(r.warnings[0].find("H.1") != std::string::npos);
    CHECK(slurp(fs::path(*o.out) / "manifest.txt").find("H.1 violated") != std::string::npos);
}

TEST_CASE("simulate is reproducible and worker-independent") {
    RunOverrides a, b, c;
    a.seed = b.seed = c.seed = 7;
    a.out = scratch("sim_a").string();
    b.out = scratch("sim_b").string();
    c.out = scratch("sim_c").string();
    a.workers = b.workers = 1;
    c.workers = 8;
    CHECK(run("simulate", kSmallSim, a).exit_code == 0);
    CHECK(run("simulate", kSmallSim, b).exit_code == 0);
    CHECK(run("simulate", kSmallSim, c).exit_code == 0);
    const auto fa = output_files(*a.out);
    CHECK(fa.size() >= 3);
    CHECK(fa == output_files(*b.out));
    CHECK(fa == output_files(*c.out));

    RunOverrides d = a;
    d.seed = 8;
    d.out = scratch("sim_d").string();
    run("simulate", kSmallSim, d);
    CHECK(fa != output_files(*d.out));
}

TEST_CASE("zero paths gives an empty passing run") {
    RunOverrides o;
    o.paths = 0;
    o.out = scratch("zero").string();
    const auto r = run("simulate", kSmallSim, o);
    CHECK(r.exit_code == 0);
    const auto manifest = slurp(fs::path(*o.out) / "manifest.txt");
    CHECK(manifest.find("n_paths: 0") != std::string::npos);
    CHECK(manifest.find("status: PASS") != std::string::npos);
}

TEST_CASE("cli exit codes") {
    std::ostringstream log, err;
    CHECK(run_cli("simulate", "/nonexistent/seelab.ini", {}, log, err) == 2);

    const auto dir = scratch("cli");
    fs::create_directories(dir);
    const auto bad = dir / "bad.ini";
    std::ofstream(bad) << "[stepper]\ndt = 0.01\ndt = 0.02\n";
    err.str("");
    CHECK(run_cli("simulate", bad.string(), {}, log, err) == 2);
    CHECK(err.str().find("duplicate key") != std::string::npos);
    CHECK_THROWS_AS(run_subcommand("bogus", parse_config_text(""), {}, log), ValidationError);

    const char* bin = std::getenv("SEE_LAB_BIN");
    if (bin == nullptr) return;
    const auto good = dir / "good.ini";
    std::ofstream(good) << kSmallSim;
    const std::string base = std::string(bin) + " simulate --config " + good.string() + " --out " +
                             (dir / "out").string() + " > /dev/null 2>&1";
    CHECK(std::system(base.c_str()) == 0);
    CHECK(fs::exists(dir / "out" / "manifest.txt"));
    const std::string missing = std::string(bin) + " simulate > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(missing.c_str())) == 2);
    const std::string badrun = std::string(bin) + " simulate --config " + bad.string() + " > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(badrun.c_str())) == 2);
}
