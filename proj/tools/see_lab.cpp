// see-lab: spectral-Galerkin lab for reflected stochastic evolution equations.
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "seelab/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Spectral-Galerkin lab for reflected stochastic evolution equations in the unit ball"};
    app.set_version_flag("--version", seelab::kVersion);

    std::string subcommand;
    std::string config;
    std::uint64_t seed = 0;
    std::size_t paths = 0;
    std::string out;
    std::size_t workers = 0;

    app.add_option("subcommand", subcommand, "simulate | couple | verify-model | ergodicity | nse | convergence")
        ->required()
        ->check(CLI::IsMember(seelab::subcommands()));
    app.add_option("--config", config, "experiment config file")->required();
    auto* seed_opt = app.add_option("--seed", seed, "base seed (overrides [plan] base_seed)");
    auto* paths_opt = app.add_option("--paths", paths, "number of Monte Carlo paths");
    auto* out_opt = app.add_option("--out", out, "output directory");
    auto* workers_opt = app.add_option("--workers", workers, "worker threads (default: SEE_LAB_WORKERS or 1)")
                            ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    seelab::RunOverrides overrides;
    if (*seed_opt) overrides.seed = seed;
    if (*paths_opt) overrides.paths = paths;
    if (*out_opt) overrides.out = out;
    if (*workers_opt) overrides.workers = workers;
    return seelab::run_cli(subcommand, config, overrides, std::cout, std::cerr);
}
