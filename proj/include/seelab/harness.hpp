#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "seelab/config.hpp"
#include "seelab/ergodicity.hpp"

namespace seelab {

inline constexpr const char* kVersion = "0.1.0";

/// Command-line values that take precedence over the config file.
struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> paths;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
};

struct RunResult {
    int exit_code = 0;
    std::vector<Verdict> verdicts;
    std::vector<std::string> files;
    std::vector<std::string> warnings;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes every output plus manifest.txt under the
/// output directory. Exit code 0 iff all verdicts pass; 1 on a failed verdict.
/// Validation errors propagate to the caller.
RunResult run_subcommand(const std::string& subcommand, ExperimentConfig cfg, const RunOverrides& overrides,
                         std::ostream& log);

/// CLI entry point: parses the config, runs, prints failures to `err`.
/// Exit 2 for usage/config errors, 3 for simulation failures.
int run_cli(const std::string& subcommand, const std::string& config_path, const RunOverrides& overrides,
            std::ostream& log, std::ostream& err);

}  // namespace seelab
