#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "seelab/coefficients.hpp"
#include "seelab/coupling.hpp"
#include "seelab/ergodicity.hpp"
#include "seelab/nse.hpp"
#include "seelab/reflection.hpp"

namespace seelab {

/// Every violation found while parsing, one "line N: ..." message each.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

struct ErgodicitySettings {
    std::vector<double> contraction_grid{0.05, 0.1, 0.25, 0.5, 1.0, 2.0};
    std::size_t contraction_pairs = 20;
    double dsmall_level = 1.0;
    double dsmall_time = 4.0;
    double burn = 2.0;
    double average = 200.0;
    double thin = 1.0;
    double invariance_horizon = 0.5;
    std::size_t test_functions = 10;
};

struct OutputSettings {
    std::string directory = "see-lab-out";
    std::string formats = "csv";
    std::size_t trajectories = 4;  // trajectory CSVs written by simulate/couple
};

struct ExperimentConfig {
    std::string source;          // file contents, hashed into the manifest
    std::uint64_t hash = 0;
    std::shared_ptr<const ModelSpec> model;
    std::shared_ptr<const NseModel> nse;  // set when the file has an [nse] section
    NseExperiment nse_experiment = NseExperiment::verify_model;
    StepperConfig stepper;
    double horizon = 2.0;
    MonteCarloPlan plan;
    StateVector x0;
    StateVector y0;
    DistanceParams distance;
    bool delta_auto = true;
    ErgodicitySettings ergodicity;
    std::vector<double> penalties{10.0, 100.0, 1000.0, 10000.0};
    OutputSettings output;
};

/// Strict key = value format with [sections] and '#' comments. Unknown keys,
/// duplicates and cross-field violations are all reported before throwing.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace seelab
