#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seelab/coefficients.hpp"
#include "seelab/ergodicity.hpp"
#include "seelab/h1_condition.hpp"

namespace seelab {

/// One real divergence-free Fourier mode on the torus [0, 2pi]^2:
///   phi(x) = (-k2, k1)/|k| * T(k . x) / (sqrt(2) pi),  T = cos or sin.
/// The representative k has k1 > 0, or k1 == 0 and k2 > 0.
struct FourierMode {
    int k1 = 0;
    int k2 = 0;
    bool cosine = true;

    int norm2() const { return k1 * k1 + k2 * k2; }
};

/// Mean-zero modes with |k| <= kappa, ordered by |k|^2, then k1, k2, cos before sin.
struct FourierGrid {
    int max_wavenumber = 0;
    std::vector<FourierMode> modes;

    std::size_t size() const { return modes.size(); }
};

FourierGrid build_fourier_grid(int kappa);

/// Every mode has integer direction (-k2, k1) with zero divergence k . (-k2, k1) = 0,
/// no k = 0 mode, and no duplicated (k, parity). Exact integer checks.
bool divergence_free_structure(const FourierGrid& grid);

struct NseParams {
    int kappa = 4;
    double gamma = 1.0;
    double noise_amplitude = 0.0;
    /// amplitude_i = noise_amplitude * lambda_i^(-noise_decay)
    double noise_decay = 0.0;
    Modulation modulation;
    /// Coefficients of the constant forcing on the leading modes; zero-padded.
    std::vector<double> forcing;
    std::size_t coupling_n = 1;
};

struct NseModel {
    FourierGrid grid;
    double gamma = 0.0;
    std::vector<double> forcing;
    ModelSpec spec;
};

/// Throws ValidationError for kappa < 1, gamma < 0, or forcing longer than the mode set.
NseModel build_nse_model(const NseParams& params);

/// b(phi_p, phi_q, phi_r) for single modes, exact via the exponential expansion.
double nse_mode_coefficient(const FourierGrid& grid, std::size_t p, std::size_t q, std::size_t r);

/// b(u, v, w) = int (u . grad) v . w over the torus, by direct spectral convolution.
double nse_trilinear(const NseModel& model, std::span<const double> u, std::span<const double> v,
                     std::span<const double> w);

enum class NseExperiment { verify_model, simulate, ergodicity };

NseExperiment parse_nse_experiment(const std::string& name);
std::string to_string(NseExperiment kind);

struct NseReport {
    NseExperiment kind = NseExperiment::verify_model;
    std::vector<Verdict> verdicts;
    H1Report h1_generic;
    H1Report h1_nse;
    EstimateSeries energy;  // simulate: mean |X(t)|^2
    std::vector<double> max_energy_increase;  // simulate: per path, relative
    std::string notes;

    bool all_passed() const;
};

/// Dispatches into the generic property suites, stepper and coupling battery.
NseReport run_nse_experiment(const NseModel& model, NseExperiment kind, const MonteCarloPlan& plan,
                             const DistanceParams& distance, const StateVector& x0);

}  // namespace seelab
