#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "seelab/coefficients.hpp"
#include "seelab/rng.hpp"

namespace seelab {

/// A step produced non-finite values.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Scheme { projected, penalized };

/// Semi-implicit stepping: A implicit per mode; f, B, damping, noise explicit
/// (noise evaluated at the pre-step state).
struct StepperConfig {
    double dt = 1e-3;
    Scheme scheme = Scheme::projected;
    double penalty_n = 1e4;  // only used by Scheme::penalized
};

void validate_stepper(const StepperConfig& cfg);
std::string to_string(Scheme scheme);

/// Number of steps covering [0, T]; T must be a multiple of dt within 1e-9.
std::size_t steps_for(double horizon, double dt);

/// Radial projection onto the closed unit ball of H.
StateVector project_ball(const StateVector& y);
/// In-place variant; returns true when y was outside the ball.
bool project_ball_inplace(std::span<double> y);

/// Closed-form solution of x = z - dt*n (x - Pi(x)).
void penalize_inplace(std::span<double> z, double dt_n);

/// Reusable per-path stepping kernel holding its own scratch space.
class ReflectedStepper {
public:
    ReflectedStepper(const ModelSpec& model, const StepperConfig& cfg);

    std::size_t state_dim() const { return model_->basis.dim(); }
    std::size_t noise_dim() const { return noise_dim_; }
    const StepperConfig& config() const { return cfg_; }

    /// Explicit update followed by the implicit solve of A, before any reflection.
    void free_step(std::span<const double> state, std::span<const double> dw, std::span<double> out,
                   std::span<const double> extra_drift = {});

    /// One full step. `dl` receives the reflection displacement (zero when the
    /// constraint is inactive). `extra_drift` is added to the explicit drift.
    /// Returns true when the constraint acted.
    bool advance(std::span<double> state, std::span<const double> dw, std::span<double> dl,
                 std::span<const double> extra_drift = {});

private:
    const ModelSpec* model_;
    StepperConfig cfg_;
    std::size_t noise_dim_;
    std::vector<double> drift_, bilinear_, noise_, pre_;
};

struct ProjectedStep {
    StateVector state;
    StateVector dl;
};

ProjectedStep step_projected(const ModelSpec& model, const StateVector& state, const StepperConfig& cfg,
                             std::span<const double> noise);
StateVector step_penalized(const ModelSpec& model, const StateVector& state, const StepperConfig& cfg,
                           std::span<const double> noise);

struct LedgerEntry {
    std::size_t step = 0;  // dL over [t_step, t_{step+1}]
    std::vector<double> dl;
};

/// Sparse record of the reflection increments; steps without an entry have dL = 0.
struct LocalTimeLedger {
    std::size_t steps = 0;
    std::vector<LedgerEntry> entries;
    double total_variation = 0.0;

    std::vector<double> increment(std::size_t step, std::size_t dim) const;
};

struct PathSample {
    std::string model_name;
    std::vector<double> times;
    std::vector<StateVector> states;
    LocalTimeLedger ledger;
    std::uint64_t noise_seed = 0;
    std::uint64_t path_index = 0;
};

void check_initial_state(const StateVector& x0, const char* what);

/// Drives one reflected path, calling obs(step_after, state, dl) after every step.
template <class Observer>
void run_path(ReflectedStepper& stepper, std::span<double> state, std::size_t steps, std::uint64_t seed,
              std::uint64_t path_index, Observer&& obs) {
    std::vector<double> dw(stepper.noise_dim()), dl(stepper.state_dim());
    const double dt = stepper.config().dt;
    for (std::size_t k = 0; k < steps; ++k) {
        gaussian_increments(seed, path_index, k, dt, dw);
        stepper.advance(state, dw, dl);
        obs(k + 1, std::span<const double>(state), std::span<const double>(dl));
    }
}

PathSample simulate_path(const ModelSpec& model, const StateVector& x0, double horizon, const StepperConfig& cfg,
                         std::uint64_t seed, std::uint64_t path_index);

/// CSV: t,mode_1,...,mode_M,dl_norm (dl_norm of the increment that produced the row).
void write_path_csv(const PathSample& path, std::ostream& os);
std::string path_csv_name(std::uint64_t seed, std::uint64_t path_index);

struct ObstacleReport {
    std::vector<double> sums;   // one per trial
    double min_sum = 0.0;
    double tolerance = 0.0;     // 1e-10 * total variation
    double max_angle = 0.0;     // between nonzero dL_k and -X_{k+1}, radians
    double max_contact_defect = 0.0;  // | |X_{k+1}| - 1 | at contact steps
    bool passed = false;        // obstacle sums only
    bool direction_ok = false;  // max_angle <= 1e-8 and contact defect <= tol_ball
};

/// sum_k (phi(t_k) - X(t_{k+1}), dL_k) for random ball-valued piecewise-constant phi.
ObstacleReport discrete_obstacle_inequality(const PathSample& path, std::size_t trials, std::uint64_t seed);

/// Obstacle sum for one explicit test path phi (one state per grid time).
double obstacle_sum(const PathSample& path, std::span<const StateVector> phi);

struct ConvergenceRow {
    double penalty_n = 0.0;
    double sup_gap = 0.0;     // sup_k |X^pen(t_k) - X^proj(t_k)|_H
    double max_excess = 0.0;  // sup_k (|X^pen(t_k)|_H - 1)_+
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    bool nonincreasing = false;
    bool strictly_decreasing = false;
    double min_decade_factor = 0.0;  // min over consecutive rows of gap ratio, per decade of n
};

ConvergenceTable penalization_convergence_study(const ModelSpec& model, const StateVector& x0, double horizon,
                                                double dt, const std::vector<double>& n_list, std::uint64_t seed,
                                                std::uint64_t path_index = 0);

}  // namespace seelab
