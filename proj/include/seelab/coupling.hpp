#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "seelab/reflection.hpp"

namespace seelab {

/// d_N(x, y) = min(n_tilde * |x - y|_H^(2 delta / (1 + delta)), 1).
struct DistanceParams {
    double n_tilde = 1.0;
    double delta = 0.5;
};

void validate_distance(const DistanceParams& p);
double d_distance(std::span<const double> x, std::span<const double> y, const DistanceParams& p);
double d_distance(const StateVector& x, const StateVector& y, const DistanceParams& p);

/// beta = (lambda_{N+1}/2) sigma(y)^{-1} P_N (x - y), written into `out` (noise space).
void girsanov_shift_into(const ModelSpec& model, std::span<const double> x, std::span<const double> y,
                         std::span<double> out);
std::vector<double> girsanov_shift(const ModelSpec& model, const StateVector& x, const StateVector& y);

/// lambda_{N+1} / (2 c_min g_lo): the bound |beta|_{l2} <= C |x - y|_H for diag_affine noise.
double shift_bound_constant(const ModelSpec& model);

/// Steps the pair (X, Y) with one shared Brownian increment per step. With
/// `correction` on, Y's drift gains (lambda_{N+1}/2) P_N (X - Y); reflection is
/// applied to each component afterwards.
class CoupledStepper {
public:
    CoupledStepper(const ModelSpec& model, const StepperConfig& cfg, bool correction = true);

    std::size_t state_dim() const { return x_.state_dim(); }
    std::size_t noise_dim() const { return x_.noise_dim(); }
    const StepperConfig& config() const { return x_.config(); }
    bool correction() const { return correction_; }

    void advance(std::span<double> x, std::span<double> y, std::span<const double> dw, std::span<double> dlx,
                 std::span<double> dly);

private:
    const ModelSpec* model_;
    ReflectedStepper x_;
    ReflectedStepper y_;
    bool correction_;
    double half_gap_;
    std::vector<double> extra_;
};

/// obs(step_after, x, y) after every step; obs is not called for the initial state.
template <class Observer>
void run_coupled(CoupledStepper& stepper, std::span<double> x, std::span<double> y, std::size_t steps,
                 std::uint64_t seed, std::uint64_t path_index, Observer&& obs) {
    std::vector<double> dw(stepper.noise_dim()), dlx(stepper.state_dim()), dly(stepper.state_dim());
    const double dt = stepper.config().dt;
    for (std::size_t k = 0; k < steps; ++k) {
        gaussian_increments(seed, path_index, k, dt, dw);
        stepper.advance(x, y, dw, dlx, dly);
        obs(k + 1, std::span<const double>(x), std::span<const double>(y));
    }
}

struct CoupledPath {
    PathSample x_path;
    PathSample y_path;
    std::vector<std::vector<double>> shift_record;  // beta(t_k), k = 0..steps
    std::vector<double> shift_cost_cumulative;      // trapezoid of |beta|^2 up to t_k
    double shift_cost = 0.0;
    bool h1_passed = false;
    std::string warning;
};

CoupledPath simulate_coupled(const ModelSpec& model, const StateVector& x, const StateVector& y, double horizon,
                             const StepperConfig& cfg, std::uint64_t seed, std::uint64_t path_index);

/// CSV: t,|x-y|_H,d_N,shift_cost_cum
void write_coupled_csv(const CoupledPath& path, const DistanceParams& p, std::ostream& os);
std::string coupled_csv_name(std::uint64_t seed, std::uint64_t path_index);

}  // namespace seelab
