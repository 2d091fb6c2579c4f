#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seelab/rng.hpp"
#include "seelab/spectral_space.hpp"

namespace seelab {

enum class DriftKind { linear_decay, affine, custom_table };

/// The drift f. All kinds are affine in u:
///   linear_decay: f_i(u) = -rates_i u_i
///   affine:       f_i(u) = offset_i + rates_i u_i
///   custom_table: f(u) = offset + J u with J row-major (dim x dim)
struct DriftMap {
    DriftKind kind = DriftKind::linear_decay;
    std::vector<double> rates;
    std::vector<double> offset;
    std::vector<double> table;

    void apply(std::span<const double> u, std::span<double> out) const;
};

enum class BilinearKind { zero, skew_shear, nse_convective };

/// One antisymmetric pair of tensor entries: c_{i,j,k} = value, c_{i,k,j} = -value, j < k.
struct TensorEntry {
    std::uint32_t i = 0;
    std::uint32_t j = 0;
    std::uint32_t k = 0;
    double value = 0.0;
};

/// b(u, v, w) = sum c_{ijk} u_i v_j w_k with c antisymmetric in its last two indices.
/// `sign` is the coefficient with which B(u,u) enters the right-hand side of the
/// evolution equation: +1 for the generic form, -1 for convective transport.
struct BilinearForm {
    BilinearKind kind = BilinearKind::zero;
    std::vector<TensorEntry> entries;
    double sign = 1.0;

    double trilinear(std::span<const double> u, std::span<const double> v, std::span<const double> w) const;
    /// Riesz representation of w -> b(u, v, w); accumulated into out after zeroing.
    void apply(std::span<const double> u, std::span<const double> v, std::span<double> out) const;
    /// sum |c_{ijk} u_i v_j w_k| over stored terms; the rounding scale of trilinear().
    double magnitude(std::span<const double> u, std::span<const double> v, std::span<const double> w) const;
};

/// Builds a normalized skew tensor from raw (i, j, k, value) triples. Entries with
/// j > k are flipped; j == k is rejected; duplicates are summed.
BilinearForm make_skew_shear(std::size_t dim, const std::vector<TensorEntry>& raw);

/// Bounded modulation g(r) = clamp(g0 + slope * r, lo, hi), r = |u|_H.
struct Modulation {
    double g0 = 1.0;
    double slope = 0.0;
    double lo = 1.0;
    double hi = 1.0;

    double operator()(double r) const;
    double lipschitz() const;
};

enum class NoiseKind { diag_affine, custom };

/// sigma(u). diag_affine: dW_i -> amplitudes_i g(|u|_H) dW_i e_i (K = dim).
/// custom: constant dense matrix (dim x K, row-major) with an optional
/// pseudo-inverse hook on the low modes.
struct NoiseMap {
    NoiseKind kind = NoiseKind::diag_affine;
    std::vector<double> amplitudes;
    double c_min = 0.0;
    Modulation modulation;
    std::vector<double> matrix;
    std::size_t columns = 0;
    /// (state y, low-mode target in H, out in noise space): solves sigma(y) beta = target.
    std::function<void(std::span<const double>, std::span<const double>, std::span<double>)> pseudo_inverse;

    std::size_t noise_dim(std::size_t state_dim) const;
};

struct ModelSpec {
    std::string name = "model";
    SpectralBasis basis;
    DriftMap drift;
    BilinearForm bilinear;
    NoiseMap noise;
    double lipschitz_c1 = 0.0;
    double f0_vstar = 0.0;
    double sigma0_hs = 0.0;
    double damping_gamma = 0.0;
    std::size_t coupling_n = 1;
    /// H.1 with |f(0)|^2 (default) or the unsquared |f(0)|.
    bool h1_f0_squared = true;
};

/// Validates referential integrity (sizes, N+1 <= dim, nonnegative constants,
/// low-mode noise floor). Throws ValidationError.
void validate_model(const ModelSpec& model);

/// Exact values for the built-in kinds: |f(0)|_{V*} and |sigma(0)|_HS.
double compute_f0_vstar(const ModelSpec& model);
double compute_sigma0_hs(const ModelSpec& model);
/// Analytic Lipschitz bound C_1 for built-in drift and diag_affine noise
/// (max_i rate_i^2/lambda_i + Lip(g)^2 sum s_i^2). Custom kinds return nullopt.
std::optional<double> analytic_c1(const ModelSpec& model);

StateVector eval_drift(const ModelSpec& model, const StateVector& u);
double trilinear_form(const ModelSpec& model, const StateVector& u, const StateVector& v, const StateVector& w);
StateVector eval_bilinear(const ModelSpec& model, const StateVector& u, const StateVector& v);

/// sigma(u) as a linear map from noise space to state space.
class NoiseOperator {
public:
    NoiseOperator(std::size_t state_dim, std::size_t noise_dim, std::vector<double> diagonal,
                  std::vector<double> dense);

    std::size_t state_dim() const { return state_dim_; }
    std::size_t noise_dim() const { return noise_dim_; }
    bool is_diagonal() const { return dense_.empty(); }
    /// Entry (row, col) of the dim x K matrix.
    double entry(std::size_t row, std::size_t col) const;
    void apply(std::span<const double> dw, std::span<double> out) const;
    double hs_norm() const;

private:
    std::size_t state_dim_;
    std::size_t noise_dim_;
    std::vector<double> diagonal_;
    std::vector<double> dense_;
};

NoiseOperator eval_noise(const ModelSpec& model, const StateVector& u);

/// |sigma(u) - sigma(v)|_HS^2 without materializing either operator.
double noise_difference_hs2(const ModelSpec& model, std::span<const double> u, std::span<const double> v);

struct FormBoundsReport {
    double max_trilinear_ratio = 0.0;  // |b(u,v,w)| / (2 ||u||^.5 |u|^.5 ||w||^.5 |w|^.5 ||v||)
    double max_bilinear_ratio = 0.0;   // ||B(u,u)||_{V*} / (2 ||u|| |u|_H)
    double max_antisymmetry_defect = 0.0;  // |b(u,v,w) + b(u,w,v)| / scale
    double max_cancellation_defect = 0.0;  // |b(u,v,v)| / scale
    double max_riesz_defect = 0.0;         // |<B(u,v),w> - b(u,v,w)| / scale
    std::size_t samples = 0;
    bool passed = false;
};

/// Random-sample check of the form bound and the algebraic identities.
FormBoundsReport check_form_bounds(const ModelSpec& model, std::size_t samples, std::uint64_t seed);

struct LipschitzReport {
    double estimate = 0.0;  // max (|f(u)-f(v)|_{V*}^2 + |sigma(u)-sigma(v)|_HS^2) / |u-v|_H^2
    double declared = 0.0;
    std::size_t pairs = 0;
    bool passed = false;
};

LipschitzReport lipschitz_probe(const ModelSpec& model, std::size_t pairs, std::uint64_t seed);

/// Random probe vector with randomly chosen spectral decay and scale, used by
/// the property checks. Lives in the ball of radius `max_radius`.
std::vector<double> random_probe_vector(const SpectralBasis& basis, CounterRng& rng, double max_radius);

}  // namespace seelab
