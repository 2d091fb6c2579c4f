#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace seelab {

/// Raised on invalid inputs to any constructor or operation.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Tolerance for closed-ball membership checks on stepped states.
inline constexpr double kBallTolerance = 1e-12;

/// Finite truncation of the eigenbasis of the diagonal operator A.
/// Eigenvalues are strictly positive and nondecreasing. Immutable.
class SpectralBasis {
public:
    explicit SpectralBasis(std::vector<double> eigenvalues);

    std::size_t dim() const { return eigenvalues_.size(); }
    /// 0-based: eigenvalue(0) is lambda_1.
    double eigenvalue(std::size_t index) const { return eigenvalues_.at(index); }
    std::span<const double> eigenvalues() const { return eigenvalues_; }
    /// Content hash of the eigenvalue sequence; tags the vectors that live here.
    std::uint64_t id() const { return id_; }

    /// lambda_{N+1} for coupling level N (i.e. the (N+1)-th stored value).
    double lambda_next(std::size_t coupling_n) const;

private:
    std::vector<double> eigenvalues_;
    std::uint64_t id_;
};

SpectralBasis build_basis(std::vector<double> eigenvalues);

/// Coordinates in the eigenbasis, tagged with the id of the basis.
struct StateVector {
    std::vector<double> coeffs;
    std::uint64_t basis_id = 0;

    std::size_t size() const { return coeffs.size(); }
    double operator[](std::size_t i) const { return coeffs[i]; }
    double& operator[](std::size_t i) { return coeffs[i]; }

    static StateVector zeros(const SpectralBasis& basis);
    /// Unit vector e_{index+1} (0-based index).
    static StateVector unit(const SpectralBasis& basis, std::size_t index);
    static StateVector from(const SpectralBasis& basis, std::vector<double> coeffs);
};

/// Throws unless `v` belongs to `basis`.
void require_in_basis(const SpectralBasis& basis, const StateVector& v);

double h_norm(std::span<const double> coeffs);
double h_norm(const StateVector& v);
double h_inner(std::span<const double> a, std::span<const double> b);

/// sqrt(sum lambda_i a_i^2)
double v_norm(const SpectralBasis& basis, std::span<const double> coeffs);
double v_norm(const SpectralBasis& basis, const StateVector& v);
double v_norm_squared(const SpectralBasis& basis, std::span<const double> coeffs);

/// Diagonal dual norm sqrt(sum a_i^2 / lambda_i).
double v_star_norm(const SpectralBasis& basis, std::span<const double> coeffs);
double v_star_norm(const SpectralBasis& basis, const StateVector& v);

/// P_N: keeps the first N coordinates, zeroes the rest. Requires 0 <= N <= dim.
StateVector project_low_modes(const StateVector& v, std::size_t n);

struct PoincareGap {
    bool holds = false;
    double residual = 0.0;  // ||v||^2 - lambda_{N+1} |(I - P_N) v|_H^2
};

/// Poincare-type inequality on the high modes. Requires N < dim.
PoincareGap poincare_gap_check(const SpectralBasis& basis, const StateVector& v, std::size_t n);

}  // namespace seelab
