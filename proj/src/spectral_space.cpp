#include "seelab/spectral_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace seelab {
namespace {

std::uint64_t hash_eigenvalues(std::span<const double> values) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (double v : values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFFu;
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

}  // namespace

SpectralBasis::SpectralBasis(std::vector<double> eigenvalues) : eigenvalues_(std::move(eigenvalues)) {
    if (eigenvalues_.empty()) throw ValidationError("spectral basis needs at least one eigenvalue");
    for (std::size_t i = 0; i < eigenvalues_.size(); ++i) {
        const double l = eigenvalues_[i];
        if (!std::isfinite(l) || l <= 0.0) {
            throw ValidationError("eigenvalue at index " + std::to_string(i) + " is not strictly positive");
        }
        if (i > 0 && l < eigenvalues_[i - 1]) {
            throw ValidationError("eigenvalue at index " + std::to_string(i) + " decreases");
        }
    }
    id_ = hash_eigenvalues(eigenvalues_);
}

double SpectralBasis::lambda_next(std::size_t coupling_n) const {
    if (coupling_n >= dim()) {
        throw ValidationError("lambda_{N+1} undefined: coupling level N=" + std::to_string(coupling_n) +
                              " must be < basis dim " + std::to_string(dim()));
    }
    return eigenvalues_[coupling_n];
}

SpectralBasis build_basis(std::vector<double> eigenvalues) { return SpectralBasis(std::move(eigenvalues)); }

StateVector StateVector::zeros(const SpectralBasis& basis) {
    return StateVector{std::vector<double>(basis.dim(), 0.0), basis.id()};
}

StateVector StateVector::unit(const SpectralBasis& basis, std::size_t index) {
    if (index >= basis.dim()) throw ValidationError("unit vector index out of range");
    StateVector v = zeros(basis);
    v.coeffs[index] = 1.0;
    return v;
}

StateVector StateVector::from(const SpectralBasis& basis, std::vector<double> coeffs) {
    if (coeffs.size() != basis.dim()) {
        throw ValidationError("state has " + std::to_string(coeffs.size()) + " coefficients, basis dim is " +
                              std::to_string(basis.dim()));
    }
    return StateVector{std::move(coeffs), basis.id()};
}

void require_in_basis(const SpectralBasis& basis, const StateVector& v) {
    if (v.coeffs.size() != basis.dim()) {
        throw ValidationError("dimension mismatch: state has " + std::to_string(v.coeffs.size()) +
                              " coefficients, basis dim is " + std::to_string(basis.dim()));
    }
    if (v.basis_id != basis.id()) throw ValidationError("state vector belongs to a different basis");
}

double h_inner(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double h_norm(std::span<const double> coeffs) { return std::sqrt(h_inner(coeffs, coeffs)); }
double h_norm(const StateVector& v) { return h_norm(v.coeffs); }

double v_norm_squared(const SpectralBasis& basis, std::span<const double> coeffs) {
    const auto lambda = basis.eigenvalues();
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) s += lambda[i] * coeffs[i] * coeffs[i];
    return s;
}

double v_norm(const SpectralBasis& basis, std::span<const double> coeffs) {
    return std::sqrt(v_norm_squared(basis, coeffs));
}

double v_norm(const SpectralBasis& basis, const StateVector& v) {
    require_in_basis(basis, v);
    return v_norm(basis, std::span<const double>(v.coeffs));
}

double v_star_norm(const SpectralBasis& basis, std::span<const double> coeffs) {
    const auto lambda = basis.eigenvalues();
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) s += coeffs[i] * coeffs[i] / lambda[i];
    return std::sqrt(s);
}

double v_star_norm(const SpectralBasis& basis, const StateVector& v) {
    require_in_basis(basis, v);
    return v_star_norm(basis, std::span<const double>(v.coeffs));
}

StateVector project_low_modes(const StateVector& v, std::size_t n) {
    if (n > v.coeffs.size()) {
        throw ValidationError("projection level N=" + std::to_string(n) + " exceeds dim " +
                              std::to_string(v.coeffs.size()));
    }
    StateVector out = v;
    for (std::size_t i = n; i < out.coeffs.size(); ++i) out.coeffs[i] = 0.0;
    return out;
}

PoincareGap poincare_gap_check(const SpectralBasis& basis, const StateVector& v, std::size_t n) {
    require_in_basis(basis, v);
    const double lambda_next = basis.lambda_next(n);
    const double v2 = v_norm_squared(basis, v.coeffs);
    double high = 0.0;
    for (std::size_t i = n; i < v.coeffs.size(); ++i) high += v.coeffs[i] * v.coeffs[i];
    PoincareGap gap;
    gap.residual = v2 - lambda_next * high;
    gap.holds = gap.residual >= -1e-12 * std::max(v2, 1e-300);
    return gap;
}

}  // namespace seelab
