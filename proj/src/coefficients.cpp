#include "seelab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace seelab {

void DriftMap::apply(std::span<const double> u, std::span<double> out) const {
    const std::size_t n = u.size();
    switch (kind) {
        case DriftKind::linear_decay:
            for (std::size_t i = 0; i < n; ++i) out[i] = -rates[i] * u[i];
            break;
        case DriftKind::affine:
            for (std::size_t i = 0; i < n; ++i) out[i] = offset[i] + rates[i] * u[i];
            break;
        case DriftKind::custom_table:
            for (std::size_t i = 0; i < n; ++i) {
                double s = offset[i];
                const double* row = table.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) s += row[j] * u[j];
                out[i] = s;
            }
            break;
    }
}

double BilinearForm::trilinear(std::span<const double> u, std::span<const double> v,
                               std::span<const double> w) const {
    double s = 0.0;
    for (const auto& e : entries) s += e.value * u[e.i] * (v[e.j] * w[e.k] - v[e.k] * w[e.j]);
    return s;
}

double BilinearForm::magnitude(std::span<const double> u, std::span<const double> v,
                               std::span<const double> w) const {
    double s = 0.0;
    for (const auto& e : entries) {
        s += std::abs(e.value * u[e.i]) * (std::abs(v[e.j] * w[e.k]) + std::abs(v[e.k] * w[e.j]));
    }
    return s;
}

void BilinearForm::apply(std::span<const double> u, std::span<const double> v, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& e : entries) {
        const double cu = e.value * u[e.i];
        out[e.k] += cu * v[e.j];
        out[e.j] -= cu * v[e.k];
    }
}

BilinearForm make_skew_shear(std::size_t dim, const std::vector<TensorEntry>& raw) {
    std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, double> merged;
    for (const auto& e : raw) {
        if (e.i >= dim || e.j >= dim || e.k >= dim) {
            throw ValidationError("skew_shear entry (" + std::to_string(e.i + 1) + "," + std::to_string(e.j + 1) +
                                  "," + std::to_string(e.k + 1) + ") outside basis dim " + std::to_string(dim));
        }
        if (e.j == e.k) {
            if (e.value != 0.0) throw ValidationError("skew_shear entry with j == k must vanish");
            continue;
        }
        if (e.j < e.k) {
            merged[{e.i, e.j, e.k}] += e.value;
        } else {
            merged[{e.i, e.k, e.j}] -= e.value;
        }
    }
    BilinearForm form;
    form.kind = BilinearKind::skew_shear;
    for (const auto& [key, value] : merged) {
        if (value == 0.0) continue;
        form.entries.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), value});
    }
    return form;
}

double Modulation::operator()(double r) const { return std::clamp(g0 + slope * r, lo, hi); }

double Modulation::lipschitz() const { return std::abs(slope); }

std::size_t NoiseMap::noise_dim(std::size_t state_dim) const {
    return kind == NoiseKind::diag_affine ? state_dim : columns;
}

void validate_model(const ModelSpec& model) {
    const std::size_t m = model.basis.dim();
    auto fail = [](const std::string& msg) { throw ValidationError(msg); };
    if (model.coupling_n + 1 > m) fail("coupling_n must be < basis dim");
    if (model.lipschitz_c1 < 0 || model.f0_vstar < 0 || model.sigma0_hs < 0 || model.damping_gamma < 0) {
        fail("model constants must be nonnegative");
    }
    switch (model.drift.kind) {
        case DriftKind::linear_decay:
            if (model.drift.rates.size() != m) fail("drift rates must have one entry per mode");
            break;
        case DriftKind::affine:
            if (model.drift.rates.size() != m || model.drift.offset.size() != m) {
                fail("affine drift needs rates and offset of length dim");
            }
            break;
        case DriftKind::custom_table:
            if (model.drift.table.size() != m * m || model.drift.offset.size() != m) {
                fail("custom_table drift needs a dim x dim table and an offset of length dim");
            }
            break;
    }
    for (const auto& e : model.bilinear.entries) {
        if (e.i >= m || e.j >= m || e.k >= m || e.j >= e.k) fail("bilinear tensor entry out of range or unnormalized");
    }
    const auto& noise = model.noise;
    if (noise.kind == NoiseKind::diag_affine) {
        if (noise.amplitudes.size() != m) fail("noise amplitudes must have one entry per mode");
        for (std::size_t i = 0; i < m; ++i) {
            if (noise.amplitudes[i] < 0) fail("noise amplitude at mode " + std::to_string(i + 1) + " is negative");
            if (i < model.coupling_n && noise.amplitudes[i] < noise.c_min) {
                fail("noise amplitude at mode " + std::to_string(i + 1) + " is below c_min");
            }
        }
        const auto& g = noise.modulation;
        if (!(g.lo > 0.0) || g.hi < g.lo) fail("noise modulation needs 0 < g_lo <= g_hi");
    } else {
        if (noise.columns == 0 || noise.matrix.size() != m * noise.columns) {
            fail("custom noise needs a dim x columns matrix");
        }
    }
}

double compute_f0_vstar(const ModelSpec& model) {
    std::vector<double> zero(model.basis.dim(), 0.0), f0(model.basis.dim());
    model.drift.apply(zero, f0);
    return v_star_norm(model.basis, f0);
}

double compute_sigma0_hs(const ModelSpec& model) {
    return eval_noise(model, StateVector::zeros(model.basis)).hs_norm();
}

std::optional<double> analytic_c1(const ModelSpec& model) {
    if (model.drift.kind == DriftKind::custom_table || model.noise.kind == NoiseKind::custom) return std::nullopt;
    const auto lambda = model.basis.eigenvalues();
    double drift_part = 0.0;
    for (std::size_t i = 0; i < lambda.size(); ++i) {
        drift_part = std::max(drift_part, model.drift.rates[i] * model.drift.rates[i] / lambda[i]);
    }
    double s2 = 0.0;
    for (double s : model.noise.amplitudes) s2 += s * s;
    const double lg = model.noise.modulation.lipschitz();
    return drift_part + lg * lg * s2;
}

StateVector eval_drift(const ModelSpec& model, const StateVector& u) {
    require_in_basis(model.basis, u);
    StateVector out = StateVector::zeros(model.basis);
    model.drift.apply(u.coeffs, out.coeffs);
    return out;
}

double trilinear_form(const ModelSpec& model, const StateVector& u, const StateVector& v, const StateVector& w) {
    require_in_basis(model.basis, u);
    require_in_basis(model.basis, v);
    require_in_basis(model.basis, w);
    return model.bilinear.trilinear(u.coeffs, v.coeffs, w.coeffs);
}

StateVector eval_bilinear(const ModelSpec& model, const StateVector& u, const StateVector& v) {
    require_in_basis(model.basis, u);
    require_in_basis(model.basis, v);
    StateVector out = StateVector::zeros(model.basis);
    model.bilinear.apply(u.coeffs, v.coeffs, out.coeffs);
    return out;
}

NoiseOperator::NoiseOperator(std::size_t state_dim, std::size_t noise_dim, std::vector<double> diagonal,
                             std::vector<double> dense)
    : state_dim_(state_dim), noise_dim_(noise_dim), diagonal_(std::move(diagonal)), dense_(std::move(dense)) {}

double NoiseOperator::entry(std::size_t row, std::size_t col) const {
    if (is_diagonal()) return row == col ? diagonal_[row] : 0.0;
    return dense_[row * noise_dim_ + col];
}

void NoiseOperator::apply(std::span<const double> dw, std::span<double> out) const {
    if (is_diagonal()) {
        for (std::size_t i = 0; i < state_dim_; ++i) out[i] = diagonal_[i] * dw[i];
        return;
    }
    for (std::size_t i = 0; i < state_dim_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < noise_dim_; ++j) s += dense_[i * noise_dim_ + j] * dw[j];
        out[i] = s;
    }
}

double NoiseOperator::hs_norm() const {
    double s = 0.0;
    for (double d : is_diagonal() ? diagonal_ : dense_) s += d * d;
    return std::sqrt(s);
}

NoiseOperator eval_noise(const ModelSpec& model, const StateVector& u) {
    require_in_basis(model.basis, u);
    const std::size_t m = model.basis.dim();
    const auto& noise = model.noise;
    if (noise.kind == NoiseKind::custom) return NoiseOperator(m, noise.columns, {}, noise.matrix);
    const double g = noise.modulation(h_norm(u));
    std::vector<double> diag(m);
    for (std::size_t i = 0; i < m; ++i) diag[i] = noise.amplitudes[i] * g;
    return NoiseOperator(m, m, std::move(diag), {});
}

double noise_difference_hs2(const ModelSpec& model, std::span<const double> u, std::span<const double> v) {
    if (model.noise.kind == NoiseKind::custom) return 0.0;
    const double dg = model.noise.modulation(h_norm(u)) - model.noise.modulation(h_norm(v));
    double s2 = 0.0;
    for (double s : model.noise.amplitudes) s2 += s * s;
    return dg * dg * s2;
}

std::vector<double> random_probe_vector(const SpectralBasis& basis, CounterRng& rng, double max_radius) {
    const std::size_t m = basis.dim();
    std::vector<double> v(m, 0.0);
    if (rng.uniform() < 0.25) {
        const std::size_t count = 1 + rng.below(std::min<std::size_t>(3, m));
        for (std::size_t c = 0; c < count; ++c) v[rng.below(m)] = rng.normal();
    } else {
        const double decay = rng.uniform(0.0, 1.5);
        for (std::size_t i = 0; i < m; ++i) v[i] = rng.normal() * std::pow(basis.eigenvalue(i), -0.5 * decay);
    }
    const double norm = h_norm(v);
    if (norm == 0.0) v[0] = 1.0;
    const double radius = max_radius * std::sqrt(rng.uniform(1e-6, 1.0));
    const double scale = radius / h_norm(v);
    for (double& x : v) x *= scale;
    return v;
}

FormBoundsReport check_form_bounds(const ModelSpec& model, std::size_t samples, std::uint64_t seed) {
    const auto& basis = model.basis;
    const auto& form = model.bilinear;
    CounterRng rng(seed, 0);
    FormBoundsReport report;
    report.samples = samples;
    std::vector<double> buu(basis.dim()), buv(basis.dim());
    for (std::size_t s = 0; s < samples; ++s) {
        const auto u = random_probe_vector(basis, rng, 1.0);
        const auto v = random_probe_vector(basis, rng, 1.0);
        const auto w = random_probe_vector(basis, rng, 1.0);
        const double b = form.trilinear(u, v, w);
        const double denom = 2.0 * std::sqrt(v_norm(basis, u) * h_norm(u) * v_norm(basis, w) * h_norm(w)) *
                             v_norm(basis, v);
        if (denom > 0.0) report.max_trilinear_ratio = std::max(report.max_trilinear_ratio, std::abs(b) / denom);

        form.apply(u, u, buu);
        const double denom2 = 2.0 * v_norm(basis, u) * h_norm(u);
        if (denom2 > 0.0) {
            report.max_bilinear_ratio = std::max(report.max_bilinear_ratio, v_star_norm(basis, buu) / denom2);
        }

        const double scale = std::max(form.magnitude(u, v, w), 1e-300);
        report.max_antisymmetry_defect =
            std::max(report.max_antisymmetry_defect, std::abs(b + form.trilinear(u, w, v)) / scale);
        const double scale_vv = std::max(form.magnitude(u, v, v), 1e-300);
        report.max_cancellation_defect =
            std::max(report.max_cancellation_defect, std::abs(form.trilinear(u, v, v)) / scale_vv);
        form.apply(u, v, buv);
        report.max_riesz_defect = std::max(report.max_riesz_defect, std::abs(h_inner(buv, w) - b) / scale);
    }
    report.passed = report.max_trilinear_ratio <= 1.0 + 1e-9 && report.max_bilinear_ratio <= 1.0 + 1e-9 &&
                    report.max_antisymmetry_defect <= 1e-12 && report.max_cancellation_defect <= 1e-12 &&
                    report.max_riesz_defect <= 1e-12;
    return report;
}

LipschitzReport lipschitz_probe(const ModelSpec& model, std::size_t pairs, std::uint64_t seed) {
    const auto& basis = model.basis;
    const std::size_t m = basis.dim();
    CounterRng rng(seed, 1);
    LipschitzReport report;
    report.pairs = pairs;
    report.declared = model.lipschitz_c1;
    std::vector<double> fu(m), fv(m), diff(m);
    for (std::size_t p = 0; p < pairs; ++p) {
        auto u = random_probe_vector(basis, rng, 1.0);
        std::vector<double> v;
        switch (p % 3) {
            case 0:
                v = random_probe_vector(basis, rng, 1.0);
                break;
            case 1: {  // radial neighbour: saturates the modulation slope
                v = u;
                const double eps = rng.uniform(1e-4, 0.2);
                for (double& x : v) x *= 1.0 + eps;
                break;
            }
            default: {
                v = u;
                const auto d = random_probe_vector(basis, rng, 0.05);
                for (std::size_t i = 0; i < m; ++i) v[i] += d[i];
                break;
            }
        }
        for (std::size_t i = 0; i < m; ++i) diff[i] = u[i] - v[i];
        const double dist2 = h_inner(diff, diff);
        if (dist2 == 0.0) continue;
        model.drift.apply(u, fu);
        model.drift.apply(v, fv);
        for (std::size_t i = 0; i < m; ++i) fu[i] -= fv[i];
        const double df = v_star_norm(basis, fu);
        const double ratio = (df * df + noise_difference_hs2(model, u, v)) / dist2;
        report.estimate = std::max(report.estimate, ratio);
    }
    report.passed = report.estimate <= model.lipschitz_c1 * (1.0 + 1e-9);
    return report;
}

}  // namespace seelab
