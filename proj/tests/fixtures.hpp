#pragma once

#include <cmath>
#include <vector>

#include "seelab/coefficients.hpp"

namespace seelab::fixtures {

/// lambda_i = 4 i^2, M = 16, N = 3, C_1 = 1, f(0) = 0, |sigma(0)|_HS = 0.1.
inline ModelSpec wide_gap_model() {
    std::vector<double> lambda;
    for (int i = 1; i <= 16; ++i) lambda.push_back(4.0 * i * i);
    DriftMap drift;
    drift.kind = DriftKind::linear_decay;
    drift.rates.assign(16, 1.0);
    auto form = make_skew_shear(16, {{0, 1, 2, 0.05}, {1, 0, 3, 0.05}, {2, 3, 5, 0.03}});
    NoiseMap noise;
    noise.amplitudes.assign(16, 0.025);
    noise.c_min = 0.025;
    ModelSpec m{"wide_gap", build_basis(lambda), drift, form, noise};
    m.lipschitz_c1 = 1.0;
    m.coupling_n = 3;
    m.f0_vstar = compute_f0_vstar(m);
    m.sigma0_hs = compute_sigma0_hs(m);
    validate_model(m);
    return m;
}

/// Outward affine push on the two leading modes; the state lives on the sphere most of the time.
inline ModelSpec boundary_active_model(double push = 2.0, double amplitude = 0.04) {
    std::vector<double> lambda;
    for (int i = 1; i <= 16; ++i) lambda.push_back(1.0 * i * i);
    DriftMap drift;
    drift.kind = DriftKind::affine;
    drift.rates.assign(16, 0.0);
    drift.offset.assign(16, 0.0);
    drift.offset[0] = push;
    drift.offset[1] = push / 2;
    auto form = make_skew_shear(16, {{0, 1, 2, 0.2}, {1, 0, 3, 0.2}});
    NoiseMap noise;
    noise.amplitudes.assign(16, amplitude);
    noise.c_min = amplitude;
    ModelSpec m{"boundary_active", build_basis(lambda), drift, form, noise};
    m.coupling_n = 1;
    m.f0_vstar = compute_f0_vstar(m);
    m.sigma0_hs = compute_sigma0_hs(m);
    m.lipschitz_c1 = analytic_c1(m).value();
    validate_model(m);
    return m;
}

/// lambda_i = i^2, N = 1, C_1 = 0.2: slow enough that E d_N stays well above rounding on [0, 2].
inline ModelSpec gentle_model() {
    std::vector<double> lambda;
    for (int i = 1; i <= 16; ++i) lambda.push_back(1.0 * i * i);
    DriftMap drift;
    drift.kind = DriftKind::linear_decay;
    drift.rates.assign(16, 0.2);
    auto form = make_skew_shear(16, {{0, 1, 2, 0.05}});
    NoiseMap noise;
    noise.amplitudes.assign(16, 0.025);
    noise.c_min = 0.025;
    ModelSpec m{"gentle", build_basis(lambda), drift, form, noise};
    m.lipschitz_c1 = 0.2;
    m.coupling_n = 1;
    m.f0_vstar = compute_f0_vstar(m);
    m.sigma0_hs = compute_sigma0_hs(m);
    validate_model(m);
    return m;
}

/// Single mode, additive noise, lambda_1 = 2, no coupling level. The stationary
/// density is proportional to exp(-2 x^2 / s^2) on [-1, 1].
inline ModelSpec one_mode_model(double s = 0.7, double lambda = 2.0) {
    DriftMap drift;
    drift.kind = DriftKind::linear_decay;
    drift.rates = {0.0};
    NoiseMap noise;
    noise.amplitudes = {s};
    ModelSpec m{"one_mode", build_basis({lambda}), drift, BilinearForm{}, noise};
    m.coupling_n = 0;
    m.sigma0_hs = compute_sigma0_hs(m);
    validate_model(m);
    return m;
}

/// Composite Simpson quadrature of the reflected OU stationary second moment.
inline double one_mode_exact_second_moment(double s, double lambda = 2.0) {
    const int k = 200000;
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= k; ++i) {
        const double x = -1.0 + 2.0 * i / k;
        const double w = (i == 0 || i == k) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double f = std::exp(-lambda * x * x / (s * s));
        num += w * x * x * f;
        den += w * f;
    }
    return num / den;
}

}  // namespace seelab::fixtures
