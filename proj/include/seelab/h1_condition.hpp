#pragma once

#include <cstddef>
#include <string>

#include "seelab/coefficients.hpp"

namespace seelab {

enum class H1Variant { generic, nse };

/// Outcome of the spectral-gap condition on the coupling level N.
/// passed <=> lambda_next > threshold.
struct H1Report {
    double threshold = 0.0;
    double lambda_next = 0.0;
    bool passed = false;
    H1Variant variant = H1Variant::generic;
    /// Noise is invertible on modes 1..N with a computable bound (diag_affine
    /// amplitudes >= c_min > 0 there, or a custom pseudo-inverse hook).
    bool range_condition = false;
    /// Operator-norm bound on the low-mode pseudo-inverse, 1/(c_min g_lo); 0 if unknown.
    double pseudo_inverse_bound = 0.0;
};

/// generic: (32/3)|f(0)|_{V*}^2 + (32/3)|sigma(0)|_HS^2 + 16 C_1
///          (|f(0)|_{V*} unsquared when model.h1_f0_squared is false)
/// nse:     (32/3)|sigma(0)|_HS^2 + 12 C_1 + 16 gamma^2
double h1_threshold(const ModelSpec& model, H1Variant variant);

H1Report validate_h1(const ModelSpec& model, std::size_t coupling_n, H1Variant variant = H1Variant::generic);

std::string to_string(H1Variant variant);

}  // namespace seelab
