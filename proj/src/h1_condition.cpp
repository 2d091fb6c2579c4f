#include "seelab/h1_condition.hpp"

namespace seelab {

double h1_threshold(const ModelSpec& model, H1Variant variant) {
    const double sigma2 = model.sigma0_hs * model.sigma0_hs;
    if (variant == H1Variant::nse) {
        return (32.0 / 3.0) * sigma2 + 12.0 * model.lipschitz_c1 +
               16.0 * model.damping_gamma * model.damping_gamma;
    }
    const double f0 = model.h1_f0_squared ? model.f0_vstar * model.f0_vstar : model.f0_vstar;
    return (32.0 / 3.0) * f0 + (32.0 / 3.0) * sigma2 + 16.0 * model.lipschitz_c1;
}

H1Report validate_h1(const ModelSpec& model, std::size_t coupling_n, H1Variant variant) {
    H1Report report;
    report.variant = variant;
    report.lambda_next = model.basis.lambda_next(coupling_n);
    report.threshold = h1_threshold(model, variant);
    report.passed = report.lambda_next > report.threshold;

    const auto& noise = model.noise;
    if (noise.kind == NoiseKind::diag_affine) {
        bool ok = noise.c_min > 0.0 && noise.modulation.lo > 0.0;
        for (std::size_t i = 0; i < coupling_n && ok; ++i) ok = noise.amplitudes[i] >= noise.c_min;
        report.range_condition = ok;
        if (ok) report.pseudo_inverse_bound = 1.0 / (noise.c_min * noise.modulation.lo);
    } else {
        report.range_condition = static_cast<bool>(noise.pseudo_inverse);
    }
    return report;
}

std::string to_string(H1Variant variant) { return variant == H1Variant::nse ? "nse" : "generic"; }

}  // namespace seelab
