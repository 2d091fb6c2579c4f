#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nse_oracle.hpp"
#include "seelab/nse.hpp"

using namespace seelab;

namespace {

std::vector<double> random_low_modes(const FourierGrid& grid, CounterRng& rng) {
    std::vector<double> c(grid.size());
    for (double& x : c) x = rng.normal();
    return c;
}

NseParams params(int kappa, double gamma = 0.5) {
    NseParams p;
    p.kappa = kappa;
    p.gamma = gamma;
    p.coupling_n = 2;
    return p;
}

}  // namespace

TEST_CASE("mode enumeration") {
    const auto g = build_fourier_grid(1);
    REQUIRE(g.size() == 4);
    CHECK(g.modes[0].k1 == 0);
    CHECK(g.modes[0].k2 == 1);
    CHECK(g.modes[0].cosine);
    CHECK_FALSE(g.modes[1].cosine);
    CHECK(g.modes[2].k1 == 1);
    CHECK(g.modes[2].k2 == 0);
    CHECK(divergence_free_structure(g));
    CHECK_THROWS_AS(build_fourier_grid(0), ValidationError);

    const auto m = build_nse_model(params(1));
    CHECK(m.spec.basis.eigenvalue(0) == 1.0);
    CHECK(m.spec.bilinear.entries.empty());

    const auto g3 = build_fourier_grid(3);
    CHECK(divergence_free_structure(g3));
    for (std::size_t i = 1; i < g3.size(); ++i) CHECK(g3.modes[i - 1].norm2() <= g3.modes[i].norm2());
}

TEST_CASE("model construction") {
    const auto classic = build_nse_model(params(2, 0.0));
    CHECK(classic.spec.damping_gamma == 0.0);
    CHECK(classic.spec.bilinear.kind == BilinearKind::nse_convective);
    CHECK(classic.spec.bilinear.sign == -1.0);
    auto p = params(2);
    p.gamma = -1.0;
    CHECK_THROWS_AS(build_nse_model(p), ValidationError);
    p = params(1);
    p.forcing.assign(10, 0.1);
    CHECK_THROWS_AS(build_nse_model(p), ValidationError);
}

TEST_CASE("trilinear form matches the physical-space quadrature") {
    const auto m = build_nse_model(params(3));
    CounterRng rng(17, 0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto u = random_low_modes(m.grid, rng), v = random_low_modes(m.grid, rng),
                   w = random_low_modes(m.grid, rng);
        const double spectral = nse_trilinear(m, u, v, w);
        const double oracle = fixtures::quadrature_trilinear(m.grid, u, v, w);
        const double scale = m.spec.bilinear.magnitude(u, v, w);
        CHECK(std::abs(spectral - oracle) <= 1e-8 * std::max(std::abs(oracle), scale));
    }
}

TEST_CASE("antisymmetry, cancellation and single-mode self-transport") {
    const auto m = build_nse_model(params(3));
    CounterRng rng(18, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto u = random_low_modes(m.grid, rng), v = random_low_modes(m.grid, rng),
                   w = random_low_modes(m.grid, rng);
        const double scale = m.spec.bilinear.magnitude(u, v, w) + 1e-300;
        CHECK(std::abs(nse_trilinear(m, u, v, v)) <= 1e-12 * m.spec.bilinear.magnitude(u, v, v) + 1e-300);
        CHECK(std::abs(nse_trilinear(m, u, v, w) + nse_trilinear(m, u, w, v)) <= 1e-12 * scale);
    }
    for (std::size_t p = 0; p < m.grid.size(); ++p) {
        std::vector<double> e(m.grid.size(), 0.0);
        e[p] = 1.0;
        for (std::size_t r = 0; r < m.grid.size(); ++r) {
            std::vector<double> w(m.grid.size(), 0.0);
            w[r] = 1.0;
            CHECK(nse_trilinear(m, e, e, w) == 0.0);
        }
    }
    CHECK_THROWS_AS(nse_trilinear(m, std::vector<double>(3), std::vector<double>(3), std::vector<double>(3)),
                    ValidationError);
}

TEST_CASE("nse H.1 threshold") {
    auto p = params(2, 0.7);
    p.noise_amplitude = 0.05;
    const auto m = build_nse_model(p);
    const double s2 = m.spec.sigma0_hs * m.spec.sigma0_hs;
    CHECK(h1_threshold(m.spec, H1Variant::nse) ==
          32.0 / 3.0 * s2 + 12.0 * m.spec.lipschitz_c1 + 16.0 * 0.7 * 0.7);
    CHECK(s2 == doctest::Approx(0.0025 * m.grid.size()));
}

TEST_CASE("experiments") {
    auto p = params(2, 0.2);
    p.coupling_n = 4;
    const auto decaying = build_nse_model(p);
    MonteCarloPlan plan;
    plan.n_paths = 4;
    plan.t_grid = {0.0, 0.5, 1.0};
    const DistanceParams dist{1.0, 0.3};
    std::vector<double> x(decaying.grid.size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.9 / std::sqrt(static_cast<double>(x.size()));
    const auto x0 = StateVector::from(decaying.spec.basis, x);

    const auto verify = run_nse_experiment(decaying, NseExperiment::verify_model, plan, dist, x0);
    CHECK(verify.all_passed());

    const auto sim = run_nse_experiment(decaying, NseExperiment::simulate, plan, dist, x0);
    CHECK(sim.all_passed());
    for (std::size_t j = 1; j < sim.energy.points.size(); ++j) {
        CHECK(sim.energy.points[j].mean <= sim.energy.points[j - 1].mean);
    }

    p.noise_amplitude = 0.05;
    const auto noisy = build_nse_model(p);
    plan.n_paths = 20;
    const auto erg = run_nse_experiment(noisy, NseExperiment::ergodicity, plan, dist,
                                        StateVector::from(noisy.spec.basis, x));
    CHECK(erg.h1_nse.passed);
    bool has_contraction = false;
    for (const auto& v : erg.verdicts) has_contraction = has_contraction || v.name == "contraction";
    CHECK(has_contraction);
    CHECK(erg.all_passed());
}
