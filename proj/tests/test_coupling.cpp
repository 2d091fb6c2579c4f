#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "seelab/coupling.hpp"

using namespace seelab;

namespace {

ModelSpec additive_model(double s, std::size_t n = 2) {
    DriftMap d;
    d.rates = {0, 0, 0, 0};
    NoiseMap noise;
    noise.amplitudes.assign(4, s);
    noise.c_min = s;
    ModelSpec m{"additive", build_basis({1, 4, 9, 16}), d, BilinearForm{}, noise};
    m.coupling_n = n;
    validate_model(m);
    return m;
}

}  // namespace

TEST_CASE("distance d_N") {
    const auto b = build_basis({1, 2});
    const auto x = StateVector::from(b, {0.5, 0.0});
    CHECK(d_distance(x, x, {1.0, 0.5}) == 0.0);
    CHECK(d_distance(StateVector::from(b, {1, 0}), StateVector::zeros(b), {1.0, 1.0 / 3.0}) == doctest::Approx(1.0));
    CHECK(d_distance(StateVector::from(b, {1e-4, 0}), StateVector::zeros(b), {10.0, 1.0 / 3.0}) ==
          doctest::Approx(0.1));
    CHECK_THROWS_AS(validate_distance({0.0, 0.5}), ValidationError);
    CHECK_THROWS_AS(validate_distance({1.0, 1.0}), ValidationError);
}

TEST_CASE("girsanov shift") {
    const auto m = additive_model(1.0);
    const auto y = StateVector::zeros(m.basis);
    CHECK(h_norm(StateVector::from(m.basis, girsanov_shift(m, StateVector::unit(m.basis, 3), y))) == 0.0);
    const double eps = 1e-3;
    auto x = StateVector::zeros(m.basis);
    x[0] = eps;
    const auto beta = girsanov_shift(m, x, y);
    CHECK(beta[0] == doctest::Approx(m.basis.lambda_next(2) / 2 * eps));
    CHECK(beta[1] == 0.0);

    const auto p = fixtures::wide_gap_model();
    const double c = shift_bound_constant(p);
    CounterRng rng(3, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto a = StateVector::from(p.basis, random_probe_vector(p.basis, rng, 1.0));
        const auto bb = StateVector::from(p.basis, random_probe_vector(p.basis, rng, 1.0));
        std::vector<double> diff(a.size());
        for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = a[j] - bb[j];
        CHECK(h_norm(girsanov_shift(p, a, bb)) <= c * h_norm(diff) * (1 + 1e-12));
    }
}

TEST_CASE("identical starts stay identical") {
    const auto m = fixtures::wide_gap_model();
    auto x = StateVector::zeros(m.basis);
    x[0] = 0.4;
    const auto path = simulate_coupled(m, x, x, 0.2, StepperConfig{}, 1, 0);
    for (std::size_t k = 0; k < path.x_path.states.size(); ++k) {
        CHECK(path.x_path.states[k].coeffs == path.y_path.states[k].coeffs);
    }
    CHECK(path.shift_cost == 0.0);
}

TEST_CASE("mode-wise closed form for the corrected gap") {
    const auto m = additive_model(0.01);
    const double dt = 1e-3, lam = m.basis.lambda_next(2);
    CoupledStepper st(m, StepperConfig{dt, Scheme::projected, 1.0});
    std::vector<double> x{0.1, -0.1, 0.05, 0.02}, y{-0.1, 0.1, 0.0, -0.02};
    std::vector<double> dlx(4), dly(4);
    for (std::size_t k = 0; k < 200; ++k) {
        std::vector<double> w(4);
        for (std::size_t i = 0; i < 4; ++i) w[i] = x[i] - y[i];
        const auto dw = gaussian_increments(1, 0, k, 4, dt);
        st.advance(x, y, dw, dlx, dly);
        for (std::size_t i = 0; i < 4; ++i) {
            const double factor = (1.0 - (i < 2 ? dt * lam / 2 : 0.0)) / (1.0 + dt * m.basis.eigenvalue(i));
            CHECK(x[i] - y[i] == doctest::Approx(w[i] * factor).epsilon(1e-9));
        }
    }
}

TEST_CASE("noise-free coupled gap decreases strictly") {
    const auto m = additive_model(0.0);
    auto x = StateVector::from(m.basis, {0.5, 0.2, 0.1, 0.0});
    auto y = StateVector::from(m.basis, {-0.3, 0.0, 0.0, 0.2});
    const auto path = simulate_coupled(m, x, y, 0.5, StepperConfig{}, 1, 0);
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.x_path.states.size(); ++k) {
        std::vector<double> w(4);
        for (std::size_t i = 0; i < 4; ++i) w[i] = path.x_path.states[k][i] - path.y_path.states[k][i];
        CHECK(h_norm(w) < prev);
        prev = h_norm(w);
    }
}

TEST_CASE("coupled csv layout") {
    const auto m = fixtures::wide_gap_model();
    auto x = StateVector::zeros(m.basis);
    x[0] = 0.3;
    const auto path = simulate_coupled(m, x, StateVector::zeros(m.basis), 0.01, StepperConfig{}, 4, 1);
    std::ostringstream os;
    write_coupled_csv(path, {1.0, 0.3}, os);
    CHECK(os.str().rfind("t,|x-y|_H,d_N,shift_cost_cum\n", 0) == 0);
    CHECK(coupled_csv_name(4, 1) == "coupled_4_1.csv");
    CHECK(path.h1_passed);
}
