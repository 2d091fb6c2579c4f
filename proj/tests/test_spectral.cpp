#include <cmath>

#include "doctest.h"
#include "seelab/rng.hpp"
#include "seelab/spectral_space.hpp"

using namespace seelab;

TEST_CASE("build_basis") {
    const auto b = build_basis({1, 4, 9, 16});
    CHECK(b.dim() == 4);
    CHECK(b.eigenvalue(2) == 9.0);
    CHECK(build_basis({1}).dim() == 1);
    CHECK_THROWS_AS(build_basis({2, 1}), ValidationError);
    CHECK_THROWS_AS(build_basis({0, 1}), ValidationError);
    CHECK_THROWS_AS(build_basis({}), ValidationError);
    CHECK(b.lambda_next(3) == 16.0);
    CHECK_THROWS_AS(b.lambda_next(4), ValidationError);
}

TEST_CASE("norms") {
    const auto b = build_basis({1, 4});
    CHECK(h_norm(StateVector::from(b, {3, 4})) == 5.0);
    CHECK(h_norm(StateVector::zeros(b)) == 0.0);
    CHECK(v_norm(b, StateVector::from(b, {1, 1})) == doctest::Approx(std::sqrt(5.0)));
    CHECK(v_norm(b, StateVector::unit(b, 0)) == 1.0);
    CHECK(v_star_norm(b, StateVector::from(b, {0, 2})) == doctest::Approx(1.0));
    CHECK(v_star_norm(b, StateVector::unit(b, 0)) == 1.0);
}

TEST_CASE("h_norm against extended precision") {
    std::vector<double> lambda;
    for (int i = 1; i <= 64; ++i) lambda.push_back(i * i);
    const auto b = build_basis(lambda);
    CounterRng rng(5, 0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> c(64);
        long double ref = 0;
        for (double& x : c) {
            x = rng.normal() * std::pow(10.0, rng.uniform(-4, 2));
            ref += static_cast<long double>(x) * x;
        }
        CHECK(h_norm(c) == doctest::Approx(static_cast<double>(std::sqrt(ref))).epsilon(1e-14));
    }
}

TEST_CASE("duality |(u,v)| <= ||u|| |v|_{V*}") {
    const auto b = build_basis({1, 4, 9, 16, 25});
    CounterRng rng(6, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> u(5), v(5);
        for (std::size_t i = 0; i < 5; ++i) {
            u[i] = rng.normal();
            v[i] = rng.normal();
        }
        CHECK(std::abs(h_inner(u, v)) <= v_norm(b, u) * v_star_norm(b, v) * (1 + 1e-14));
    }
}

TEST_CASE("low-mode projection") {
    const auto b = build_basis({1, 2, 3});
    const auto v = StateVector::from(b, {1, 2, 3});
    CHECK(project_low_modes(v, 3).coeffs == v.coeffs);
    CHECK(h_norm(project_low_modes(v, 0)) == 0.0);
    CHECK(h_norm(project_low_modes(StateVector::unit(b, 2), 2)) == 0.0);
    CHECK_THROWS_AS(project_low_modes(v, 4), ValidationError);
}

TEST_CASE("poincare gap") {
    const auto b = build_basis({1, 4, 9, 16});
    auto g = poincare_gap_check(b, StateVector::unit(b, 2), 2);
    CHECK(g.holds);
    CHECK(g.residual == doctest::Approx(0.0));
    g = poincare_gap_check(b, StateVector::unit(b, 0), 2);
    CHECK(g.residual == doctest::Approx(1.0));
    CounterRng rng(7, 0);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> c(4);
        for (double& x : c) x = rng.normal();
        CHECK(poincare_gap_check(b, StateVector::from(b, c), 1 + trial % 3).holds);
    }
}

TEST_CASE("vectors are tied to their basis") {
    const auto a = build_basis({1, 2});
    const auto b = build_basis({1, 3});
    CHECK_THROWS_AS(require_in_basis(b, StateVector::zeros(a)), ValidationError);
    CHECK_NOTHROW(require_in_basis(a, StateVector::zeros(a)));
}
