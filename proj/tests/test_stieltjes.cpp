#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "speclaw/stieltjes.hpp"

using namespace speclaw;
using doctest::Approx;

TEST_CASE("evaluate_f closed forms for the single-atom model") {
    const auto model = identity_model(0.25);

    // f(x) = -1/x + 0.25/(x + 1), evaluated by hand at the two critical points.
    const FDerivatives at_m2 = evaluate_f(-2.0, model);
    CHECK(at_m2.f == Approx(0.25).epsilon(1e-14));
    CHECK(at_m2.fp == Approx(0.0).epsilon(1e-14));
    CHECK(at_m2.fpp == Approx(-0.25).epsilon(1e-14));

    const FDerivatives at_m23 = evaluate_f(-2.0 / 3.0, model);
    CHECK(at_m23.f == Approx(2.25).epsilon(1e-13));
    CHECK(at_m23.fp == Approx(0.0).scale(1.0).epsilon(1e-13));
    CHECK(at_m23.fpp == Approx(20.25).epsilon(1e-13));

    const FDerivatives at_inf = evaluate_f(std::numeric_limits<double>::infinity(), model);
    CHECK(at_inf.f == 0.0);
}

TEST_CASE("evaluate_f rejects pole proximity") {
    const auto model = identity_model(0.25);
    CHECK_THROWS_AS(evaluate_f(-1.0 + 1e-14, model), Error);
    CHECK_THROWS_AS(evaluate_f(1e-14, model), Error);
}

TEST_CASE("solve_m matches the Stieltjes asymptotics at large |z|") {
    const auto model = identity_model(0.25);
    const StieltjesValue v = solve_m(Complex(0.0, 100.0), model);
    CHECK(std::abs(v.m - Complex(0.0, 0.01)) < 1e-3);
    CHECK(v.residual < 1e-11 * 100.0);
}

TEST_CASE("solve_m at the boundary point z = 1 reproduces the quadratic root") {
    const auto model = identity_model(0.25);
    const StieltjesValue v = solve_m(Complex(1.0, 0.0), model);
    const Complex expected(-0.875, std::sqrt(0.9375) / 2.0);  // -0.875 + 0.484123i
    CHECK(std::abs(v.m - expected) < 1e-9);
    CHECK(v.residual < 1e-11);
    CHECK(v.m.imag() > 0.0);
}

TEST_CASE("solve_m agrees with the quadratic closed form on an upper-half-plane grid") {
    const auto model = identity_model(0.25);
    for (double E : {0.05, 0.3, 1.0, 2.0, 2.25, 3.0}) {
        for (double eta : {1.0, 1e-2, 1e-4, 1e-7}) {
            const Complex z(E, eta);
            const StieltjesValue v = solve_m(z, model);
            const Complex ref = oracles::mp_m(z, 0.25);
            CAPTURE(E);
            CAPTURE(eta);
            CHECK(std::abs(v.m - ref) < 1e-9);
            CHECK(v.m.imag() > 0.0);
            CHECK(v.residual <= 1e-11 * std::max(1.0, std::abs(z)));
        }
    }
}

TEST_CASE("solve_m agrees with the companion-matrix root for a four-atom model") {
    // phi*pi = 0.01 d_10 + 0.01 d_5 + 0.05 d_1.5 + 0.03 d_1 at phi = 0.1
    const PopulationModel model(0.1, {{10.0, 0.1}, {5.0, 0.1}, {1.5, 0.5}, {1.0, 0.3}});
    for (double E : {0.2, 0.9, 1.9, 3.2, 6.0, 14.0}) {
        for (double eta : {1.0, 1e-3, 1e-6}) {
            const Complex z(E, eta);
            const StieltjesValue v = solve_m(z, model);
            const Complex ref = oracles::polynomial_m(z, model);
            CAPTURE(E);
            CAPTURE(eta);
            CHECK(std::abs(v.m - ref) < 1e-8);
        }
    }
}

TEST_CASE("boundary solve in a spectral gap is real and increasing") {
    const PopulationModel model(0.1, {{10.0, 0.1}, {5.0, 0.1}, {1.5, 0.5}, {1.0, 0.3}});
    // The gap between the top two components contains (6.5, 8.5); checked
    // against the critical values in the profile tests.
    double prev = -std::numeric_limits<double>::infinity();
    for (double E : {6.6, 7.0, 7.4, 7.8, 8.2}) {
        const StieltjesValue v = solve_m(Complex(E, 0.0), model);
        CHECK(std::abs(v.m.imag()) < 1e-8);
        CHECK(v.m.real() > prev);
        prev = v.m.real();
    }
}

TEST_CASE("descending-eta continuation agrees with fresh solves") {
    const auto model = identity_model(0.25);
    const double E = 1.3;
    for (double eta : {0.5, 0.1, 0.01, 1e-4, 1e-6}) {
        const StieltjesValue fresh = solve_m(Complex(E, eta), model);
        const Complex ref = oracles::mp_m(Complex(E, eta), 0.25);
        CHECK(std::abs(fresh.m - ref) < 1e-9);
    }
}

TEST_CASE("Herglotz monotonicity of the solved transform") {
    const PopulationModel model(0.1, {{10.0, 0.1}, {5.0, 0.1}, {1.5, 0.5}, {1.0, 0.3}});
    for (double E : {0.8, 1.9, 9.5}) {
        double prev_eim = 0.0;
        double prev_ratio = std::numeric_limits<double>::infinity();
        for (double eta = 1e-4; eta < 10.0; eta *= 3.0) {
            const StieltjesValue v = solve_m(Complex(E, eta), model);
            const double eim = eta * v.m.imag();
            const double ratio = v.m.imag() / eta;
            CHECK(eim >= prev_eim - 1e-12);
            CHECK(ratio <= prev_ratio + 1e-12);
            prev_eim = eim;
            prev_ratio = ratio;
        }
    }
}

TEST_CASE("wigner m: semicircle closed forms") {
    const std::vector<double> zero{0.0};
    SUBCASE("center of the semicircle") {
        const StieltjesValue v = solve_wigner_m(Complex(0.0, 0.0), zero);
        CHECK(std::abs(v.m - Complex(0.0, 1.0)) < 1e-8);
    }
    SUBCASE("outside the support") {
        const StieltjesValue v = solve_wigner_m(Complex(3.0, 0.0), zero);
        CHECK(std::abs(v.m - Complex((-3.0 + std::sqrt(5.0)) / 2.0, 0.0)) < 1e-9);
    }
    SUBCASE("upper half plane vs quadratic") {
        for (double E : {-1.5, 0.0, 1.2, 2.5}) {
            for (double eta : {1.0, 1e-3, 1e-6}) {
                const Complex z(E, eta);
                const StieltjesValue v = solve_wigner_m(z, zero);
                const Complex disc = std::sqrt(z * z - 4.0);
                const Complex r1 = (-z + disc) / 2.0;
                const Complex r2 = (-z - disc) / 2.0;
                const Complex ref = (r1.imag() > r2.imag()) ? r1 : r2;
                CHECK(std::abs(v.m - ref) < 1e-9);
            }
        }
    }
}

TEST_CASE("wigner m: translation covariance under A -> A + cI") {
    const std::vector<double> base{-1.0, -0.3, 0.4, 1.0};
    const double c = 0.7;
    std::vector<double> shifted;
    for (double a : base) shifted.push_back(a + c);
    for (double E : {0.5, 1.5, 3.2}) {
        const Complex z(E, 1e-3);
        const StieltjesValue lhs = solve_wigner_m(z, shifted);
        const StieltjesValue rhs = solve_wigner_m(z - c, base);
        CHECK(std::abs(lhs.m - rhs.m) < 1e-9);
    }
}

TEST_CASE("wigner support endpoints for A = 0") {
    const auto [lo, hi] = wigner_support({0.0});
    CHECK(lo == Approx(-2.0).epsilon(1e-10));
    CHECK(hi == Approx(2.0).epsilon(1e-10));
}
