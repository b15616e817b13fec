#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "speclaw/sampler.hpp"

using namespace speclaw;
using doctest::Approx;

TEST_CASE("counter rng: determinism and basic statistics") {
    const CounterRng a(42, 0), b(42, 0), c(43, 0), d(42, 1);
    CHECK(a.bits(7) == b.bits(7));
    CHECK(a.bits(7) != c.bits(7));
    CHECK(a.bits(7) != d.bits(7));

    double sum = 0.0, sum2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double g = a.gaussian(i);
        sum += g;
        sum2 += g * g;
    }
    CHECK(std::abs(sum / n) < 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(sum2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("entry distributions: moments") {
    const auto g = EntryDistribution::gaussian();
    CHECK(g.moments()[1] == 1.0);
    CHECK(g.moments()[3] == 3.0);
    CHECK(g.moments()[7] == 105.0);

    const auto r = EntryDistribution::rademacher();
    for (int k = 1; k <= 8; ++k) CHECK(r.moments()[k - 1] == Approx(k % 2 ? 0.0 : 1.0).scale(1.0));

    const auto t = EntryDistribution::two_point(0.3);
    CHECK(t.moments()[0] == Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(t.moments()[1] == Approx(1.0).epsilon(1e-14));
    const double p = 0.3, q = 0.7;
    CHECK(t.moments()[2] == Approx((q - p) / std::sqrt(p * q)).epsilon(1e-13));
}

TEST_CASE("moment-fit distributions") {
    SUBCASE("round trip of a two-point law") {
        const auto t = EntryDistribution::two_point(0.3);
        std::vector<double> mom(t.moments().begin(), t.moments().begin() + 6);
        const auto fit = EntryDistribution::from_moments(mom);
        REQUIRE(fit.support().size() == 2);
        CHECK(fit.support()[0] == Approx(t.support()[1]).epsilon(1e-9));  // sorted ascending
        CHECK(fit.support()[1] == Approx(t.support()[0]).epsilon(1e-9));
        CHECK(fit.probabilities()[0] == Approx(0.7).epsilon(1e-9));
    }
    SUBCASE("three-point law recovered from six moments") {
        const std::vector<double> sup{-1.5, 0.2, 1.8};
        const std::vector<double> pr{0.3, 0.4, 0.3};
        double mean = 0.0;
        for (int j = 0; j < 3; ++j) mean += pr[j] * sup[j];
        std::vector<double> centered;
        for (double s : sup) centered.push_back(s - mean);
        double var = 0.0;
        for (int j = 0; j < 3; ++j) var += pr[j] * centered[j] * centered[j];
        std::vector<double> standard;
        for (double s : centered) standard.push_back(s / std::sqrt(var));
        std::vector<double> mom(6);
        for (int k = 1; k <= 6; ++k) {
            double acc = 0.0;
            for (int j = 0; j < 3; ++j) acc += pr[j] * std::pow(standard[j], k);
            mom[k - 1] = acc;
        }
        const auto fit = EntryDistribution::from_moments(mom);
        REQUIRE(fit.support().size() == 3);
        for (int j = 0; j < 3; ++j) {
            CHECK(fit.support()[j] == Approx(standard[j]).epsilon(1e-8));
            CHECK(fit.probabilities()[j] == Approx(pr[j]).epsilon(1e-8));
        }
    }
    SUBCASE("gaussian moments are infeasible for small support") {
        CHECK_THROWS_AS(EntryDistribution::from_moments({0.0, 1.0, 0.0, 3.0}), Error);
    }
}

TEST_CASE("sample_X: reproducibility and entry laws") {
    const auto dist = EntryDistribution::gaussian();
    const auto s1 = sample_X(dist, 100, 120, 99);
    const auto s2 = sample_X(dist, 100, 120, 99);
    CHECK(s1.real == s2.real);
    const auto s3 = sample_X(dist, 100, 120, 100);
    CHECK(s1.real != s3.real);

    SUBCASE("rademacher support") {
        const auto r = sample_X(EntryDistribution::rademacher(), 40, 50, 3);
        const double v = 1.0 / std::sqrt(50.0);
        for (int i = 0; i < 40; ++i)
            for (int j = 0; j < 50; ++j)
                CHECK(std::abs(std::abs(r.real(i, j)) - v) < 1e-15);
    }
    SUBCASE("empirical mean and variance within 5 sigma") {
        const int Mhat = 200, N = 200;
        const auto s = sample_X(dist, Mhat, N, 17);
        const double count = static_cast<double>(Mhat) * N;
        const double mean = s.real.sum() / count;
        const double var = s.real.squaredNorm() / count;
        CHECK(std::abs(mean) < 5.0 * std::sqrt(1.0 / N / count));
        CHECK(std::abs(var - 1.0 / N) < 5.0 * std::sqrt(2.0 / N / N / count));
    }
    SUBCASE("fourth moment of sqrt(N) X within 5 sigma of the target") {
        const int Mhat = 300, N = 300;
        const auto s = sample_X(dist, Mhat, N, 23);
        const double count = static_cast<double>(Mhat) * N;
        double m4 = 0.0;
        for (int i = 0; i < Mhat; ++i)
            for (int j = 0; j < N; ++j) m4 += std::pow(std::sqrt(N) * s.real(i, j), 4.0);
        m4 /= count;
        // Var(X^4) = EX^8 - (EX^4)^2 = 105 - 9 for the normal law
        CHECK(std::abs(m4 - 3.0) < 5.0 * std::sqrt(96.0 / count));
    }
    SUBCASE("complex symmetry: E X = 0, E|X|^2 = 1/N, E X^2 = 0") {
        const auto dc = EntryDistribution::gaussian(Symmetry::complex_hermitian);
        const auto s = sample_X(dc, 200, 200, 31);
        REQUIRE(s.is_complex);
        const double count = 200.0 * 200.0;
        const std::complex<double> mean = s.complex.sum() / count;
        double abs2 = 0.0;
        std::complex<double> square = 0.0;
        for (int i = 0; i < 200; ++i)
            for (int j = 0; j < 200; ++j) {
                abs2 += std::norm(s.complex(i, j));
                square += s.complex(i, j) * s.complex(i, j);
            }
        abs2 /= count;
        square /= count;
        CHECK(std::abs(mean) < 5.0 / std::sqrt(200.0 * count));
        CHECK(std::abs(abs2 - 1.0 / 200.0) < 5.0 * std::sqrt(1.0 / (200.0 * 200.0) / count));
        CHECK(std::abs(square) < 5.0 / std::sqrt(200.0 * count));
    }
}

TEST_CASE("covariance ensembles") {
    const auto dist = EntryDistribution::gaussian();

    SUBCASE("nonzero spectra of Q and its companion agree") {
        const Eigen::MatrixXd T = 3.0 * sample_X(dist, 20, 30, 5).real;  // random 20 x 30
        const auto x = sample_X(dist, 30, 25, 6);
        const auto ens = build_covariance_model(T, x.real, false);
        Eigen::VectorXd eq = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ens.q)
                                 .eigenvalues().reverse();
        Eigen::VectorXd ec = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(ens.companion)
                                 .eigenvalues().reverse();
        const int rank = 20;
        for (int k = 0; k < rank; ++k) CHECK(std::abs(eq[k] - ec[k]) < 1e-10 * std::max(1.0, eq[0]));
    }

    SUBCASE("centered variant is invariant under row shifts") {
        const auto x = sample_X(dist, 15, 40, 8);
        Eigen::MatrixXd T = Eigen::MatrixXd::Identity(15, 15);
        Eigen::MatrixXd shifted = x.real;
        for (int i = 0; i < 15; ++i) shifted.row(i).array() += 0.1 * (i + 1);
        const auto a = build_covariance_model(T, x.real, true);
        const auto b = build_covariance_model(T, shifted, true);
        CHECK((a.q - b.q).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("E Q = T T^* within 5 sigma entrywise at M = N = 40") {
        const int M = 40, N = 40, trials = 200;
        const Eigen::MatrixXd T = sample_X(dist, M, M, 77).real * std::sqrt(static_cast<double>(M));
        const Eigen::MatrixXd target = T * T.transpose();
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(M, M), sum2 = Eigen::MatrixXd::Zero(M, M);
        for (int t = 0; t < trials; ++t) {
            const auto x = sample_X(dist, M, N, 1000 + t);
            const Eigen::MatrixXd q = build_covariance_model(T, x.real, false).q;
            sum += q;
            sum2 += q.cwiseProduct(q);
        }
        const Eigen::MatrixXd mean = sum / trials;
        int violations = 0;
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) {
                const double var = sum2(i, j) / trials - mean(i, j) * mean(i, j);
                const double se = std::sqrt(std::max(var, 1e-30) / trials);
                if (std::abs(mean(i, j) - target(i, j)) > 5.0 * se) ++violations;
            }
        // 5-sigma misses are vanishingly rare; allow a couple out of 1600 cells
        CHECK(violations <= 3);
    }

    SUBCASE("dimension mismatch throws") {
        const auto x = sample_X(dist, 10, 12, 1);
        CHECK_THROWS_AS(build_covariance_model(Eigen::MatrixXd::Identity(5, 9), x.real, false),
                        Error);
    }
}

TEST_CASE("augmentation preserves the nonzero spectrum") {
    const auto dist = EntryDistribution::gaussian();
    SUBCASE("wide T: zero rows") {
        const Eigen::MatrixXd T = sample_X(dist, 12, 20, 2).real;  // 12 x 20
        const auto x = sample_X(dist, 20, 25, 3);
        const auto aug = augment_model(T, x.real, dist, 3);
        CHECK(aug.t.rows() == 20);
        const auto plain = build_covariance_model(T, x.real, false);
        const auto wide = build_covariance_model(aug.t, aug.x, false);
        Eigen::VectorXd e1 = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(plain.q)
                                 .eigenvalues().reverse();
        Eigen::VectorXd e2 = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(wide.q)
                                 .eigenvalues().reverse();
        for (int k = 0; k < 12; ++k) CHECK(e1[k] == Approx(e2[k]).epsilon(1e-10).scale(1.0));
    }
    SUBCASE("tall T: extended X leaves T X unchanged") {
        const Eigen::MatrixXd T = sample_X(dist, 18, 11, 4).real;  // 18 x 11
        const auto x = sample_X(dist, 11, 24, 5);
        const auto aug = augment_model(T, x.real, dist, 5);
        CHECK(aug.t.rows() == 18);
        CHECK((aug.t * aug.x - T * x.real).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("deformed wigner samples") {
    const auto dist = EntryDistribution::gaussian();
    const Eigen::MatrixXd A = Eigen::MatrixXd::Zero(500, 500);
    const auto s = sample_deformed_wigner(dist, A, 12);

    CHECK(s.w == Eigen::MatrixXd(s.w.transpose()));
    const auto s2 = sample_deformed_wigner(dist, A, 12);
    CHECK(s.w == s2.w);

    const Eigen::VectorXd evals =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s.w_plus_a()).eigenvalues();
    CHECK(std::abs(evals.maxCoeff() - 2.0) < 0.2);

    CHECK_THROWS_AS(
        sample_deformed_wigner(dist, Eigen::MatrixXd::Random(8, 8), 1), Error);
}

TEST_CASE("bernoulli interpolation") {
    const auto x0 = sample_X(EntryDistribution::gaussian(), 200, 200, 1).real;
    const auto x1 = sample_X(EntryDistribution::gaussian(), 200, 200, 2).real;

    CHECK(bernoulli_interpolate(x0, x1, 0.0, 9) == x0);
    CHECK(bernoulli_interpolate(x0, x1, 1.0, 9) == x1);

    const Eigen::MatrixXd mix = bernoulli_interpolate(x0, x1, 0.3, 9);
    int from_x1 = 0;
    for (int i = 0; i < 200; ++i)
        for (int j = 0; j < 200; ++j)
            if (mix(i, j) == x1(i, j)) ++from_x1;
    const double frac = from_x1 / 40000.0;
    CHECK(std::abs(frac - 0.3) < 5.0 * std::sqrt(0.3 * 0.7 / 40000.0));

    CHECK_THROWS_AS(bernoulli_interpolate(x0, x1.topRows(100), 0.5, 1), Error);
}

TEST_CASE("k coefficients") {
    SUBCASE("matched moments vanish to machine precision") {
        // random-ish moment tuples agreeing to order n
        const std::vector<double> base{0.0, 1.0, 0.7, 2.9, 1.4, 11.0, 4.0, 90.0};
        for (int n = 1; n <= 8; ++n) {
            std::vector<double> other = base;
            for (int k = n; k < 8; ++k) other[k] += 0.5 + k;  // differ beyond order n
            const auto K = k_coefficients(base, other, 0.4, 8);
            for (int k = 0; k < n; ++k) CHECK(std::abs(K[k]) < 1e-12);
            if (n < 8) CHECK(std::abs(K[n]) > 1e-6);
        }
    }
    SUBCASE("hand-computed third-order coefficient") {
        const double N = 100.0;
        const double v = 1.0 / N, s1 = 2.0 * std::pow(N, -1.5);
        const std::vector<double> m0{0.0, v, 0.0};
        const std::vector<double> m1{0.0, v, s1};
        const auto K = k_coefficients(m0, m1, 0.5, 3);
        CHECK(std::abs(K[0]) < 1e-18);
        CHECK(std::abs(K[1]) < 1e-18);
        CHECK(K[2] == Approx(std::pow(N, -1.5) / 3.0).epsilon(1e-12));
    }
    SUBCASE("finite-difference oracle on synthetic two-point laws") {
        // zeta, zeta', xi two-point with O(1) support; moment generating
        // functions known in closed form.
        const oracles::TwoPointLaw z1{std::sqrt(0.7 / 0.3), -std::sqrt(0.3 / 0.7), 0.3};
        const oracles::TwoPointLaw z0{1.0, -1.0, 0.5};
        const double theta = 0.35;

        const int n_max = 6;
        const auto K = k_coefficients(z0.raw_moments(n_max), z1.raw_moments(n_max), theta, n_max);

        auto g = [&](long double t) {
            const long double num = z1.mgf(t) - z0.mgf(t);
            const long double den = theta * z1.mgf(t) + (1.0L - theta) * z0.mgf(t);
            return num / den;
        };
        for (int m = 1; m <= n_max; ++m) {
            double factorial = 1.0;
            for (int j = 2; j <= m; ++j) factorial *= j;
            CAPTURE(m);
            CHECK(std::abs(K[m - 1] - oracles::fd_derivative(g, m) / factorial) < 1e-8);
        }
    }
    SUBCASE("order beyond supplied moments errors") {
        CHECK_THROWS_AS(k_coefficients({0.0, 1.0}, {0.0, 1.0}, 0.5, 3), Error);
    }
}
