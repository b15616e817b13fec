#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "speclaw/resolvent.hpp"

using namespace speclaw;
using doctest::Approx;

namespace {

struct SmallSetup {
    int M, N;
    Eigen::MatrixXd sigma_dense;
    std::shared_ptr<const HermitianSpectrum> sigma;
    Eigen::MatrixXd x;
    ResolventFactorization fact;

    SmallSetup(int M_, int N_, std::uint64_t seed, double sigma_scale = 1.0)
        : M(M_),
          N(N_),
          sigma_dense(Eigen::MatrixXd::Identity(M_, M_) * sigma_scale),
          sigma(std::make_shared<HermitianSpectrum>(
              HermitianSpectrum::diagonal(Eigen::VectorXd::Constant(M_, sigma_scale)))),
          x(sample_X(EntryDistribution::gaussian(), M_, N_, seed).real),
          fact(x, sigma) {}
};

Eigen::VectorXd unit(int dim, int k) { return Eigen::VectorXd::Unit(dim, k); }

}  // namespace

TEST_CASE("factorized resolvent equals the dense block inverse") {
    SmallSetup s(30, 30, 5);
    const Complex z(1.0, 0.5);
    const Eigen::MatrixXcd G = oracles::dense_block_resolvent(s.x, s.sigma_dense, z);
    const double scale = G.cwiseAbs().maxCoeff();

    double worst = 0.0;
    for (int a = 0; a < 60; ++a)
        for (int b = 0; b < 60; ++b)
            worst = std::max(worst,
                             std::abs(s.fact.entry(z, unit(60, a), unit(60, b)) - G(a, b)));
    CHECK(worst < 1e-9 * scale);

    for (int k = 0; k < s.fact.rank(); ++k) CHECK(s.fact.eigenvalues()[k] >= 0.0);
    CHECK(s.fact.norm_bound_ok());
}

TEST_CASE("factorized resolvent for non-identity diagonal Sigma") {
    const int M = 24, N = 36;
    Eigen::VectorXd sig(M);
    for (int i = 0; i < M; ++i) sig[i] = 0.5 + 2.0 * (i % 4);
    auto sigma = std::make_shared<HermitianSpectrum>(HermitianSpectrum::diagonal(sig));
    const Eigen::MatrixXd x = sample_X(EntryDistribution::gaussian(), M, N, 9).real;
    const ResolventFactorization fact(x, sigma);

    const Complex z(0.8, 0.3);
    const Eigen::MatrixXcd G =
        oracles::dense_block_resolvent(x, Eigen::MatrixXd(sig.asDiagonal()), z);
    const double scale = G.cwiseAbs().maxCoeff();
    const CounterRng rng(1234, 1);
    std::uint64_t c = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd v(M + N), w(M + N);
        for (int i = 0; i < M + N; ++i) v[i] = rng.gaussian(c++);
        for (int i = 0; i < M + N; ++i) w[i] = rng.gaussian(c++);
        v.normalize();
        w.normalize();
        const Complex dense = v.cast<Complex>().dot(G * w.cast<Complex>());
        CHECK(std::abs(fact.entry(z, v, w) - dense) < 1e-10 * std::max(1.0, scale));
    }
}

TEST_CASE("Schur identities tie the block resolvent to both companions") {
    SmallSetup s(20, 28, 11, 1.7);
    const Complex z(1.4, 0.2);
    const Eigen::MatrixXcd G = oracles::dense_block_resolvent(s.x, s.sigma_dense, z);

    // lower-right block: G_{mu nu} = (R_N)_{mu nu}
    const Eigen::MatrixXd companion = s.x.transpose() * s.sigma_dense * s.x;
    const Eigen::MatrixXcd rn = oracles::dense_resolvent(companion, z);
    CHECK((G.bottomRightCorner(s.N, s.N) - rn).cwiseAbs().maxCoeff() < 1e-10);

    // upper-left block: G_{ij} = (z Sigma^{1/2} R_M Sigma^{1/2})_{ij}
    const Eigen::MatrixXd sqrt_sigma = s.sigma_dense.cwiseSqrt();
    const Eigen::MatrixXd q = sqrt_sigma * s.x * s.x.transpose() * sqrt_sigma;
    const Eigen::MatrixXcd rm = oracles::dense_resolvent(q, z);
    const Eigen::MatrixXcd expected = z * sqrt_sigma.cast<Complex>() * rm *
                                      sqrt_sigma.cast<Complex>();
    CHECK((G.topLeftCorner(s.M, s.M) - expected).cwiseAbs().maxCoeff() < 1e-10);

    // and the factorization reproduces both through coordinate entries
    for (int mu = 0; mu < 5; ++mu)
        CHECK(std::abs(s.fact.entry(z, unit(48, s.M + mu), unit(48, s.M + mu)) - rn(mu, mu)) <
              1e-10);
    for (int i = 0; i < 5; ++i)
        CHECK(std::abs(s.fact.entry(z, unit(48, i), unit(48, i)) - expected(i, i)) < 1e-10);
}

TEST_CASE("empirical m_N") {
    SmallSetup s(26, 34, 13);
    const Complex z(0.9, 0.4);

    SUBCASE("trace identity between the two companion resolvents") {
        const double phi = static_cast<double>(s.M) / s.N;
        const Complex lhs = s.fact.empirical_m_M(z);
        const Complex rhs = s.fact.empirical_m_N(z) * (static_cast<double>(s.N) / s.M) +
                            (1.0 - phi) / phi / z;
        CHECK(std::abs(lhs - rhs) < 1e-13);
    }
    SUBCASE("large-eta asymptotics") {
        const Complex far(0.0, 400.0);
        CHECK(std::abs(s.fact.empirical_m_N(far) - (-1.0 / far)) < 1e-4);
    }
    SUBCASE("direct eigenvalue-sum oracle") {
        const Eigen::MatrixXd companion = s.x.transpose() * s.sigma_dense * s.x;
        const Eigen::VectorXd evals =
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(companion).eigenvalues();
        Complex direct = 0.0;
        for (int k = 0; k < s.N; ++k) direct += 1.0 / (evals[k] - z);
        direct /= static_cast<double>(s.N);
        CHECK(std::abs(s.fact.empirical_m_N(z) - direct) < 1e-12);
    }
}

TEST_CASE("ward identity") {
    SmallSetup s(50, 50, 17);
    const Complex z(1.0, 0.1);

    const CounterRng rng(99, 0);
    Eigen::VectorXd w(s.N);
    for (int i = 0; i < s.N; ++i) w[i] = rng.gaussian(i);
    w.normalize();
    CHECK(s.fact.ward_residual(z, w) < 1e-10);
    CHECK(s.fact.ward_residual(z, unit(s.N, 3)) < 1e-10);
    CHECK(s.fact.ward_residual(Complex(1.0, 0.05), w) < 1e-10);

    SUBCASE("monotone ladder of the empirical transform") {
        double prev = 0.0;
        for (double eta : {3.0, 1.0, 0.3, 0.1, 0.03, 0.01}) {
            const double cur = eta * s.fact.empirical_m_N(Complex(1.2, eta)).imag();
            if (prev > 0.0) CHECK(cur <= prev + 1e-14);
            prev = cur;
        }
    }
}

TEST_CASE("anisotropic scan with negative control") {
    const int M = 500, N = 1000;
    const auto model = identity_model(0.5, ModelDims{M, M, N});
    auto sigma = std::make_shared<HermitianSpectrum>(HermitianSpectrum::from_model(model));
    const auto x = sample_X(EntryDistribution::gaussian(), M, N, 21);
    const ResolventFactorization fact(x.real, sigma);

    const DensityProfile profile(model);
    const auto domain = make_domain(DomainKind::bulk, 0.05, 0.1, N, &profile, 0);
    const auto grid = domain.grid(3, 1e-2);
    REQUIRE(grid.size() >= 6);

    ScanOptions opt;
    opt.seed = 4;
    const ErrorScan clean = anisotropic_scan(fact, model, grid, opt);
    REQUIRE(clean.records.size() == grid.size());
    CHECK(clean.notes.empty());
    CHECK(clean.max_aniso_ratio() < 10.0);
    CHECK(clean.max_avg_ratio() < 20.0);

    ScanOptions corrupt = opt;
    corrupt.m_corruption = 0.1;
    const ErrorScan bad = anisotropic_scan(fact, model, grid, corrupt);
    double best_inflation = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        best_inflation = std::max(
            best_inflation, bad.records[i].aniso_ratio / clean.records[i].aniso_ratio);
    CHECK(best_inflation >= 10.0);
}

TEST_CASE("averaged scan records the outside refinement") {
    const int M = 250, N = 500;
    const auto model = identity_model(0.5, ModelDims{M, M, N});
    auto sigma = std::make_shared<HermitianSpectrum>(HermitianSpectrum::from_model(model));
    const ResolventFactorization fact(sample_X(EntryDistribution::gaussian(), M, N, 31).real,
                                      sigma);
    const DensityProfile profile(model);
    const auto domain = make_domain(DomainKind::outside, 0.05, 0.2, N, &profile);
    const auto grid = domain.grid(4, 1e-2);
    const ErrorScan scan = averaged_scan(fact, profile, grid);
    REQUIRE(!scan.records.empty());
    for (const auto& rec : scan.records) {
        CHECK(rec.avg_err < 1.0);
        CHECK(rec.outside_ratio >= 0.0);
        CHECK(std::isfinite(rec.outside_ratio));
    }
}

TEST_CASE("wigner resolvent and scan") {
    const int N = 60;
    Eigen::VectorXd avals(N);
    for (int i = 0; i < N; ++i) avals[i] = (i < N / 2) ? -1.0 : 1.0;
    const Eigen::MatrixXd A = avals.asDiagonal();
    const auto sample = sample_deformed_wigner(EntryDistribution::gaussian(), A, 41);
    const WignerResolvent res(sample.w_plus_a());

    SUBCASE("entries match the dense inverse") {
        const Complex z(0.7, 0.4);
        const Eigen::MatrixXcd G = oracles::dense_resolvent(sample.w_plus_a(), z);
        for (int t = 0; t < 10; ++t) {
            const Eigen::VectorXd v = unit(N, (3 * t) % N), w = unit(N, (7 * t + 1) % N);
            CHECK(std::abs(res.entry(z, v, w) - G((3 * t) % N, (7 * t + 1) % N)) < 1e-11);
        }
        CHECK(std::abs(res.trace_m(z) - G.trace() / static_cast<double>(N)) < 1e-12);
    }
    SUBCASE("scan produces finite ratios on a bulk ladder") {
        auto a = std::make_shared<HermitianSpectrum>(HermitianSpectrum::diagonal(avals));
        std::vector<Complex> grid;
        for (double eta = 1.0; eta > 0.05; eta *= 0.5) grid.emplace_back(0.3, eta);
        const ErrorScan scan = wigner_scan(res, a, grid);
        REQUIRE(scan.records.size() == grid.size());
        for (const auto& rec : scan.records) {
            CHECK(std::isfinite(rec.aniso_ratio));
            CHECK(rec.max_aniso > 0.0);
        }
    }
}
