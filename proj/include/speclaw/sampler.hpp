#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "speclaw/model.hpp"
#include "speclaw/rng.hpp"

namespace speclaw {

enum class EntryKind { gaussian, rademacher, two_point, user_moments };
enum class Symmetry { real, complex_hermitian };

/// Standardized entry law (mean 0, variance 1 before the N^{-1/2}
/// scaling). Discrete kinds carry explicit support/probabilities; the
/// first eight moments are available for the comparison calculus.
class EntryDistribution {
public:
    static EntryDistribution gaussian(Symmetry sym = Symmetry::real);
    static EntryDistribution rademacher(Symmetry sym = Symmetry::real);
    /// Two-point law sqrt(q/p) w.p. p, -sqrt(p/q) w.p. q = 1-p.
    static EntryDistribution two_point(double p, Symmetry sym = Symmetry::real);
    /// Minimal-support discrete law matching the supplied raw moments
    /// (moments[k-1] = E X^k, mean 0, variance 1); throws when no law
    /// with at most four support points reproduces them.
    static EntryDistribution from_moments(const std::vector<double>& raw_moments,
                                          Symmetry sym = Symmetry::real);

    EntryKind kind() const { return kind_; }
    Symmetry symmetry() const { return symmetry_; }
    /// Raw moments E X^k, k = 1..8, of the standardized real law.
    const std::array<double, 8>& moments() const { return moments_; }
    const std::vector<double>& support() const { return support_; }
    const std::vector<double>& probabilities() const { return probs_; }

    double draw(const CounterRng& rng, std::uint64_t counter) const;
    std::complex<double> draw_complex(const CounterRng& rng, std::uint64_t counter) const;

private:
    EntryKind kind_ = EntryKind::gaussian;
    Symmetry symmetry_ = Symmetry::real;
    std::array<double, 8> moments_{};
    std::vector<double> support_, probs_, cumulative_;
};

/// A realized random matrix with its provenance.
struct EnsembleSample {
    Eigen::MatrixXd real;      // used when !is_complex
    Eigen::MatrixXcd complex;  // used when is_complex
    bool is_complex = false;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    EntryDistribution dist;

    Eigen::Index rows() const { return is_complex ? complex.rows() : real.rows(); }
    Eigen::Index cols() const { return is_complex ? complex.cols() : real.cols(); }
};

/// i.i.d. matrix with entries law(dist)/sqrt(N); E X = 0, E|X|^2 = 1/N.
EnsembleSample sample_X(const EntryDistribution& dist, int Mhat, int N, std::uint64_t seed,
                        std::uint64_t stream = 0);

/// Square-T_diag form of a general (T, X) pair: zero rows pad T when
/// Mhat >= M, independent rows extend X when Mhat < M; in both cases the
/// nonzero spectrum of T X X^* T^* is preserved (exactly equal as a
/// product in the second case).
struct AugmentedModel {
    Eigen::MatrixXd t;  // square
    Eigen::MatrixXd x;
};
AugmentedModel augment_model(const Eigen::MatrixXd& T, const Eigen::MatrixXd& X,
                             const EntryDistribution& dist, std::uint64_t seed);

/// Q = T X X^* T^* (or the centered variant) together with its
/// companion X^* T^* T X; the two share their nonzero spectrum.
struct CovarianceEnsemble {
    Eigen::MatrixXd q;
    Eigen::MatrixXd companion;
    bool dotted = false;
};
CovarianceEnsemble build_covariance_model(const Eigen::MatrixXd& T, const Eigen::MatrixXd& X,
                                          bool dotted = false);

/// Symmetric W with independent entries of variance 1/N plus the
/// deterministic deformation A.
struct WignerSample {
    Eigen::MatrixXd w;
    Eigen::MatrixXd a;
    std::uint64_t seed = 0;
    Eigen::MatrixXd w_plus_a() const { return w + a; }
};
WignerSample sample_deformed_wigner(const EntryDistribution& dist, const Eigen::MatrixXd& A,
                                    std::uint64_t seed, std::uint64_t stream = 0);

/// Entrywise Bernoulli mixture: each entry comes from x1 with
/// probability theta, independently; theta = 0 and 1 reproduce the
/// inputs bitwise.
Eigen::MatrixXd bernoulli_interpolate(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x1,
                                      double theta, std::uint64_t seed);

/// Coefficients of the formal power series
///   sum_n K_n t^n = (E e^{t X^1} - E e^{t X^0}) / E e^{t X^theta},
/// where the theta-law moments are the theta-mixture of the inputs.
/// moments*[k-1] = E X^k (raw, including any N^{-1/2} scaling).
std::vector<double> k_coefficients(const std::vector<double>& moments0,
                                   const std::vector<double>& moments1, double theta,
                                   int n_max);

}  // namespace speclaw
