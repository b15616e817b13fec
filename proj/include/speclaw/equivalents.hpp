#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>

#include "speclaw/profile.hpp"

namespace speclaw {

/// Spectral decomposition of a real symmetric matrix (Sigma or a Wigner
/// deformation A). Matrix functions act as scalar maps on the
/// eigenvalues; the basis is omitted entirely in the diagonal case.
class HermitianSpectrum {
public:
    static HermitianSpectrum diagonal(Eigen::VectorXd values);
    static HermitianSpectrum from_dense(const Eigen::MatrixXd& sym);
    /// Sigma spectrum of a model with dims: each atom repeated
    /// round(M * weight) times, zeros appended for the mass at zero.
    static HermitianSpectrum from_model(const PopulationModel& model);

    int dim() const { return static_cast<int>(values_.size()); }
    const Eigen::VectorXd& values() const { return values_; }
    bool has_trivial_basis() const { return trivial_; }

    Eigen::VectorXd to_eigenbasis(const Eigen::VectorXd& v) const;
    Eigen::VectorXd from_eigenbasis(const Eigen::VectorXd& c) const;
    /// Applies f(A) v where f acts on the eigenvalues.
    Eigen::VectorXd apply(const Eigen::VectorXd& v,
                          const std::function<double(double)>& f) const;
    Eigen::MatrixXd dense_power(double p) const;

private:
    Eigen::VectorXd values_;
    Eigen::MatrixXd basis_;  // empty when trivial_
    bool trivial_ = true;
};

/// Deterministic equivalents at one spectral parameter: the block
/// equivalent Pi (upper block -Sigma(1+m Sigma)^{-1}, lower block m I_N),
/// the resolvent equivalent -1/(z(1+m Sigma)), and the fluctuation scale
/// Psi, all stored factored over Sigma's eigenbasis.
struct EquivalentSet {
    Complex z;
    Complex m;
    double psi = 0.0;
    int N = 0;
    Eigen::VectorXcd pi_upper_eigs;  // -sigma_i/(1 + m sigma_i)
    Eigen::VectorXcd rm_eigs;        // -1/(z (1 + m sigma_i))
    Complex pi_lower;                // m
    double min_one_plus_m_sigma = 0.0;
    std::shared_ptr<const HermitianSpectrum> sigma;
};

/// Psi(z) = sqrt(Im m/(N eta)) + 1/(N eta).
double psi_scale(Complex z, Complex m, int N);

EquivalentSet build_equivalents(Complex z, const PopulationModel& model,
                                std::shared_ptr<const HermitianSpectrum> sigma, int N,
                                const SolverSettings& settings = {},
                                double singular_guard = 1e-10);

/// Equivalents assembled from an externally supplied m (the solved value,
/// or a deliberately corrupted one for negative controls).
EquivalentSet equivalents_from_m(Complex z, Complex m,
                                 std::shared_ptr<const HermitianSpectrum> sigma, int N,
                                 double singular_guard = 1e-10);

/// Generalized entries of the equivalents. Vectors live on the full
/// index set (M entries for the Sigma block followed by N entries).
Complex pi_entry(const EquivalentSet& eq, const Eigen::VectorXd& v, const Eigen::VectorXd& w);
/// Same with the rank-one centering correction Pi - (m + 1/z) e e^*,
/// e = N^{-1/2}(1,...,1) on the N block.
Complex dotted_pi_entry(const EquivalentSet& eq, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& w);
/// Entry of the M-block resolvent equivalent -1/(z(1+m Sigma)).
Complex rm_equiv_entry(const EquivalentSet& eq, const Eigen::VectorXd& vM,
                       const Eigen::VectorXd& wM);

/// (1/M) tr of the two resolvent equivalents; the consistency identity
/// (1/M) tr R_M = (1/M) tr R_N + ((1-phi)/phi)/z reproduces the defining
/// equation of m.
double consistency_residual(const EquivalentSet& eq);

// --------------------------------------------------------------------------
// Deformed Wigner equivalents

struct WignerEquivalentSet {
    Complex z;
    Complex m;
    double psi = 0.0;
    int N = 0;
    Eigen::VectorXcd pi_eigs;  // 1/(-m + a_i - z)
    bool guard_ok = true;      // min_i |-m + a_i - z| >= tau
    std::shared_ptr<const HermitianSpectrum> a;
};

WignerEquivalentSet build_wigner_equivalents(Complex z,
                                             std::shared_ptr<const HermitianSpectrum> a,
                                             const SolverSettings& settings = {},
                                             double tau = 0.05);

WignerEquivalentSet wigner_equivalents_from_m(Complex z, Complex m,
                                              std::shared_ptr<const HermitianSpectrum> a,
                                              double tau = 0.05);

Complex wigner_pi_entry(const WignerEquivalentSet& eq, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& w);

// --------------------------------------------------------------------------
// Spectral domains

enum class DomainKind { full, edge, bulk, outside };

/// A spectral domain in the upper half plane: the fundamental region
/// |z| >= tau, |E| <= 1/tau, N^{tau-1} <= eta <= 1/tau intersected with
/// the E-restriction of its kind. E-restrictions keep domains closed
/// under increasing eta.
struct SpectralDomain {
    DomainKind kind = DomainKind::full;
    int index = 0;
    double tau = 0.05;
    double tau_prime = 0.1;
    int N = 0;
    double e_min = 0.0;
    double e_max = 0.0;
    std::vector<std::pair<double, double>> support;  // for the outside kind

    double eta_min() const;
    double eta_max() const { return 1.0 / tau; }
    bool contains(Complex z) const;

    /// Log-spaced ladder sampler: n_energies values of E spread over the
    /// admissible range, each with etas descending from eta_max by
    /// multiplicative steps N^{-delta} down to eta_floor.
    std::vector<Complex> grid(int n_energies, double eta_floor, double delta = 0.1) const;
};

/// index: edge number (descending edge list) for edge kind, component
/// number for bulk kind; ignored otherwise. profile may be null for the
/// full kind only.
SpectralDomain make_domain(DomainKind kind, double tau, double tau_prime, int N,
                           const DensityProfile* profile, int index = 0);

}  // namespace speclaw
