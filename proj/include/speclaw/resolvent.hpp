#pragma once

#include <optional>

#include "speclaw/equivalents.hpp"
#include "speclaw/sampler.hpp"

namespace speclaw {

/// One singular value decomposition of Sigma^{1/2} X serves the block
/// resolvent G(z) for every z: generalized entries cost O(rank) per
/// vector pair after an O((M+N) rank) projection.
class ResolventFactorization {
public:
    ResolventFactorization(const Eigen::MatrixXd& x,
                           std::shared_ptr<const HermitianSpectrum> sigma);

    int M() const { return M_; }
    int N() const { return N_; }
    int rank() const { return rank_; }
    /// Squared singular values of Sigma^{1/2} X, sorted decreasing; the
    /// nontrivial spectrum shared by T X X^* T^* and its companion.
    const Eigen::VectorXd& eigenvalues() const { return lambda_; }
    const std::shared_ptr<const HermitianSpectrum>& sigma() const { return sigma_; }

    /// Soft high-probability sanity bound on ||X^* X||; violations are
    /// recorded, not fatal.
    bool norm_bound_ok() const { return norm_bound_ok_; }
    double x_norm_sq() const { return x_norm_sq_; }

    /// Cached contraction data for a full (M+N)-dimensional vector.
    struct Projection {
        Eigen::VectorXd sv;   // Sigma^{1/2} v_M
        Eigen::VectorXd a;    // xi_k . Sigma^{1/2} v_M
        Eigen::VectorXd b;    // zeta_k . v_N
        Eigen::VectorXd vN;
    };
    Projection project(const Eigen::VectorXd& v) const;

    /// <v, G(z) w>.
    Complex entry(Complex z, const Projection& pv, const Projection& pw) const;
    Complex entry(Complex z, const Eigen::VectorXd& v, const Eigen::VectorXd& w) const;

    /// (1/N) tr of the N-block of G: the Stieltjes transform of the
    /// empirical companion density (zeros included).
    Complex empirical_m_N(Complex z) const;
    /// (1/M) tr of the resolvent of T X X^* T^*.
    Complex empirical_m_M(Complex z) const;

    /// Relative residual of sum_mu |G_{w mu}|^2 = Im G_ww / eta for a
    /// unit vector w on the N block; exact up to floating point.
    double ward_residual(Complex z, const Eigen::VectorXd& wN) const;

private:
    int M_ = 0, N_ = 0, rank_ = 0;
    Eigen::VectorXd lambda_;
    Eigen::MatrixXd xi_;    // M x rank
    Eigen::MatrixXd zeta_;  // N x rank
    std::shared_ptr<const HermitianSpectrum> sigma_;
    double x_norm_sq_ = 0.0;
    bool norm_bound_ok_ = true;
};

struct ScanRecord {
    Complex z;
    double psi = 0.0;
    double max_aniso = 0.0;   // max_(v,w) |<v, S^-1 (G - Pi) S^-1 w>|
    double aniso_ratio = 0.0; // max_aniso / psi
    double avg_err = 0.0;     // |m_N - m|
    double avg_ratio = 0.0;   // |m_N - m| * N eta
    double outside_ratio = 0.0;  // |m_N - m| sqrt(kappa+eta) / psi^2
    int n_vec = 0;
    std::uint64_t seed = 0;
};

struct ErrorScan {
    std::vector<ScanRecord> records;
    std::vector<std::string> notes;  // skipped grid points etc.

    double max_aniso_ratio() const;
    double max_avg_ratio() const;
};

struct ScanOptions {
    int n_vectors = 16;
    std::uint64_t seed = 0;
    double m_corruption = 0.0;  // negative-control shift added to m for Pi
    SolverSettings solver;
};

/// Anisotropic local-law scan: per grid point, the worst generalized
/// entry of S^-1 (G - Pi) S^-1 over a vector panel mixing coordinate,
/// all-ones, Sigma-eigenvector, and random unit directions, with its
/// ratio to Psi(z); plus the averaged error |m_N - m|.
ErrorScan anisotropic_scan(const ResolventFactorization& fact, const PopulationModel& model,
                           const std::vector<Complex>& grid, const ScanOptions& options = {});

/// Averaged-law scan only: |m_N - m| * N eta, and the outside-refined
/// ratio |m_N - m| sqrt(kappa + eta) / Psi^2 computed from the profile's
/// edge distances.
ErrorScan averaged_scan(const ResolventFactorization& fact, const DensityProfile& profile,
                        const std::vector<Complex>& grid, const ScanOptions& options = {});

/// Eigendecomposition of W + A reused across the grid.
class WignerResolvent {
public:
    explicit WignerResolvent(const Eigen::MatrixXd& w_plus_a);
    int N() const { return static_cast<int>(evals_.size()); }
    const Eigen::VectorXd& eigenvalues() const { return evals_; }
    Complex entry(Complex z, const Eigen::VectorXd& v, const Eigen::VectorXd& w) const;
    Complex trace_m(Complex z) const;

private:
    Eigen::VectorXd evals_;
    Eigen::MatrixXd basis_;
};

/// Local-law scan for W + A against the deformed-semicircle equivalents.
ErrorScan wigner_scan(const WignerResolvent& resolvent,
                      std::shared_ptr<const HermitianSpectrum> a_spectrum,
                      const std::vector<Complex>& grid, const ScanOptions& options = {});

/// The vector panel used by the scans (unit vectors of dimension dim):
/// coordinate, normalized all-ones, eigendirections of sigma when given,
/// and uniform random directions up to n_vectors.
std::vector<Eigen::VectorXd> scan_panel(int dim_m, int dim_n, int n_vectors, std::uint64_t seed,
                                        const HermitianSpectrum* sigma = nullptr);

}  // namespace speclaw
