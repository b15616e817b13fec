#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace speclaw {

/// Exception type for all model/solver failures in this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// One atom of the population spectral measure: an eigenvalue of Sigma
/// together with its relative multiplicity.
struct SpectralAtom {
    double s = 0.0;
    double weight = 0.0;
};

struct ModelDims {
    int M = 0;
    int Mhat = 0;
    int N = 0;
};

/// Numeric configuration shared by the deterministic solvers. The
/// regularity thresholds tau/tau_prime and the bulk density floor are
/// tunable constants, not laws of nature.
struct Thresholds {
    double tau = 0.05;
    double tau_prime = 0.1;
    double bulk_density_floor = 0.01;
};

struct SolverSettings {
    double residual_tol = 1e-12;   // target |f(m) - z| / max(1,|z|)
    int max_iterations = 400;      // per eta step
    double eta_start = 1.0;        // continuation starts here
    double eta_step = 0.7;         // multiplicative eta descent
    double boundary_eta = 1e-9;    // deepest eta for m(E + i0)
    double root_tol = 1e-12;       // critical-point tolerance in x
    int quadrature_panels = 160;   // per component half, for CDF tables
};

/// The pair (phi, pi): dimensional ratio M/N plus the atomic spectral
/// measure of Sigma. Atoms are stored strictly decreasing in s; weights
/// sum to at most 1, the remainder being the mass of pi at zero.
class PopulationModel {
public:
    PopulationModel(double phi, std::vector<SpectralAtom> atoms,
                    std::optional<ModelDims> dims = std::nullopt);

    double phi() const { return phi_; }
    const std::vector<SpectralAtom>& atoms() const { return atoms_; }
    const std::optional<ModelDims>& dims() const { return dims_; }

    /// Mass of pi at zero: 1 - sum of atom weights.
    double zero_mass() const { return zero_mass_; }

    /// r_i = phi * weight_i, the coefficient of the i-th pole of f.
    double r(std::size_t i) const { return phi_ * atoms_[i].weight; }

    std::size_t n_atoms() const { return atoms_.size(); }

    /// Throws unless the model satisfies the structural bounds at the
    /// given tau: s_i <= 1/tau and pi([0,tau]) <= 1 - tau.
    void require_admissible(double tau) const;

private:
    double phi_ = 0.0;
    std::vector<SpectralAtom> atoms_;
    std::optional<ModelDims> dims_;
    double zero_mass_ = 0.0;
};

/// Convenience constructors for the models used throughout the tests
/// and experiments.
PopulationModel identity_model(double phi, std::optional<ModelDims> dims = std::nullopt);
PopulationModel single_atom_model(double phi, double s,
                                  std::optional<ModelDims> dims = std::nullopt);

}  // namespace speclaw
