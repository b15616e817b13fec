#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "speclaw/stieltjes.hpp"

namespace speclaw {

struct ComponentCdf;
struct BulkCounts;
class DensityProfile;

std::vector<double> classical_locations(const DensityProfile& profile, int N);
BulkCounts bulk_counts(const DensityProfile& profile);

/// A critical point of f together with its critical value. x may be
/// +/-infinity (the critical point at infinity when the effective
/// dimensional ratio is 1).
struct CriticalPoint {
    double x = 0.0;
    double a = 0.0;
    int interval = 0;        // 0 for the outer interval, i >= 1 between poles
    bool degenerate = false; // double root of f'
};

struct SupportComponent {
    double lower = 0.0;   // a_{2k}
    double upper = 0.0;   // a_{2k-1}
    double mass = 0.0;    // integral of the density over the component
};

/// Solved deterministic spectrum: critical points x_k, edges a_k = f(x_k)
/// sorted decreasing, support components, mass of the atom at zero, and
/// per-component eigenvalue counts when dims are available.
class DensityProfile {
public:
    DensityProfile(PopulationModel model, Thresholds thresholds = {},
                   SolverSettings settings = {});

    const PopulationModel& model() const { return model_; }
    const Thresholds& thresholds() const { return thresholds_; }
    const SolverSettings& settings() const { return settings_; }

    /// Critical points sorted so that a_1 >= a_2 >= ... >= a_{2p};
    /// edge index k below is zero-based into this list.
    const std::vector<CriticalPoint>& critical_points() const { return critical_; }
    std::vector<double> edges() const;
    const std::vector<SupportComponent>& components() const { return components_; }
    std::size_t n_components() const { return components_.size(); }

    double atom_mass_at_zero() const { return atom_mass_; }

    /// True when two critical values coincide within resolution
    /// (touching components); downstream regularity checks then fail
    /// explicitly instead of this solve failing.
    bool has_degenerate_edges() const { return degenerate_; }

    /// Distance from E to the boundary of the support.
    double kappa(double E) const;
    bool in_support(double E) const;

private:
    PopulationModel model_;
    Thresholds thresholds_;
    SolverSettings settings_;
    std::vector<CriticalPoint> critical_;
    std::vector<SupportComponent> components_;
    double atom_mass_ = 0.0;
    bool degenerate_ = false;
    std::shared_ptr<const std::vector<ComponentCdf>> cdf_;

    friend std::vector<double> classical_locations(const DensityProfile&, int);
    friend BulkCounts bulk_counts(const DensityProfile&);
};

/// All critical points of f, one per sign change, degenerate points
/// flagged and returned twice. Sorted with a descending.
std::vector<CriticalPoint> locate_critical_points(const PopulationModel& model,
                                                  const SolverSettings& settings = {});

/// Density of the asymptotic eigenvalue measure at E > 0; the atom at
/// zero is reported separately by atom_mass.
double density_at(double E, const DensityProfile& profile);

/// Mass of the asymptotic density at zero: (1 - phi)_+ when all
/// population eigenvalues are positive; any mass of pi at zero folds in
/// as phi * pi({0}).
double atom_mass(const PopulationModel& model);

/// Classical eigenvalue locations gamma_1 >= ... >= gamma_{M and N}:
/// N * integral_{gamma_i}^inf d rho = i - 1/2, by square-root-aware
/// quadrature of the solved density.
std::vector<double> classical_locations(const DensityProfile& profile, int N);

struct BulkCounts {
    std::vector<int> counts;           // N_k per component, rightmost first
    std::vector<double> quantile_mass; // N * component mass (the quantile route)
};

/// Per-component eigenvalue counts computed both by integrating the
/// density and by the pole-counting formula; throws if the two routes
/// disagree by more than 0.5.
BulkCounts bulk_counts(const DensityProfile& profile);

struct EdgeRegularity {
    double a = 0.0;
    double min_gap = 0.0;       // min_{l != k} |a_k - a_l|
    double min_pole_dist = 0.0; // min_i |x_k + 1/s_i|
    bool regular = false;
};

struct BulkRegularity {
    double min_density = 0.0; // over [a_{2k}+tau', a_{2k-1}-tau']
    bool regular = false;
};

struct StabilityProbe {
    Complex z;
    Complex alpha;
    Complex beta;
};

struct RegularityReport {
    std::vector<EdgeRegularity> edges;
    std::vector<BulkRegularity> bulks;
    std::vector<StabilityProbe> probes;
};

RegularityReport check_regularity(const DensityProfile& profile, double tau,
                                  double tau_prime);

/// Edge curvature (|f''(x_k)| / 2)^(1/3) for a regular edge (zero-based
/// index into the descending edge list).
double edge_curvature(const DensityProfile& profile, std::size_t k);

/// Coefficients of the quadratic expansion f(u) - f(m) = alpha (u-m)^2
/// + beta (u-m) + ... at m = m(z); beta equals m^2 f'(m) exactly.
std::pair<Complex, Complex> stability_coefficients(Complex z, const PopulationModel& model,
                                                   const SolverSettings& settings = {});
std::pair<Complex, Complex> stability_coefficients(Complex z, Complex u,
                                                   const PopulationModel& model,
                                                   const SolverSettings& settings = {});

}  // namespace speclaw
