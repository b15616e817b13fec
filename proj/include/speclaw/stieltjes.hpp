#pragma once

#include <complex>

#include "speclaw/model.hpp"

namespace speclaw {

using Complex = std::complex<double>;

struct FDerivatives {
    double f = 0.0;
    double fp = 0.0;
    double fpp = 0.0;
};

/// f(x) = -1/x + sum_i r_i / (x + 1/s_i) with r_i = phi * weight_i; the
/// functional inverse of m on the real line. x = +/-inf is admitted with
/// the convention f(inf) = 0 (the critical point at infinity when the
/// effective ratio is 1). Throws on pole proximity.
FDerivatives evaluate_f(double x, const PopulationModel& model);

Complex evaluate_f(Complex x, const PopulationModel& model);
Complex evaluate_f_prime(Complex x, const PopulationModel& model);

/// A solved point of the self-consistent equation f(m) = z.
struct StieltjesValue {
    Complex z;
    Complex m;
    double residual = 0.0;  // |f(m) - z|
};

/// Solves f(m) = z for the unique m in the upper half plane.
///
/// Damped fixed-point iteration on m <- 1/(-z + phi * sum_i s_i w_i / (1 + m s_i))
/// polished by complex Newton steps, with continuation in eta from
/// eta_start downward along the vertical line through Re z. For real z
/// (boundary mode) the continuation descends to settings.boundary_eta and
/// the returned value is Richardson-extrapolated from eta in
/// {1e-6, 1e-7, 1e-8}.
StieltjesValue solve_m(Complex z, const PopulationModel& model,
                       const SolverSettings& settings = {});

/// Fast boundary values m(E + i0) along a path of nearby energies:
/// keeps warm starts on the extrapolation ladder and refines by Newton,
/// falling back to the full continuation whenever a refinement stalls.
/// Uniqueness of the upper-half-plane root makes warm starts safe.
class BoundaryTracker {
public:
    BoundaryTracker(const PopulationModel& model, const SolverSettings& settings = {});
    StieltjesValue at(double E);

private:
    const PopulationModel& model_;
    SolverSettings settings_;
    std::vector<double> rungs_;
    std::vector<Complex> track_;
    bool primed_ = false;
};

/// Stieltjes transform of the deformed-semicircle density: the unique
/// upper-half-plane solution of m = (1/N) sum_i 1/(a_i - z - m), where
/// a_i runs over the spectrum of the deformation. Boundary mode as in
/// solve_m.
StieltjesValue solve_wigner_m(Complex z, const std::vector<double>& a_spectrum,
                              const SolverSettings& settings = {});

/// Support endpoints [lower, upper] of the deformed-semicircle density,
/// assuming single-interval support: critical values of u - h(u) beyond
/// the extremes of the deformation spectrum.
std::pair<double, double> wigner_support(const std::vector<double>& a_spectrum);

}  // namespace speclaw
