#include "speclaw/stieltjes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace speclaw {

namespace {

constexpr double kPoleGuard = 1e-12;

[[noreturn]] void throw_pole(double x, double pole) {
    std::ostringstream os;
    os << "evaluate_f: x = " << x << " within machine guard of pole " << pole;
    throw Error(os.str());
}

}  // namespace

FDerivatives evaluate_f(double x, const PopulationModel& model) {
    if (std::isinf(x)) return {0.0, 0.0, 0.0};
    if (std::abs(x) < kPoleGuard) throw_pole(x, 0.0);
    FDerivatives d;
    d.f = -1.0 / x;
    d.fp = 1.0 / (x * x);
    d.fpp = -2.0 / (x * x * x);
    for (std::size_t i = 0; i < model.n_atoms(); ++i) {
        const double pole = -1.0 / model.atoms()[i].s;
        const double den = x - pole;
        if (std::abs(den) < kPoleGuard) throw_pole(x, pole);
        const double r = model.r(i);
        d.f += r / den;
        d.fp -= r / (den * den);
        d.fpp += 2.0 * r / (den * den * den);
    }
    return d;
}

Complex evaluate_f(Complex x, const PopulationModel& model) {
    Complex f = -1.0 / x;
    for (std::size_t i = 0; i < model.n_atoms(); ++i)
        f += model.r(i) / (x + 1.0 / model.atoms()[i].s);
    return f;
}

Complex evaluate_f_prime(Complex x, const PopulationModel& model) {
    Complex fp = 1.0 / (x * x);
    for (std::size_t i = 0; i < model.n_atoms(); ++i) {
        const Complex den = x + 1.0 / model.atoms()[i].s;
        fp -= model.r(i) / (den * den);
    }
    return fp;
}

namespace {

// Shared continuation driver. A flow provides the self-map of the upper
// half plane, the defining residual F(m) and its derivative. Newton is
// the workhorse; the damped fixed-point map is the fallback that cannot
// leave C_+.
template <class Flow>
struct LevelSolver {
    const Flow& flow;
    const SolverSettings& settings;

    bool refine(Complex z, Complex& m, double tol) const {
        const bool interior = z.imag() > 0.0;
        Complex best = m;
        double best_res = std::abs(flow.F(best, z));
        if (best_res <= tol) {
            m = best;
            return true;
        }
        Complex cur = best;
        for (int it = 0; it < settings.max_iterations; ++it) {
            bool stepped = false;
            const Complex Fc = flow.F(cur, z);
            const Complex dF = flow.dF(cur, z);
            if (std::abs(dF) > 1e-300 && std::isfinite(std::abs(dF))) {
                Complex step = Fc / dF;
                for (int half = 0; half < 8 && !stepped; ++half) {
                    const Complex cand = cur - step;
                    if (interior && cand.imag() <= 0.0) {
                        step *= 0.5;
                        continue;
                    }
                    const double res = std::abs(flow.F(cand, z));
                    // Newton counts as progress only when it bites hard;
                    // marginal gains would starve the fixed-point fallback.
                    if (std::isfinite(res) && (res < 0.5 * std::abs(Fc) || res <= tol)) {
                        cur = cand;
                        stepped = true;
                    } else {
                        step *= 0.5;
                    }
                }
            }
            if (!stepped) {
                // Plain fixed-point step. The undamped map preserves C_+ and
                // converges globally for Im z > 0, so it is accepted even
                // when the residual rises; the best iterate is kept aside.
                Complex cand = flow.fp_map(cur, z);
                if (!std::isfinite(std::abs(cand)) || (interior && cand.imag() <= 0.0))
                    cand = flow.initial_guess(z);
                cur = cand;
            }
            const double res = std::abs(flow.F(cur, z));
            if (std::isfinite(res) && res < best_res) {
                best = cur;
                best_res = res;
            }
            if (best_res <= tol) break;
        }
        m = best;
        return best_res <= tol;
    }
};

template <class Flow>
StieltjesValue continuation_solve(Complex z, const Flow& flow, const SolverSettings& settings) {
    const double eta_target = z.imag();
    if (eta_target < 0.0) throw Error("solve_m: spectral parameter below the real axis");
    const double E = z.real();
    const bool boundary = eta_target == 0.0;

    LevelSolver<Flow> level{flow, settings};
    const double tol_at = settings.residual_tol * std::max(1.0, std::abs(z));

    double eta = std::max(settings.eta_start, eta_target);
    Complex m = flow.initial_guess(Complex(E, eta));
    if (!level.refine(Complex(E, eta), m, tol_at)) {
        std::ostringstream os;
        os << "solve_m: no convergence at starting scale eta = " << eta << ", E = " << E
           << ", residual " << std::abs(flow.F(m, Complex(E, eta)));
        throw Error(os.str());
    }

    const double eta_floor = boundary ? settings.boundary_eta : eta_target;
    // Record values on the extrapolation ladder as the continuation passes them.
    const double ladder[3] = {1e-6, 1e-7, 1e-8};
    Complex ladder_m[3];
    bool ladder_hit[3] = {false, false, false};

    auto descend_to = [&](double eta_next) -> bool {
        double from = eta;
        Complex trial = m;
        int depth = 0;
        while (true) {
            if (level.refine(Complex(E, eta_next), trial, tol_at)) {
                eta = eta_next;
                m = trial;
                return true;
            }
            // Geometric substep between the last good eta and the target.
            if (++depth > 48) return false;
            double mid = std::sqrt(from * eta_next);
            trial = m;
            if (!level.refine(Complex(E, mid), trial, tol_at)) {
                eta_next = mid;  // keep shrinking the step
                trial = m;
                continue;
            }
            from = mid;
            m = trial;
        }
    };

    while (eta > eta_floor) {
        double eta_next = std::max(eta_floor, eta * settings.eta_step);
        // Land exactly on ladder rungs that lie inside this step.
        if (boundary) {
            for (double rung : ladder)
                if (rung < eta && rung > eta_next) eta_next = rung;
        }
        if (!descend_to(eta_next)) {
            std::ostringstream os;
            os << "solve_m: continuation stalled at eta = " << eta << " (target " << eta_floor
               << "), E = " << E << ", residual " << std::abs(flow.F(m, Complex(E, eta)));
            throw Error(os.str());
        }
        if (boundary) {
            for (int i = 0; i < 3; ++i) {
                if (!ladder_hit[i] && eta == ladder[i]) {
                    ladder_m[i] = m;
                    ladder_hit[i] = true;
                }
            }
        }
    }

    StieltjesValue out;
    if (!boundary) {
        out.z = z;
        out.m = m;
        out.residual = std::abs(flow.F(m, z));
        if (eta_target > 0.0 && !(m.imag() > 0.0)) throw Error("solve_m: solution left the upper half plane");
        return out;
    }

    // Boundary value: Richardson extrapolation through the eta ladder,
    // against the deep continuation value as a fallback at square-root
    // edge points where the expansion in eta is not polynomial.
    Complex extrap = m;
    if (ladder_hit[0] && ladder_hit[1] && ladder_hit[2]) {
        const Complex m01 = (10.0 * ladder_m[1] - ladder_m[0]) / 9.0;
        const Complex m12 = (10.0 * ladder_m[2] - ladder_m[1]) / 9.0;
        extrap = (100.0 * m12 - m01) / 99.0;
    }
    const Complex zE(E, 0.0);
    const double res_extrap = std::abs(flow.F(extrap, zE));
    const double res_deep = std::abs(flow.F(m, zE));
    out.z = zE;
    if (res_extrap <= res_deep) {
        out.m = extrap;
        out.residual = res_extrap;
    } else {
        out.m = m;
        out.residual = res_deep;
    }
    return out;
}

struct CovarianceFlow {
    const PopulationModel& model;

    Complex fp_map(Complex m, Complex z) const {
        Complex s = -z;
        for (std::size_t i = 0; i < model.n_atoms(); ++i) {
            const double si = model.atoms()[i].s;
            s += model.phi() * model.atoms()[i].weight * si / (1.0 + m * si);
        }
        return 1.0 / s;
    }
    Complex F(Complex m, Complex z) const { return evaluate_f(m, model) - z; }
    Complex dF(Complex m, Complex /*z*/) const { return evaluate_f_prime(m, model); }
    Complex initial_guess(Complex z) const { return -1.0 / z; }
};

struct WignerFlow {
    const std::vector<double>& a;

    Complex S(Complex m, Complex z) const {
        Complex acc = 0.0;
        for (double ai : a) acc += 1.0 / (ai - z - m);
        return acc / static_cast<double>(a.size());
    }
    Complex fp_map(Complex m, Complex z) const { return S(m, z); }
    Complex F(Complex m, Complex z) const { return S(m, z) - m; }
    Complex dF(Complex m, Complex z) const {
        Complex acc = 0.0;
        for (double ai : a) {
            const Complex den = ai - z - m;
            acc += 1.0 / (den * den);
        }
        return acc / static_cast<double>(a.size()) - 1.0;
    }
    Complex initial_guess(Complex z) const { return -1.0 / z; }
};

}  // namespace

StieltjesValue solve_m(Complex z, const PopulationModel& model, const SolverSettings& settings) {
    CovarianceFlow flow{model};
    return continuation_solve(z, flow, settings);
}

BoundaryTracker::BoundaryTracker(const PopulationModel& model, const SolverSettings& settings)
    : model_(model), settings_(settings) {
    rungs_ = {1e-6, 1e-7, 1e-8, settings_.boundary_eta};
    track_.assign(rungs_.size(), Complex(0.0, 1.0));
}

StieltjesValue BoundaryTracker::at(double E) {
    CovarianceFlow flow{model_};
    LevelSolver<CovarianceFlow> level{flow, settings_};
    const double tol = settings_.residual_tol;

    bool ok = primed_;
    if (ok) {
        for (std::size_t r = 0; r < rungs_.size() && ok; ++r)
            ok = level.refine(Complex(E, rungs_[r]), track_[r], tol);
    }
    if (!ok) {
        // fresh continuation per rung; the warm path takes over afterwards
        for (std::size_t r = 0; r < rungs_.size(); ++r)
            track_[r] = solve_m(Complex(E, rungs_[r]), model_, settings_).m;
        primed_ = true;
    }

    const Complex m01 = (10.0 * track_[1] - track_[0]) / 9.0;
    const Complex m12 = (10.0 * track_[2] - track_[1]) / 9.0;
    const Complex extrap = (100.0 * m12 - m01) / 99.0;
    const Complex zE(E, 0.0);
    StieltjesValue out;
    out.z = zE;
    const double res_extrap = std::abs(flow.F(extrap, zE));
    const double res_deep = std::abs(flow.F(track_.back(), zE));
    if (res_extrap <= res_deep) {
        out.m = extrap;
        out.residual = res_extrap;
    } else {
        out.m = track_.back();
        out.residual = res_deep;
    }
    return out;
}

StieltjesValue solve_wigner_m(Complex z, const std::vector<double>& a_spectrum,
                              const SolverSettings& settings) {
    if (a_spectrum.empty()) throw Error("solve_wigner_m: empty deformation spectrum");
    WignerFlow flow{a_spectrum};
    return continuation_solve(z, flow, settings);
}

std::pair<double, double> wigner_support(const std::vector<double>& a_spectrum) {
    if (a_spectrum.empty()) throw Error("wigner_support: empty deformation spectrum");
    const double a_min = *std::min_element(a_spectrum.begin(), a_spectrum.end());
    const double a_max = *std::max_element(a_spectrum.begin(), a_spectrum.end());
    const double n = static_cast<double>(a_spectrum.size());

    auto h = [&](double u) {
        double acc = 0.0;
        for (double ai : a_spectrum) acc += 1.0 / (ai - u);
        return acc / n;
    };
    auto hp = [&](double u) {
        double acc = 0.0;
        for (double ai : a_spectrum) acc += 1.0 / ((ai - u) * (ai - u));
        return acc / n;
    };
    // h'(u) is monotone on each side of the spectrum and crosses 1 exactly once.
    auto edge = [&](bool right) {
        double lo, hi;
        if (right) {
            lo = a_max + 1e-12;
            hi = a_max + 1.0;
            while (hp(hi) > 1.0) hi = a_max + 2.0 * (hi - a_max);
        } else {
            hi = a_min - 1e-12;
            lo = a_min - 1.0;
            while (hp(lo) > 1.0) lo = a_min - 2.0 * (a_min - lo);
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const bool above = hp(mid) > 1.0;
            if (right) {
                (above ? lo : hi) = mid;
            } else {
                (above ? hi : lo) = mid;
            }
        }
        const double u = 0.5 * (lo + hi);
        return u - h(u);
    };
    return {edge(false), edge(true)};
}

}  // namespace speclaw
