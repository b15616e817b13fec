#include "speclaw/profile.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <sstream>

namespace speclaw {

namespace {

// ---------------------------------------------------------------------------
// Root finding on monotone functions: bisection to a safe bracket, then
// safeguarded Newton.

struct Bracket {
    double lo, hi;
};

// Shrinks delta from `width` downward until pred(edge +/- delta) holds.
double creep_from(double edge, double width, int dir, const std::function<bool(double)>& pred) {
    double delta = 0.25 * width;
    for (int it = 0; it < 120; ++it) {
        const double x = edge + dir * delta;
        bool ok = false;
        try {
            ok = pred(x);
        } catch (const Error&) {
            ok = false;  // pole guard tripped; step further away
        }
        if (ok) return x;
        delta *= 0.5;
    }
    throw Error("critical-point bracketing failed near a pole of f");
}

double bisect_monotone(const std::function<double(double)>& g, Bracket b, bool increasing,
                       double xtol) {
    double glo = g(b.lo);
    if ((glo > 0.0) == increasing) std::swap(b.lo, b.hi);
    for (int it = 0; it < 240 && std::abs(b.hi - b.lo) > xtol * std::max(1.0, std::abs(b.lo));
         ++it) {
        const double mid = 0.5 * (b.lo + b.hi);
        const double gm = g(mid);
        if ((gm < 0.0) == increasing)
            b.lo = mid;
        else
            b.hi = mid;
    }
    return 0.5 * (b.lo + b.hi);
}

// Newton polish of a root of fp with derivative fpp, kept inside [lo, hi].
double polish_fprime_root(double x, double lo, double hi, const PopulationModel& model,
                          double xtol) {
    for (int it = 0; it < 40; ++it) {
        const FDerivatives d = evaluate_f(x, model);
        if (d.fpp == 0.0) break;
        const double step = d.fp / d.fpp;
        double next = x - step;
        if (!(next > lo && next < hi)) break;
        x = next;
        if (std::abs(step) < xtol * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

double f_value(double x, const PopulationModel& model) { return evaluate_f(x, model).f; }

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes on [-1,1], computed once by Newton on P_n.

template <int N>
const std::array<std::pair<double, double>, N>& gauss_legendre() {
    static const std::array<std::pair<double, double>, N> table = [] {
        std::array<std::pair<double, double>, N> t{};
        for (int i = 0; i < N; ++i) {
            double x = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
            double pp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= N; ++k) {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                pp = N * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / pp;
                x -= dx;
                if (std::abs(dx) < 1e-15) break;
            }
            t[i] = {x, 2.0 / ((1.0 - x * x) * pp * pp)};
        }
        return t;
    }();
    return table;
}

double gl16_integrate(const std::function<double(double)>& g, double a, double b) {
    const auto& nodes = gauss_legendre<16>();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double acc = 0.0;
    for (const auto& [x, w] : nodes) acc += w * g(c + h * x);
    return acc * h;
}

double density_of(const StieltjesValue& v) {
    const double rho = v.m.imag() / std::numbers::pi;
    if (rho < -1e-6 * std::max(1.0, std::abs(v.m)))
        throw Error("density_at: negative density, boundary solve unreliable");
    return std::max(0.0, rho);
}

double density_raw(double E, const PopulationModel& model, const SolverSettings& settings) {
    return density_of(solve_m(Complex(E, 0.0), model, settings));
}

// Stateful density evaluator for quadrature sweeps: warm-started
// boundary solves, orders of magnitude cheaper than fresh continuation
// at every node.
class TrackedDensity {
public:
    TrackedDensity(const PopulationModel& model, const SolverSettings& settings)
        : tracker_(model, settings) {}
    double operator()(double E) { return density_of(tracker_.at(E)); }

private:
    BoundaryTracker tracker_;
};

// Cumulative density over one support component, tabulated in the
// square-root variable t with E = edge -/+ t^2 so the integrand is
// analytic at the edges.
struct HalfTable {
    double edge = 0.0;  // anchor
    double sgn = 0.0;   // +1 when E grows with t (lower edge), -1 otherwise
    double T = 0.0;
    std::vector<double> cum;  // cum[j] = integral over t in [0, j*T/panels]

    double step() const { return T / static_cast<double>(cum.size() - 1); }

    void build(int panels, const std::function<double(double)>& rho) {
        cum.assign(panels + 1, 0.0);
        const double h = T / panels;
        auto g = [&](double t) { return 2.0 * t * rho(edge + sgn * t * t); };
        for (int j = 0; j < panels; ++j)
            cum[j + 1] = cum[j] + gl16_integrate(g, j * h, (j + 1) * h);
    }

    // integral over t in [0, t1]
    double eval(double t1, const std::function<double(double)>& rho) const {
        const double h = step();
        const int j = std::clamp(static_cast<int>(t1 / h), 0, static_cast<int>(cum.size()) - 2);
        auto g = [&](double t) { return 2.0 * t * rho(edge + sgn * t * t); };
        return cum[j] + gl16_integrate(g, j * h, t1);
    }

    // solve eval(t) = target; eval is strictly increasing
    double invert(double target, const std::function<double(double)>& rho) const {
        const double h = step();
        std::size_t j = std::upper_bound(cum.begin(), cum.end(), target) - cum.begin();
        double lo = (j == 0) ? 0.0 : (j - 1) * h;
        double hi = std::min(T, j * h);
        double t = 0.5 * (lo + hi);
        for (int it = 0; it < 80; ++it) {
            const double val = eval(t, rho) - target;
            if (val > 0.0)
                hi = t;
            else
                lo = t;
            const double der = 2.0 * t * rho(edge + sgn * t * t);
            double next = (der > 0.0) ? t - val / der : 0.5 * (lo + hi);
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - t) < 1e-13 * std::max(1.0, T) && std::abs(val) < 1e-12) {
                t = next;
                break;
            }
            t = next;
        }
        return t;
    }
};

struct ComponentCdfImpl {
    double lower = 0.0, upper = 0.0, mid = 0.0;
    HalfTable low_half, up_half;
    double mass = 0.0;

    void build(double lo, double hi, int panels, const std::function<double(double)>& rho) {
        lower = lo;
        upper = hi;
        mid = 0.5 * (lo + hi);
        low_half.edge = lo;
        low_half.sgn = +1.0;
        low_half.T = std::sqrt(mid - lo);
        low_half.build(panels, rho);
        up_half.edge = hi;
        up_half.sgn = -1.0;
        up_half.T = std::sqrt(hi - mid);
        up_half.build(panels, rho);
        mass = low_half.cum.back() + up_half.cum.back();
    }

    // integral of rho over [E, upper]
    double cdf_from_top(double E, const std::function<double(double)>& rho) const {
        if (E >= upper) return 0.0;
        if (E <= lower) return mass;
        if (E >= mid) return up_half.eval(std::sqrt(upper - E), rho);
        return mass - low_half.eval(std::sqrt(E - lower), rho);
    }

    // solve cdf_from_top(E) = target for E
    double quantile_from_top(double target, const std::function<double(double)>& rho) const {
        if (!(target > 0.0 && target < mass))
            throw Error("classical_locations: quantile target outside component mass");
        if (target <= up_half.cum.back()) {
            const double t = up_half.invert(target, rho);
            return upper - t * t;
        }
        const double t = low_half.invert(mass - target, rho);
        return lower + t * t;
    }
};

}  // namespace

struct ComponentCdf : ComponentCdfImpl {};

// ---------------------------------------------------------------------------

std::vector<CriticalPoint> locate_critical_points(const PopulationModel& model,
                                                  const SolverSettings& settings) {
    const auto& atoms = model.atoms();
    const std::size_t n = atoms.size();
    const double xtol = settings.root_tol;
    std::vector<CriticalPoint> pts;

    // I_1 = (-1/s_1, 0): x^2 f'(x) increases from -inf to 1; one root of f'.
    {
        const double left = -1.0 / atoms[0].s;
        auto g = [&](double x) {
            const FDerivatives d = evaluate_f(x, model);
            return x * x * d.fp;
        };
        const double xl = creep_from(left, -left, +1, [&](double x) { return g(x) < 0.0; });
        const double xr = creep_from(0.0, -left, -1, [&](double x) { return g(x) > 0.0; });
        double x = bisect_monotone(g, {xl, xr}, true, xtol);
        x = polish_fprime_root(x, left, 0.0, model, xtol);
        pts.push_back({x, f_value(x, model), 1, false});
    }

    // I_i = (-1/s_i, -1/s_{i-1}), i >= 2: x^3 f''(x) increases from -inf to
    // +inf; its root is the maximum of f', which decides 0 or 2 roots of f'.
    for (std::size_t i = 2; i <= n; ++i) {
        const double left = -1.0 / atoms[i - 1].s;
        const double right = -1.0 / atoms[i - 2].s;
        const double width = right - left;
        auto h = [&](double x) {
            const FDerivatives d = evaluate_f(x, model);
            return x * x * x * d.fpp;
        };
        const double xl = creep_from(left, width, +1, [&](double x) { return h(x) < 0.0; });
        const double xr = creep_from(right, width, -1, [&](double x) { return h(x) > 0.0; });
        double xstar = bisect_monotone(h, {xl, xr}, true, xtol);
        const double fp_max = evaluate_f(xstar, model).fp;
        if (std::abs(fp_max) <= 1e-12) {
            // Degenerate double critical point: two touching components.
            const double a = f_value(xstar, model);
            pts.push_back({xstar, a, static_cast<int>(i), true});
            pts.push_back({xstar, a, static_cast<int>(i), true});
            continue;
        }
        if (fp_max < 0.0) continue;  // no critical points in this interval
        auto fp = [&](double x) { return evaluate_f(x, model).fp; };
        const double bl = creep_from(left, xstar - left, +1, [&](double x) { return fp(x) < 0.0; });
        double x_hi_root = bisect_monotone(fp, {xstar, creep_from(right, right - xstar, -1,
                                                                  [&](double x) { return fp(x) < 0.0; })},
                                           false, xtol);
        double x_lo_root = bisect_monotone(fp, {bl, xstar}, true, xtol);
        x_lo_root = polish_fprime_root(x_lo_root, left, xstar, model, xtol);
        x_hi_root = polish_fprime_root(x_hi_root, xstar, right, model, xtol);
        pts.push_back({x_hi_root, f_value(x_hi_root, model), static_cast<int>(i), false});
        pts.push_back({x_lo_root, f_value(x_lo_root, model), static_cast<int>(i), false});
    }

    // Points inside I_1..I_n come out ordered by decreasing x, which orders
    // the critical values decreasingly.
    std::sort(pts.begin(), pts.end(),
              [](const CriticalPoint& a, const CriticalPoint& b) { return a.x > b.x; });

    // I_0 through u = 1/x: g'(u) = -1 + sum r_i s_i^2/(s_i+u)^2 decreases
    // from +inf at u = -s_n to -1 at infinity; exactly one root, possibly
    // at u = 0 (x at infinity).
    {
        const double s_min = atoms.back().s;
        auto gp = [&](double u) {
            double acc = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = atoms[i].s + u;
                acc += model.r(i) * atoms[i].s * atoms[i].s / (d * d);
            }
            return acc;
        };
        auto gval = [&](double u) {
            double acc = -u;
            for (std::size_t i = 0; i < n; ++i)
                acc += model.r(i) * atoms[i].s * u / (atoms[i].s + u);
            return acc;
        };
        const double ul = creep_from(-s_min, s_min, +1, [&](double u) { return gp(u) > 0.0; });
        double ur = 1.0;
        while (gp(ur) > 0.0) ur *= 2.0;
        double u = bisect_monotone(gp, {ul, ur}, false, xtol * 1e-3);
        // Newton polish in u.
        for (int it = 0; it < 40; ++it) {
            double gpp = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = atoms[i].s + u;
                gpp += -2.0 * model.r(i) * atoms[i].s * atoms[i].s / (d * d * d);
            }
            if (gpp == 0.0) break;
            const double step = gp(u) / gpp;
            u -= step;
            if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(u))) break;
        }
        const double a = gval(u);
        const double x = (std::abs(u) < 1e-300) ? std::numeric_limits<double>::infinity() : 1.0 / u;
        pts.push_back({x, a, 0, false});
    }

    // The outer critical value is the smallest; repair numerically tied
    // values by a stable sort if the expected ordering is violated.
    bool misordered = false;
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
        if (pts[k].a < pts[k + 1].a - 1e-9 * std::max(1.0, std::abs(pts[k].a))) misordered = true;
    if (misordered)
        std::stable_sort(pts.begin(), pts.end(),
                         [](const CriticalPoint& a, const CriticalPoint& b) { return a.a > b.a; });
    if (pts.size() % 2 != 0) throw Error("locate_critical_points: odd number of critical points");
    return pts;
}

DensityProfile::DensityProfile(PopulationModel model, Thresholds thresholds,
                               SolverSettings settings)
    : model_(std::move(model)), thresholds_(thresholds), settings_(settings) {
    model_.require_admissible(thresholds_.tau);
    critical_ = locate_critical_points(model_, settings_);
    atom_mass_ = atom_mass(model_);

    const std::size_t p = critical_.size() / 2;
    for (std::size_t k = 0; k < p; ++k) {
        SupportComponent c;
        c.upper = critical_[2 * k].a;
        c.lower = std::max(0.0, critical_[2 * k + 1].a);
        components_.push_back(c);
    }
    for (const auto& c : critical_) degenerate_ = degenerate_ || c.degenerate;
    // Adjacent components touching within resolution also count.
    for (std::size_t k = 1; k + 1 < critical_.size(); k += 2)
        if (std::abs(critical_[k].a - critical_[k + 1].a) <
            1e-9 * std::max(1.0, std::abs(critical_[k].a)))
            degenerate_ = true;

    auto tables = std::make_shared<std::vector<ComponentCdf>>(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        TrackedDensity rho(model_, settings_);
        (*tables)[k].build(components_[k].lower, components_[k].upper,
                           settings_.quadrature_panels, std::ref(rho));
        components_[k].mass = (*tables)[k].mass;
    }
    cdf_ = std::move(tables);
}

std::vector<double> DensityProfile::edges() const {
    std::vector<double> e;
    e.reserve(critical_.size());
    for (const auto& c : critical_) e.push_back(std::max(0.0, c.a));
    return e;
}

double DensityProfile::kappa(double E) const {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& c : critical_) d = std::min(d, std::abs(E - std::max(0.0, c.a)));
    return d;
}

bool DensityProfile::in_support(double E) const {
    for (const auto& c : components_)
        if (E >= c.lower && E <= c.upper) return true;
    return false;
}

double density_at(double E, const DensityProfile& profile) {
    if (!(E > 0.0)) throw Error("density_at: E must be positive (the atom at zero is separate)");
    return density_raw(E, profile.model(), profile.settings());
}

double atom_mass(const PopulationModel& model) {
    double positive_weight = 0.0;
    for (const auto& a : model.atoms()) positive_weight += a.weight;
    return std::max(0.0, 1.0 - model.phi() * positive_weight);
}

std::vector<double> classical_locations(const DensityProfile& profile, int N) {
    if (N <= 0) throw Error("classical_locations: N must be positive");
    const auto& tables = *profile.cdf_;
    std::vector<double> gamma;
    for (std::size_t k = 0; k < tables.size(); ++k) {
        TrackedDensity rho(profile.model(), profile.settings());
        const double mass = tables[k].mass;
        const int count = static_cast<int>(std::lround(N * mass));
        for (int i = 1; i <= count; ++i) {
            const double target = (i - 0.5) / N;
            if (target >= mass)
                throw Error("classical_locations: quantile target beyond component mass");
            gamma.push_back(tables[k].quantile_from_top(target, std::ref(rho)));
        }
    }
    return gamma;
}

BulkCounts bulk_counts(const DensityProfile& profile) {
    const auto& dims = profile.model().dims();
    if (!dims) throw Error("bulk_counts: model dims required");
    const int N = dims->N;
    const int M = dims->M;
    const auto& crit = profile.critical_points();
    const std::size_t p = profile.n_components();

    BulkCounts out;
    double bulk_total = 0.0;
    for (const auto& c : profile.components()) bulk_total += c.mass;
    const int total = static_cast<int>(std::lround(N * bulk_total));

    // Pole-counting route: population eigenvalues -1/s_i between the two
    // critical points of the component. Valid for every component except,
    // when M > N, the outermost one, which is fixed by the total count.
    std::vector<int> counting(p, -1);
    int assigned = 0;
    for (std::size_t k = 0; k < p; ++k) {
        const double x_hi = crit[2 * k].x;
        const double x_lo = crit[2 * k + 1].x;
        if (!(x_lo < 0.0) && k + 1 == p) continue;  // outer critical point right of all poles
        int cnt = 0;
        for (std::size_t i = 0; i < profile.model().n_atoms(); ++i) {
            const double pole = -1.0 / profile.model().atoms()[i].s;
            if (pole >= x_lo && pole <= x_hi)
                cnt += static_cast<int>(std::lround(M * profile.model().atoms()[i].weight));
        }
        counting[k] = cnt;
        assigned += cnt;
    }
    for (std::size_t k = 0; k < p; ++k)
        if (counting[k] < 0) counting[k] = total - assigned;

    for (std::size_t k = 0; k < p; ++k) {
        const double qmass = N * profile.components()[k].mass;
        if (std::abs(qmass - counting[k]) > 0.5) {
            std::ostringstream os;
            os << "bulk_counts: quantile mass " << qmass << " and counting formula "
               << counting[k] << " disagree on component " << k;
            throw Error(os.str());
        }
        out.counts.push_back(counting[k]);
        out.quantile_mass.push_back(qmass);
    }
    return out;
}

RegularityReport check_regularity(const DensityProfile& profile, double tau, double tau_prime) {
    RegularityReport report;
    const auto& crit = profile.critical_points();
    const auto& atoms = profile.model().atoms();

    for (std::size_t k = 0; k < crit.size(); ++k) {
        EdgeRegularity e;
        e.a = std::max(0.0, crit[k].a);
        e.min_gap = std::numeric_limits<double>::infinity();
        for (std::size_t l = 0; l < crit.size(); ++l)
            if (l != k) e.min_gap = std::min(e.min_gap, std::abs(crit[k].a - crit[l].a));
        e.min_pole_dist = std::numeric_limits<double>::infinity();
        if (std::isinf(crit[k].x)) {
            // x at infinity sits at infinite distance from every pole
        } else {
            for (const auto& atom : atoms)
                e.min_pole_dist = std::min(e.min_pole_dist, std::abs(crit[k].x + 1.0 / atom.s));
        }
        e.regular = (e.a >= tau) && (e.min_gap >= tau) && (e.min_pole_dist >= tau) &&
                    !crit[k].degenerate;
        report.edges.push_back(e);
    }

    for (const auto& comp : profile.components()) {
        BulkRegularity b;
        const double lo = comp.lower + tau_prime;
        const double hi = comp.upper - tau_prime;
        if (lo >= hi) {
            b.min_density = 0.0;
            b.regular = false;
        } else {
            b.min_density = std::numeric_limits<double>::infinity();
            const int grid = 64;
            for (int j = 0; j <= grid; ++j) {
                const double E = lo + (hi - lo) * j / grid;
                b.min_density = std::min(b.min_density, density_at(E, profile));
            }
            b.regular = b.min_density >= profile.thresholds().bulk_density_floor;
        }
        report.bulks.push_back(b);

        if (lo < hi) {
            StabilityProbe probe;
            probe.z = Complex(0.5 * (comp.lower + comp.upper), 0.0);
            auto [alpha, beta] =
                stability_coefficients(probe.z, profile.model(), profile.settings());
            probe.alpha = alpha;
            probe.beta = beta;
            report.probes.push_back(probe);
        }
    }
    if (!profile.components().empty()) {
        StabilityProbe outside;
        outside.z = Complex(profile.components().front().upper + tau_prime, 0.0);
        auto [alpha, beta] = stability_coefficients(outside.z, profile.model(), profile.settings());
        outside.alpha = alpha;
        outside.beta = beta;
        report.probes.push_back(outside);
    }
    return report;
}

double edge_curvature(const DensityProfile& profile, std::size_t k) {
    const auto& crit = profile.critical_points();
    if (k >= crit.size()) throw Error("edge_curvature: edge index out of range");
    if (std::isinf(crit[k].x) || crit[k].degenerate) {
        std::ostringstream os;
        os << "edge_curvature: edge " << k << " is degenerate";
        throw Error(os.str());
    }
    const double fpp = evaluate_f(crit[k].x, profile.model()).fpp;
    if (std::abs(fpp) < 1e-10) {
        std::ostringstream os;
        os << "edge_curvature: vanishing f'' at edge " << k;
        throw Error(os.str());
    }
    return std::cbrt(std::abs(fpp) / 2.0);
}

std::pair<Complex, Complex> stability_coefficients(Complex z, const PopulationModel& model,
                                                   const SolverSettings& settings) {
    const Complex m = solve_m(z, model, settings).m;
    return stability_coefficients(z, m, model, settings);
}

std::pair<Complex, Complex> stability_coefficients(Complex z, Complex u,
                                                   const PopulationModel& model,
                                                   const SolverSettings& settings) {
    const Complex m = solve_m(z, model, settings).m;
    Complex alpha = 0.0;
    Complex beta = 1.0;
    for (std::size_t i = 0; i < model.n_atoms(); ++i) {
        const double sinv = 1.0 / model.atoms()[i].s;
        const Complex dm = m + sinv;
        const Complex du = u + sinv;
        if (std::abs(dm) < 1e-12 || std::abs(du) < 1e-12)
            throw Error("stability_coefficients: pole proximity");
        const double r = model.r(i);
        alpha -= m * sinv * r / (dm * dm * du);
        beta -= m * m * r / (dm * dm);
    }
    return {alpha, beta};
}

}  // namespace speclaw
