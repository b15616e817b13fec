#include "speclaw/equivalents.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace speclaw {

HermitianSpectrum HermitianSpectrum::diagonal(Eigen::VectorXd values) {
    HermitianSpectrum s;
    s.values_ = std::move(values);
    s.trivial_ = true;
    return s;
}

HermitianSpectrum HermitianSpectrum::from_dense(const Eigen::MatrixXd& sym) {
    if (sym.rows() != sym.cols()) throw Error("HermitianSpectrum: matrix not square");
    if (!sym.isApprox(sym.transpose(), 1e-10))
        throw Error("HermitianSpectrum: matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw Error("HermitianSpectrum: eigensolve failed");
    HermitianSpectrum s;
    s.values_ = es.eigenvalues();
    s.basis_ = es.eigenvectors();
    s.trivial_ = false;
    return s;
}

HermitianSpectrum HermitianSpectrum::from_model(const PopulationModel& model) {
    if (!model.dims()) throw Error("HermitianSpectrum::from_model: dims required");
    const int M = model.dims()->M;
    Eigen::VectorXd vals(M);
    int idx = 0;
    for (std::size_t i = 0; i < model.n_atoms(); ++i) {
        const int count = static_cast<int>(std::lround(M * model.atoms()[i].weight));
        for (int j = 0; j < count && idx < M; ++j) vals[idx++] = model.atoms()[i].s;
    }
    while (idx < M) vals[idx++] = 0.0;  // mass of pi at zero
    return diagonal(std::move(vals));
}

Eigen::VectorXd HermitianSpectrum::to_eigenbasis(const Eigen::VectorXd& v) const {
    return trivial_ ? v : Eigen::VectorXd(basis_.transpose() * v);
}

Eigen::VectorXd HermitianSpectrum::from_eigenbasis(const Eigen::VectorXd& c) const {
    return trivial_ ? c : Eigen::VectorXd(basis_ * c);
}

Eigen::VectorXd HermitianSpectrum::apply(const Eigen::VectorXd& v,
                                         const std::function<double(double)>& f) const {
    Eigen::VectorXd c = to_eigenbasis(v);
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] *= f(values_[i]);
    return from_eigenbasis(c);
}

Eigen::MatrixXd HermitianSpectrum::dense_power(double p) const {
    Eigen::VectorXd powered(values_.size());
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        if (values_[i] == 0.0 && p < 0.0)
            throw Error("HermitianSpectrum: negative power of a singular matrix");
        powered[i] = std::pow(values_[i], p);
    }
    if (trivial_) return powered.asDiagonal();
    return basis_ * powered.asDiagonal() * basis_.transpose();
}

double psi_scale(Complex z, Complex m, int N) {
    const double eta = z.imag();
    if (!(eta > 0.0)) throw Error("psi_scale: eta must be positive");
    const double neta = N * eta;
    return std::sqrt(std::max(0.0, m.imag()) / neta) + 1.0 / neta;
}

EquivalentSet build_equivalents(Complex z, const PopulationModel& model,
                                std::shared_ptr<const HermitianSpectrum> sigma, int N,
                                const SolverSettings& settings, double singular_guard) {
    const Complex m = solve_m(z, model, settings).m;
    return equivalents_from_m(z, m, std::move(sigma), N, singular_guard);
}

EquivalentSet equivalents_from_m(Complex z, Complex m,
                                 std::shared_ptr<const HermitianSpectrum> sigma, int N,
                                 double singular_guard) {
    if (!sigma) throw Error("build_equivalents: sigma spectrum required");
    EquivalentSet eq;
    eq.z = z;
    eq.m = m;
    eq.N = N;
    eq.psi = (z.imag() > 0.0) ? psi_scale(z, eq.m, N) : 0.0;
    eq.sigma = std::move(sigma);
    eq.pi_lower = eq.m;

    const auto& vals = eq.sigma->values();
    eq.pi_upper_eigs.resize(vals.size());
    eq.rm_eigs.resize(vals.size());
    eq.min_one_plus_m_sigma = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        const Complex den = 1.0 + eq.m * vals[i];
        const double mag = std::abs(den);
        eq.min_one_plus_m_sigma = std::min(eq.min_one_plus_m_sigma, mag);
        if (mag < singular_guard) {
            std::ostringstream os;
            os << "build_equivalents: |1 + m sigma| = " << mag << " at eigenvalue index " << i;
            throw Error(os.str());
        }
        eq.pi_upper_eigs[i] = -vals[i] / den;
        eq.rm_eigs[i] = -1.0 / (z * den);
    }
    return eq;
}

namespace {

// seam between the Sigma block and the N block of a full-index vector
std::pair<Eigen::VectorXd, Eigen::VectorXd> split_blocks(const EquivalentSet& eq,
                                                         const Eigen::VectorXd& v) {
    const int M = eq.sigma->dim();
    if (v.size() != M + eq.N) throw Error("pi_entry: vector has wrong dimension");
    return {v.head(M), v.tail(eq.N)};
}

}  // namespace

Complex pi_entry(const EquivalentSet& eq, const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
    auto [vM, vN] = split_blocks(eq, v);
    auto [wM, wN] = split_blocks(eq, w);
    const Eigen::VectorXd cv = eq.sigma->to_eigenbasis(vM);
    const Eigen::VectorXd cw = eq.sigma->to_eigenbasis(wM);
    Complex upper = 0.0;
    for (Eigen::Index i = 0; i < cv.size(); ++i) upper += eq.pi_upper_eigs[i] * cv[i] * cw[i];
    return upper + eq.pi_lower * vN.dot(wN);
}

Complex dotted_pi_entry(const EquivalentSet& eq, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& w) {
    auto [vM, vN] = split_blocks(eq, v);
    auto [wM, wN] = split_blocks(eq, w);
    const double ve = vN.sum() / std::sqrt(static_cast<double>(eq.N));
    const double we = wN.sum() / std::sqrt(static_cast<double>(eq.N));
    return pi_entry(eq, v, w) - (eq.m + 1.0 / eq.z) * ve * we;
}

Complex rm_equiv_entry(const EquivalentSet& eq, const Eigen::VectorXd& vM,
                       const Eigen::VectorXd& wM) {
    if (vM.size() != eq.sigma->dim()) throw Error("rm_equiv_entry: vector has wrong dimension");
    const Eigen::VectorXd cv = eq.sigma->to_eigenbasis(vM);
    const Eigen::VectorXd cw = eq.sigma->to_eigenbasis(wM);
    Complex acc = 0.0;
    for (Eigen::Index i = 0; i < cv.size(); ++i) acc += eq.rm_eigs[i] * cv[i] * cw[i];
    return acc;
}

double consistency_residual(const EquivalentSet& eq) {
    const int M = eq.sigma->dim();
    const double phi = static_cast<double>(M) / eq.N;
    const Complex tr_rm = eq.rm_eigs.sum() / static_cast<double>(M);
    const Complex tr_rn = eq.pi_lower * static_cast<double>(eq.N) / static_cast<double>(M);
    return std::abs(tr_rm - tr_rn - (1.0 - phi) / phi / eq.z);
}

WignerEquivalentSet build_wigner_equivalents(Complex z,
                                             std::shared_ptr<const HermitianSpectrum> a,
                                             const SolverSettings& settings, double tau) {
    if (!a) throw Error("build_wigner_equivalents: deformation spectrum required");
    std::vector<double> spectrum(a->values().data(), a->values().data() + a->dim());
    const Complex m = solve_wigner_m(z, spectrum, settings).m;
    return wigner_equivalents_from_m(z, m, std::move(a), tau);
}

WignerEquivalentSet wigner_equivalents_from_m(Complex z, Complex m,
                                              std::shared_ptr<const HermitianSpectrum> a,
                                              double tau) {
    if (!a) throw Error("build_wigner_equivalents: deformation spectrum required");
    WignerEquivalentSet eq;
    eq.z = z;
    eq.N = a->dim();
    eq.m = m;
    eq.psi = (z.imag() > 0.0) ? psi_scale(z, eq.m, eq.N) : 0.0;
    eq.a = std::move(a);

    eq.pi_eigs.resize(eq.N);
    for (int i = 0; i < eq.N; ++i) {
        const Complex den = -eq.m + eq.a->values()[i] - z;
        if (std::abs(den) < tau) eq.guard_ok = false;
        if (std::abs(den) < 1e-12) {
            std::ostringstream os;
            os << "build_wigner_equivalents: singular at a_i = " << eq.a->values()[i];
            throw Error(os.str());
        }
        eq.pi_eigs[i] = 1.0 / den;
    }
    return eq;
}

Complex wigner_pi_entry(const WignerEquivalentSet& eq, const Eigen::VectorXd& v,
                        const Eigen::VectorXd& w) {
    if (v.size() != eq.N || w.size() != eq.N)
        throw Error("wigner_pi_entry: vector has wrong dimension");
    const Eigen::VectorXd cv = eq.a->to_eigenbasis(v);
    const Eigen::VectorXd cw = eq.a->to_eigenbasis(w);
    Complex acc = 0.0;
    for (int i = 0; i < eq.N; ++i) acc += eq.pi_eigs[i] * cv[i] * cw[i];
    return acc;
}

// --------------------------------------------------------------------------

double SpectralDomain::eta_min() const { return std::pow(static_cast<double>(N), tau - 1.0); }

bool SpectralDomain::contains(Complex z) const {
    const double E = z.real(), eta = z.imag();
    if (std::abs(z) < tau || std::abs(E) > 1.0 / tau) return false;
    if (eta < eta_min() || eta > eta_max()) return false;
    switch (kind) {
        case DomainKind::full:
            return true;
        case DomainKind::edge:
        case DomainKind::bulk:
            return E >= e_min && E <= e_max;
        case DomainKind::outside: {
            double dist = std::numeric_limits<double>::infinity();
            for (const auto& [lo, hi] : support) {
                if (E >= lo && E <= hi) return false;
                dist = std::min({dist, std::abs(E - lo), std::abs(E - hi)});
            }
            return dist >= tau_prime;
        }
    }
    return false;
}

std::vector<Complex> SpectralDomain::grid(int n_energies, double eta_floor, double delta) const {
    std::vector<double> energies;
    if (kind == DomainKind::edge || kind == DomainKind::bulk) {
        for (int j = 0; j < n_energies; ++j)
            energies.push_back(e_min + (e_max - e_min) * (j + 0.5) / n_energies);
    } else if (kind == DomainKind::outside) {
        // sample to the right of each component plus left of the lowest
        std::vector<double> anchors;
        for (const auto& [lo, hi] : support) {
            anchors.push_back(hi + 2.0 * tau_prime);
            anchors.push_back(lo - 2.0 * tau_prime);
        }
        std::erase_if(anchors, [&](double E) { return !contains(Complex(E, 2.0 * eta_min())); });
        if (anchors.empty()) throw Error("SpectralDomain::grid: no admissible outside energies");
        for (int j = 0; j < n_energies; ++j) energies.push_back(anchors[j % anchors.size()]);
    } else {
        for (int j = 0; j < n_energies; ++j)
            energies.push_back(tau + (1.0 / tau - tau) * (j + 0.5) / n_energies);
    }

    const double step = std::pow(static_cast<double>(N), -delta);
    std::vector<Complex> zs;
    for (double E : energies) {
        for (double eta = eta_max(); eta >= std::max(eta_floor, eta_min()); eta *= step) {
            const Complex z(E, eta);
            if (contains(z)) zs.push_back(z);
        }
    }
    if (zs.empty()) throw Error("SpectralDomain::grid: empty grid");
    return zs;
}

SpectralDomain make_domain(DomainKind kind, double tau, double tau_prime, int N,
                           const DensityProfile* profile, int index) {
    SpectralDomain d;
    d.kind = kind;
    d.index = index;
    d.tau = tau;
    d.tau_prime = tau_prime;
    d.N = N;
    if (kind == DomainKind::full) return d;
    if (!profile) throw Error("make_domain: profile required for this kind");
    const auto edges = profile->edges();
    switch (kind) {
        case DomainKind::edge: {
            if (index < 0 || index >= static_cast<int>(edges.size()))
                throw Error("make_domain: edge index out of range");
            d.e_min = edges[index] - tau_prime;
            d.e_max = edges[index] + tau_prime;
            break;
        }
        case DomainKind::bulk: {
            if (index < 0 || index >= static_cast<int>(profile->n_components()))
                throw Error("make_domain: bulk index out of range");
            const auto& comp = profile->components()[index];
            d.e_min = comp.lower + tau_prime;
            d.e_max = comp.upper - tau_prime;
            if (d.e_min >= d.e_max)
                throw Error("make_domain: empty bulk domain, tau_prime too large");
            break;
        }
        case DomainKind::outside: {
            for (const auto& comp : profile->components())
                d.support.emplace_back(comp.lower, comp.upper);
            break;
        }
        default:
            break;
    }
    return d;
}

}  // namespace speclaw
