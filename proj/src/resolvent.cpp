#include "speclaw/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace speclaw {

ResolventFactorization::ResolventFactorization(const Eigen::MatrixXd& x,
                                               std::shared_ptr<const HermitianSpectrum> sigma)
    : sigma_(std::move(sigma)) {
    if (!sigma_) throw Error("ResolventFactorization: sigma spectrum required");
    M_ = static_cast<int>(x.rows());
    N_ = static_cast<int>(x.cols());
    if (sigma_->dim() != M_)
        throw Error("ResolventFactorization: sigma dimension does not match X rows "
                    "(augment non-square models first)");
    if (!x.allFinite()) throw Error("ResolventFactorization: non-finite entries in X");

    Eigen::MatrixXd sx;
    if (sigma_->has_trivial_basis()) {
        sx = sigma_->values().cwiseSqrt().asDiagonal() * x;
    } else {
        sx = sigma_->dense_power(0.5) * x;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(sx, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw Error("ResolventFactorization: SVD failed");
    rank_ = static_cast<int>(svd.singularValues().size());  // min(M, N)
    lambda_ = svd.singularValues().cwiseProduct(svd.singularValues());
    xi_ = svd.matrixU();
    zeta_ = svd.matrixV();

    // soft sanity bound on ||X^* X||, logged rather than enforced
    Eigen::VectorXd v = Eigen::VectorXd::Constant(N_, 1.0 / std::sqrt(double(N_)));
    for (int it = 0; it < 30; ++it) {
        v = x.transpose() * (x * v);
        v.normalize();
    }
    x_norm_sq_ = v.dot(x.transpose() * (x * v));
    const double ratio = static_cast<double>(M_) / N_;
    const double expected = (1.0 + std::sqrt(ratio)) * (1.0 + std::sqrt(ratio));
    norm_bound_ok_ = x_norm_sq_ <= 1.5 * expected + 0.5;
}

ResolventFactorization::Projection ResolventFactorization::project(
    const Eigen::VectorXd& v) const {
    if (v.size() != M_ + N_) throw Error("ResolventFactorization: vector has wrong dimension");
    Projection p;
    const Eigen::VectorXd vM = v.head(M_);
    p.vN = v.tail(N_);
    p.sv = sigma_->has_trivial_basis()
               ? Eigen::VectorXd(sigma_->values().cwiseSqrt().asDiagonal() * vM)
               : Eigen::VectorXd(sigma_->dense_power(0.5) * vM);
    p.a = xi_.transpose() * p.sv;
    p.b = zeta_.transpose() * p.vN;
    return p;
}

Complex ResolventFactorization::entry(Complex z, const Projection& pv,
                                      const Projection& pw) const {
    Complex acc = -pv.sv.dot(pw.sv);
    for (int k = 0; k < rank_; ++k) {
        const Complex den = 1.0 / (lambda_[k] - z);
        const double sq = std::sqrt(lambda_[k]);
        acc += den * (lambda_[k] * pv.a[k] * pw.a[k] +
                      sq * (pv.a[k] * pw.b[k] + pv.b[k] * pw.a[k]) + pv.b[k] * pw.b[k]);
    }
    acc -= (pv.vN.dot(pw.vN) - pv.b.dot(pw.b)) / z;
    return acc;
}

Complex ResolventFactorization::entry(Complex z, const Eigen::VectorXd& v,
                                      const Eigen::VectorXd& w) const {
    return entry(z, project(v), project(w));
}

Complex ResolventFactorization::empirical_m_N(Complex z) const {
    Complex acc = 0.0;
    for (int k = 0; k < rank_; ++k) acc += 1.0 / (lambda_[k] - z);
    acc -= static_cast<double>(N_ - rank_) / z;
    return acc / static_cast<double>(N_);
}

Complex ResolventFactorization::empirical_m_M(Complex z) const {
    Complex acc = 0.0;
    for (int k = 0; k < rank_; ++k) acc += 1.0 / (lambda_[k] - z);
    acc -= static_cast<double>(M_ - rank_) / z;
    return acc / static_cast<double>(M_);
}

double ResolventFactorization::ward_residual(Complex z, const Eigen::VectorXd& wN) const {
    if (wN.size() != N_) throw Error("ward_residual: w must live on the N block");
    const double eta = z.imag();
    if (!(eta > 0.0)) throw Error("ward_residual: eta must be positive");
    const Eigen::VectorXd b = zeta_.transpose() * wN;

    // assemble G_NN w in the coordinate basis
    Eigen::VectorXcd y = Eigen::VectorXcd::Zero(N_);
    for (int k = 0; k < rank_; ++k)
        y += (b[k] * (1.0 / (lambda_[k] - z) + 1.0 / z)) * zeta_.col(k).cast<Complex>();
    y -= wN.cast<Complex>() / z;
    const double lhs = y.squaredNorm();

    Complex g_ww = -(wN.squaredNorm() - b.squaredNorm()) / z;
    for (int k = 0; k < rank_; ++k) g_ww += b[k] * b[k] / (lambda_[k] - z);
    const double rhs = g_ww.imag() / eta;
    return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
}

// --------------------------------------------------------------------------

double ErrorScan::max_aniso_ratio() const {
    double r = 0.0;
    for (const auto& rec : records) r = std::max(r, rec.aniso_ratio);
    return r;
}

double ErrorScan::max_avg_ratio() const {
    double r = 0.0;
    for (const auto& rec : records) r = std::max(r, rec.avg_ratio);
    return r;
}

std::vector<Eigen::VectorXd> scan_panel(int dim_m, int dim_n, int n_vectors, std::uint64_t seed,
                                        const HermitianSpectrum* sigma) {
    const int dim = dim_m + dim_n;
    std::vector<Eigen::VectorXd> panel;
    auto push = [&](Eigen::VectorXd v) {
        if (static_cast<int>(panel.size()) < n_vectors && v.norm() > 0) {
            v.normalize();
            panel.push_back(std::move(v));
        }
    };

    if (dim_m > 0) push(Eigen::VectorXd::Unit(dim, 0));
    push(Eigen::VectorXd::Unit(dim, dim_m));
    if (dim_m > 0) {
        Eigen::VectorXd ones_m = Eigen::VectorXd::Zero(dim);
        ones_m.head(dim_m).setOnes();
        push(ones_m);
    }
    Eigen::VectorXd ones_n = Eigen::VectorXd::Zero(dim);
    ones_n.tail(dim_n).setOnes();
    push(ones_n);
    push(Eigen::VectorXd::Ones(dim));
    if (sigma && !sigma->has_trivial_basis()) {
        for (int c = 0; c < 2 && c < sigma->dim(); ++c) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
            v.head(dim_m) = sigma->from_eigenbasis(Eigen::VectorXd::Unit(dim_m, c));
            push(v);
        }
    }

    const CounterRng rng(seed, 0x70616e656cULL);
    std::uint64_t counter = 0;
    while (static_cast<int>(panel.size()) < n_vectors) {
        Eigen::VectorXd v(dim);
        for (int i = 0; i < dim; ++i) v[i] = rng.gaussian(counter++);
        push(v);
    }
    return panel;
}

namespace {

std::vector<std::pair<int, int>> panel_pairs(int n) {
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i) pairs.emplace_back(i, i);
    for (int i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
    return pairs;
}

}  // namespace

ErrorScan anisotropic_scan(const ResolventFactorization& fact, const PopulationModel& model,
                           const std::vector<Complex>& grid, const ScanOptions& options) {
    const int M = fact.M(), N = fact.N();
    const auto& sigma = *fact.sigma();
    if ((sigma.values().array() <= 0.0).any())
        throw Error("anisotropic_scan: Sigma must be positive definite for the weighted errors");

    auto panel = scan_panel(M, N, options.n_vectors, options.seed, &sigma);
    // Sigma_underline^{-1}-transformed panel, projected once for all z.
    std::vector<ResolventFactorization::Projection> proj;
    std::vector<Eigen::VectorXd> transformed;
    for (const auto& v : panel) {
        Eigen::VectorXd t(v.size());
        t.head(M) = sigma.apply(v.head(M), [](double s) { return 1.0 / s; });
        t.tail(N) = v.tail(N);
        proj.push_back(fact.project(t));
        transformed.push_back(std::move(t));
    }
    const auto pairs = panel_pairs(static_cast<int>(panel.size()));

    ErrorScan scan;
    auto sigma_ptr = fact.sigma();
    for (const Complex& z : grid) {
        ScanRecord rec;
        rec.z = z;
        rec.seed = options.seed;
        rec.n_vec = static_cast<int>(panel.size());
        try {
            const Complex m = solve_m(z, model, options.solver).m;
            rec.psi = psi_scale(z, m, N);
            const auto eq =
                equivalents_from_m(z, m + options.m_corruption, sigma_ptr, N);
            for (const auto& [i, j] : pairs) {
                const Complex g = fact.entry(z, proj[i], proj[j]);
                const Complex pi = pi_entry(eq, transformed[i], transformed[j]);
                rec.max_aniso = std::max(rec.max_aniso, std::abs(g - pi));
            }
            rec.aniso_ratio = rec.max_aniso / rec.psi;
            rec.avg_err = std::abs(fact.empirical_m_N(z) - m);
            rec.avg_ratio = rec.avg_err * N * z.imag();
        } catch (const Error& e) {
            std::ostringstream os;
            os << "skipped z = (" << z.real() << ", " << z.imag() << "): " << e.what();
            scan.notes.push_back(os.str());
            continue;
        }
        scan.records.push_back(rec);
    }
    return scan;
}

ErrorScan averaged_scan(const ResolventFactorization& fact, const DensityProfile& profile,
                        const std::vector<Complex>& grid, const ScanOptions& options) {
    ErrorScan scan;
    const int N = fact.N();
    for (const Complex& z : grid) {
        ScanRecord rec;
        rec.z = z;
        rec.seed = options.seed;
        try {
            const Complex m = solve_m(z, profile.model(), options.solver).m;
            rec.psi = psi_scale(z, m, N);
            rec.avg_err = std::abs(fact.empirical_m_N(z) - m);
            rec.avg_ratio = rec.avg_err * N * z.imag();
            const double kappa = profile.kappa(z.real());
            rec.outside_ratio =
                rec.avg_err * std::sqrt(kappa + z.imag()) / (rec.psi * rec.psi);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "skipped z = (" << z.real() << ", " << z.imag() << "): " << e.what();
            scan.notes.push_back(os.str());
            continue;
        }
        scan.records.push_back(rec);
    }
    return scan;
}

// --------------------------------------------------------------------------

WignerResolvent::WignerResolvent(const Eigen::MatrixXd& w_plus_a) {
    if (w_plus_a.rows() != w_plus_a.cols()) throw Error("WignerResolvent: matrix not square");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w_plus_a);
    if (es.info() != Eigen::Success) throw Error("WignerResolvent: eigensolve failed");
    evals_ = es.eigenvalues();
    basis_ = es.eigenvectors();
}

Complex WignerResolvent::entry(Complex z, const Eigen::VectorXd& v,
                               const Eigen::VectorXd& w) const {
    const Eigen::VectorXd cv = basis_.transpose() * v;
    const Eigen::VectorXd cw = basis_.transpose() * w;
    Complex acc = 0.0;
    for (int k = 0; k < N(); ++k) acc += cv[k] * cw[k] / (evals_[k] - z);
    return acc;
}

Complex WignerResolvent::trace_m(Complex z) const {
    Complex acc = 0.0;
    for (int k = 0; k < N(); ++k) acc += 1.0 / (evals_[k] - z);
    return acc / static_cast<double>(N());
}

ErrorScan wigner_scan(const WignerResolvent& resolvent,
                      std::shared_ptr<const HermitianSpectrum> a_spectrum,
                      const std::vector<Complex>& grid, const ScanOptions& options) {
    const int N = resolvent.N();
    auto panel = scan_panel(0, N, options.n_vectors, options.seed);
    const auto pairs = panel_pairs(static_cast<int>(panel.size()));
    std::vector<double> a_vals(a_spectrum->values().data(),
                               a_spectrum->values().data() + a_spectrum->dim());

    ErrorScan scan;
    for (const Complex& z : grid) {
        ScanRecord rec;
        rec.z = z;
        rec.seed = options.seed;
        rec.n_vec = static_cast<int>(panel.size());
        try {
            const Complex m = solve_wigner_m(z, a_vals, options.solver).m;
            rec.psi = psi_scale(z, m, N);
            const auto eq = wigner_equivalents_from_m(z, m + options.m_corruption, a_spectrum);
            for (const auto& [i, j] : pairs) {
                const Complex g = resolvent.entry(z, panel[i], panel[j]);
                const Complex pi = wigner_pi_entry(eq, panel[i], panel[j]);
                rec.max_aniso = std::max(rec.max_aniso, std::abs(g - pi));
            }
            rec.aniso_ratio = rec.max_aniso / rec.psi;
            rec.avg_err = std::abs(resolvent.trace_m(z) - m);
            rec.avg_ratio = rec.avg_err * N * z.imag();
        } catch (const Error& e) {
            std::ostringstream os;
            os << "skipped z = (" << z.real() << ", " << z.imag() << "): " << e.what();
            scan.notes.push_back(os.str());
            continue;
        }
        scan.records.push_back(rec);
    }
    return scan;
}

}  // namespace speclaw
