#include "speclaw/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace speclaw {

namespace {

std::array<double, 8> discrete_moments(const std::vector<double>& support,
                                       const std::vector<double>& probs) {
    std::array<double, 8> mom{};
    for (int k = 1; k <= 8; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < support.size(); ++j)
            acc += probs[j] * std::pow(support[j], k);
        mom[k - 1] = acc;
    }
    return mom;
}

std::vector<double> cumulative_of(const std::vector<double>& probs) {
    std::vector<double> cum(probs.size());
    double acc = 0.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        acc += probs[j];
        cum[j] = acc;
    }
    cum.back() = 1.0;
    return cum;
}

}  // namespace

EntryDistribution EntryDistribution::gaussian(Symmetry sym) {
    EntryDistribution d;
    d.kind_ = EntryKind::gaussian;
    d.symmetry_ = sym;
    d.moments_ = {0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0};
    return d;
}

EntryDistribution EntryDistribution::rademacher(Symmetry sym) {
    EntryDistribution d = two_point(0.5, sym);
    d.kind_ = EntryKind::rademacher;
    return d;
}

EntryDistribution EntryDistribution::two_point(double p, Symmetry sym) {
    if (!(p > 0.0 && p < 1.0)) throw Error("two_point: p must lie in (0,1)");
    EntryDistribution d;
    d.kind_ = EntryKind::two_point;
    d.symmetry_ = sym;
    const double q = 1.0 - p;
    d.support_ = {std::sqrt(q / p), -std::sqrt(p / q)};
    d.probs_ = {p, q};
    d.cumulative_ = cumulative_of(d.probs_);
    d.moments_ = discrete_moments(d.support_, d.probs_);
    return d;
}

EntryDistribution EntryDistribution::from_moments(const std::vector<double>& raw,
                                                  Symmetry sym) {
    if (raw.size() < 2) throw Error("from_moments: need at least mean and variance");
    if (std::abs(raw[0]) > 1e-12 || std::abs(raw[1] - 1.0) > 1e-12)
        throw Error("from_moments: law must be standardized (mean 0, variance 1)");
    std::vector<double> mu{1.0};  // mu_k = E X^k including mu_0
    mu.insert(mu.end(), raw.begin(), raw.end());

    for (int K = 2; K <= 4; ++K) {
        if (static_cast<std::size_t>(2 * K - 1) > raw.size()) break;
        // Monic orthogonal polynomial from the Hankel system, nodes from
        // its companion matrix, weights from the Vandermonde system.
        Eigen::MatrixXd H(K, K);
        Eigen::VectorXd rhs(K);
        for (int i = 0; i < K; ++i) {
            for (int j = 0; j < K; ++j) H(i, j) = mu[i + j];
            rhs[i] = -mu[K + i];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
        if (!lu.isInvertible()) continue;
        const Eigen::VectorXd a = lu.solve(rhs);

        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(K, K);
        for (int i = 0; i + 1 < K; ++i) companion(i + 1, i) = 1.0;
        companion.col(K - 1) = -a;
        const Eigen::VectorXcd roots = Eigen::EigenSolver<Eigen::MatrixXd>(companion, false)
                                           .eigenvalues();
        bool real_roots = true;
        std::vector<double> nodes;
        for (int i = 0; i < K; ++i) {
            if (std::abs(roots[i].imag()) > 1e-8) real_roots = false;
            nodes.push_back(roots[i].real());
        }
        if (!real_roots) continue;
        std::sort(nodes.begin(), nodes.end());

        Eigen::MatrixXd V(K, K);
        Eigen::VectorXd target(K);
        for (int i = 0; i < K; ++i) {
            for (int j = 0; j < K; ++j) V(i, j) = std::pow(nodes[j], i);
            target[i] = mu[i];
        }
        Eigen::VectorXd w = V.fullPivLu().solve(target);
        if ((w.array() < -1e-10).any()) continue;
        w = w.cwiseMax(0.0);
        w /= w.sum();

        std::vector<double> support(nodes.begin(), nodes.end());
        std::vector<double> probs(w.data(), w.data() + K);
        const auto mom = discrete_moments(support, probs);
        bool matches = true;
        for (std::size_t k = 0; k < raw.size() && k < 8; ++k) {
            const double scale = std::max(1.0, std::abs(raw[k]));
            if (std::abs(mom[k] - raw[k]) > 1e-8 * scale) matches = false;
        }
        if (!matches) continue;

        EntryDistribution d;
        d.kind_ = EntryKind::user_moments;
        d.symmetry_ = sym;
        d.support_ = std::move(support);
        d.probs_ = std::move(probs);
        d.cumulative_ = cumulative_of(d.probs_);
        d.moments_ = mom;
        return d;
    }
    throw Error("from_moments: no discrete law with at most 4 support points matches");
}

double EntryDistribution::draw(const CounterRng& rng, std::uint64_t counter) const {
    if (kind_ == EntryKind::gaussian) return rng.gaussian(counter);
    const double u = rng.uniform(counter);
    const std::size_t j =
        std::lower_bound(cumulative_.begin(), cumulative_.end(), u) - cumulative_.begin();
    return support_[std::min(j, support_.size() - 1)];
}

std::complex<double> EntryDistribution::draw_complex(const CounterRng& rng,
                                                     std::uint64_t counter) const {
    const double re = draw(rng, 2 * counter);
    const double im = draw(rng, 2 * counter + 1);
    return std::complex<double>(re, im) / std::sqrt(2.0);
}

EnsembleSample sample_X(const EntryDistribution& dist, int Mhat, int N, std::uint64_t seed,
                        std::uint64_t stream) {
    if (Mhat <= 0 || N <= 0) throw Error("sample_X: dimensions must be positive");
    const CounterRng rng(seed, stream);
    EnsembleSample s;
    s.seed = seed;
    s.stream = stream;
    s.dist = dist;
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    if (dist.symmetry() == Symmetry::real) {
        s.real.resize(Mhat, N);
        for (int i = 0; i < Mhat; ++i)
            for (int mu = 0; mu < N; ++mu)
                s.real(i, mu) =
                    scale * dist.draw(rng, static_cast<std::uint64_t>(i) * N + mu);
    } else {
        s.is_complex = true;
        s.complex.resize(Mhat, N);
        for (int i = 0; i < Mhat; ++i)
            for (int mu = 0; mu < N; ++mu)
                s.complex(i, mu) =
                    scale * dist.draw_complex(rng, static_cast<std::uint64_t>(i) * N + mu);
    }
    return s;
}

AugmentedModel augment_model(const Eigen::MatrixXd& T, const Eigen::MatrixXd& X,
                             const EntryDistribution& dist, std::uint64_t seed) {
    const Eigen::Index M = T.rows(), Mhat = T.cols();
    if (X.rows() != Mhat) throw Error("augment_model: T and X dimensions mismatch");
    AugmentedModel out;
    if (Mhat >= M) {
        out.t = Eigen::MatrixXd::Zero(Mhat, Mhat);
        out.t.bottomRows(M) = T;
        out.x = X;
    } else {
        out.t = Eigen::MatrixXd::Zero(M, M);
        out.t.leftCols(Mhat) = T;
        const EnsembleSample extra =
            sample_X(dist, static_cast<int>(M - Mhat), static_cast<int>(X.cols()), seed, 1);
        out.x.resize(M, X.cols());
        out.x.topRows(Mhat) = X;
        out.x.bottomRows(M - Mhat) = extra.real;
    }
    return out;
}

CovarianceEnsemble build_covariance_model(const Eigen::MatrixXd& T, const Eigen::MatrixXd& X,
                                          bool dotted) {
    if (T.cols() != X.rows()) {
        std::ostringstream os;
        os << "build_covariance_model: T is " << T.rows() << "x" << T.cols() << " but X is "
           << X.rows() << "x" << X.cols();
        throw Error(os.str());
    }
    const Eigen::Index N = X.cols();
    CovarianceEnsemble out;
    out.dotted = dotted;
    Eigen::MatrixXd B;
    double scale = 1.0;
    if (dotted) {
        if (N < 2) throw Error("build_covariance_model: centered variant needs N >= 2");
        const Eigen::VectorXd row_mean = X.rowwise().mean();
        B = T * (X.colwise() - row_mean);
        scale = static_cast<double>(N) / static_cast<double>(N - 1);
    } else {
        B = T * X;
    }
    out.q = scale * B * B.transpose();
    out.companion = scale * B.transpose() * B;
    return out;
}

WignerSample sample_deformed_wigner(const EntryDistribution& dist, const Eigen::MatrixXd& A,
                                    std::uint64_t seed, std::uint64_t stream) {
    const Eigen::Index N = A.rows();
    if (A.cols() != N) throw Error("sample_deformed_wigner: A must be square");
    if (!A.isApprox(A.transpose(), 1e-10))
        throw Error("sample_deformed_wigner: A must be symmetric");
    const CounterRng rng(seed, stream);
    const double scale = 1.0 / std::sqrt(static_cast<double>(N));
    WignerSample s;
    s.seed = seed;
    s.a = A;
    s.w.resize(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = i; j < N; ++j) {
            const double value =
                scale * dist.draw(rng, static_cast<std::uint64_t>(i) * N + j);
            s.w(i, j) = value;
            s.w(j, i) = value;
        }
    }
    return s;
}

Eigen::MatrixXd bernoulli_interpolate(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x1,
                                      double theta, std::uint64_t seed) {
    if (x0.rows() != x1.rows() || x0.cols() != x1.cols())
        throw Error("bernoulli_interpolate: shape mismatch");
    if (!(theta >= 0.0 && theta <= 1.0))
        throw Error("bernoulli_interpolate: theta must lie in [0,1]");
    const CounterRng rng(seed, 0x6265726eULL);
    Eigen::MatrixXd out(x0.rows(), x0.cols());
    for (Eigen::Index i = 0; i < x0.rows(); ++i)
        for (Eigen::Index j = 0; j < x0.cols(); ++j) {
            const std::uint64_t c = static_cast<std::uint64_t>(i) * x0.cols() + j;
            out(i, j) = (rng.uniform(c) < theta) ? x1(i, j) : x0(i, j);
        }
    return out;
}

std::vector<double> k_coefficients(const std::vector<double>& moments0,
                                   const std::vector<double>& moments1, double theta,
                                   int n_max) {
    if (n_max <= 0) throw Error("k_coefficients: n_max must be positive");
    if (moments0.size() < static_cast<std::size_t>(n_max) ||
        moments1.size() < static_cast<std::size_t>(n_max))
        throw Error("k_coefficients: moments supplied only up to a lower order");

    // exponential moment series to order n_max: A[k] = mu_k / k!
    std::vector<double> a0(n_max + 1, 0.0), a1(n_max + 1, 0.0), at(n_max + 1, 0.0);
    a0[0] = a1[0] = at[0] = 1.0;
    double factorial = 1.0;
    for (int k = 1; k <= n_max; ++k) {
        factorial *= k;
        a0[k] = moments0[k - 1] / factorial;
        a1[k] = moments1[k - 1] / factorial;
        at[k] = (theta * moments1[k - 1] + (1.0 - theta) * moments0[k - 1]) / factorial;
    }

    // K = (a1 - a0) / at as truncated power series; at[0] = 1
    std::vector<double> K(n_max + 1, 0.0);
    for (int n = 1; n <= n_max; ++n) {
        double acc = a1[n] - a0[n];
        for (int j = 1; j < n; ++j) acc -= K[j] * at[n - j];
        K[n] = acc;
    }
    return std::vector<double>(K.begin() + 1, K.end());
}

}  // namespace speclaw
