#include "speclaw/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "speclaw/parallel.hpp"

namespace speclaw {

namespace {

Eigen::VectorXd descending_singular_sq(const Eigen::MatrixXd& mat) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(mat);
    Eigen::VectorXd vals = svd.singularValues();
    return vals.cwiseProduct(vals);  // already descending
}

}  // namespace

LabeledEigenvalues component_eigenvalues(const Eigen::VectorXd& eigenvalues_desc,
                                         const DensityProfile& profile,
                                         const std::vector<int>& counts) {
    int total = 0;
    for (int c : counts) total += c;
    if (total > eigenvalues_desc.size())
        throw Error("component_eigenvalues: fewer eigenvalues than classical counts");

    LabeledEigenvalues out;
    int idx = 0;
    for (int c : counts) {
        std::vector<double> block(c);
        for (int i = 0; i < c; ++i) block[i] = eigenvalues_desc[idx + i];
        out.blocks.push_back(std::move(block));
        idx += c;
    }
    // the split should land inside the spectral gaps
    const auto& comps = profile.components();
    for (std::size_t k = 0; k + 1 < out.blocks.size(); ++k) {
        const double gap_mid = 0.5 * (comps[k].lower + comps[k + 1].upper);
        if (!out.blocks[k].empty() && out.blocks[k].back() < gap_mid) out.split_warning = true;
        if (!out.blocks[k + 1].empty() && out.blocks[k + 1].front() > gap_mid)
            out.split_warning = true;
    }
    return out;
}

double RigidityProfile::percentile(double p) const {
    if (entries.empty()) throw Error("RigidityProfile::percentile: empty profile");
    std::vector<double> ratios;
    ratios.reserve(entries.size());
    for (const auto& e : entries) ratios.push_back(e.ratio);
    std::sort(ratios.begin(), ratios.end());
    const double pos = p * (ratios.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, ratios.size() - 1);
    return ratios[lo] + (pos - lo) * (ratios[hi] - ratios[lo]);
}

double RigidityProfile::max_ratio() const {
    double r = 0.0;
    for (const auto& e : entries) r = std::max(r, e.ratio);
    return r;
}

RigidityProfile rigidity_profile(const LabeledEigenvalues& labeled,
                                 const std::vector<double>& gamma,
                                 const std::vector<int>& counts, int N, double tau) {
    RigidityProfile out;
    const double n23 = std::pow(static_cast<double>(N), -2.0 / 3.0);
    std::size_t flat = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const int nk = counts[k];
        for (int i = 1; i <= nk; ++i, ++flat) {
            if (flat >= gamma.size()) throw Error("rigidity_profile: gamma list too short");
            if (gamma[flat] < tau) continue;
            RigidityEntry e;
            e.component = static_cast<int>(k);
            e.index = i;
            e.lambda = labeled.blocks[k][i - 1];
            e.gamma = gamma[flat];
            e.deviation = std::abs(e.lambda - e.gamma);
            e.scale = std::pow(static_cast<double>(std::min(i, nk + 1 - i)), -1.0 / 3.0) * n23;
            e.ratio = e.deviation / e.scale;
            out.entries.push_back(e);
        }
    }
    return out;
}

GapCheckReport support_gap_check(const Eigen::VectorXd& eigenvalues_desc,
                                 const DensityProfile& profile, double epsilon, double tau) {
    const int N = profile.model().dims() ? profile.model().dims()->N : 0;
    if (N <= 0) throw Error("support_gap_check: model dims required");
    GapCheckReport report;
    report.threshold = std::pow(static_cast<double>(N), -2.0 / 3.0 + epsilon);
    for (Eigen::Index i = 0; i < eigenvalues_desc.size(); ++i) {
        const double E = eigenvalues_desc[i];
        if (E < tau) continue;
        if (profile.in_support(E)) continue;
        double dist = std::numeric_limits<double>::infinity();
        for (const auto& comp : profile.components())
            dist = std::min({dist, std::abs(E - comp.lower), std::abs(E - comp.upper)});
        if (dist >= report.threshold) {
            ++report.violations;
            report.offenders.push_back(E);
        }
    }
    return report;
}

Eigen::VectorXd covariance_eigenvalues(const PopulationModel& model,
                                       const EntryDistribution& dist, std::uint64_t seed,
                                       std::uint64_t trial) {
    if (!model.dims()) throw Error("covariance_eigenvalues: model dims required");
    const int M = model.dims()->M, N = model.dims()->N;
    const auto sigma = HermitianSpectrum::from_model(model);
    const auto x = sample_X(dist, M, N, seed, trial);
    const Eigen::MatrixXd tx = sigma.values().cwiseSqrt().asDiagonal() * x.real;
    Eigen::VectorXd lam = descending_singular_sq(tx);
    const int keep = std::min(M, N);
    return lam.head(keep);
}

std::vector<double> EdgeSampleSet::coordinate(int j) const {
    std::vector<double> out;
    out.reserve(rescaled.size());
    for (const auto& q : rescaled) {
        if (j < 0 || j >= q.size()) throw Error("EdgeSampleSet::coordinate out of range");
        out.push_back(q[j]);
    }
    return out;
}

EdgeSampleSet edge_rescaled_samples(const DensityProfile& profile, int edge_index, int depth,
                                    int trials, const EntryDistribution& dist,
                                    std::uint64_t seed, int workers) {
    const auto& model = profile.model();
    if (!model.dims()) throw Error("edge_rescaled_samples: model dims required");
    const int N = model.dims()->N;
    const auto counts = bulk_counts(profile).counts;
    const int comp = edge_index / 2;
    const bool right_edge = (edge_index % 2) == 0;
    if (comp >= static_cast<int>(counts.size()))
        throw Error("edge_rescaled_samples: edge index out of range");
    const int nk = counts[comp];
    if (depth > nk) {
        std::ostringstream os;
        os << "edge_rescaled_samples: component " << comp << " holds only " << nk
           << " eigenvalues, depth " << depth << " requested";
        throw Error(os.str());
    }

    EdgeSampleSet set;
    set.edge_index = edge_index;
    set.depth = depth;
    set.edge = profile.edges()[edge_index];
    set.curvature = edge_curvature(profile, edge_index);
    const double scale = std::pow(static_cast<double>(N), 2.0 / 3.0) / set.curvature;
    int offset = 0;
    for (int k = 0; k < comp; ++k) offset += counts[k];

    set.rescaled = parallel_trials<Eigen::VectorXd>(trials, workers, [&](int trial) {
        const Eigen::VectorXd lam = covariance_eigenvalues(model, dist, seed, trial);
        Eigen::VectorXd q(depth);
        for (int i = 0; i < depth; ++i) {
            const double lambda = right_edge ? lam[offset + i] : lam[offset + nk - 1 - i];
            q[i] = (right_edge ? 1.0 : -1.0) * scale * (lambda - set.edge);
        }
        return q;
    });
    return set;
}

namespace {

Eigen::VectorXd gaussian_reference_eigenvalues(int beta, int N, std::uint64_t seed,
                                               std::uint64_t trial) {
    const CounterRng rng(seed, trial);
    const double root_n = std::sqrt(static_cast<double>(N));
    if (beta == 1) {
        Eigen::MatrixXd w(N, N);
        std::uint64_t c = 0;
        for (int i = 0; i < N; ++i)
            for (int j = i; j < N; ++j) {
                const double g = rng.gaussian(c++);
                const double v = (i == j) ? std::sqrt(2.0) * g / root_n : g / root_n;
                w(i, j) = v;
                w(j, i) = v;
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w, Eigen::EigenvaluesOnly);
        return es.eigenvalues().reverse();
    }
    if (beta == 2) {
        Eigen::MatrixXcd w(N, N);
        std::uint64_t c = 0;
        for (int i = 0; i < N; ++i)
            for (int j = i; j < N; ++j) {
                if (i == j) {
                    w(i, j) = rng.gaussian(c++) / root_n;
                    ++c;  // keep the counter stride uniform
                } else {
                    const double re = rng.gaussian(c++);
                    const double im = rng.gaussian(c++);
                    w(i, j) = Complex(re, im) / (std::sqrt(2.0) * root_n);
                    w(j, i) = std::conj(w(i, j));
                }
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w, Eigen::EigenvaluesOnly);
        return es.eigenvalues().reverse();
    }
    throw Error("reference_edge_samples: beta must be 1 or 2");
}

}  // namespace

EdgeSampleSet reference_edge_samples(int beta, int depth, int N, int trials,
                                     std::uint64_t seed, int workers) {
    using Key = std::tuple<int, int, int, int, std::uint64_t>;
    static std::map<Key, EdgeSampleSet> cache;
    static std::mutex cache_mutex;
    const Key key{beta, depth, N, trials, seed};
    {
        std::scoped_lock lock(cache_mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    EdgeSampleSet set;
    set.edge_index = 0;
    set.depth = depth;
    set.edge = 2.0;
    set.curvature = 1.0;
    const double scale = std::pow(static_cast<double>(N), 2.0 / 3.0);
    set.rescaled = parallel_trials<Eigen::VectorXd>(trials, workers, [&](int trial) {
        const Eigen::VectorXd mu = gaussian_reference_eigenvalues(beta, N, seed, trial);
        Eigen::VectorXd q(depth);
        for (int i = 0; i < depth; ++i) q[i] = scale * (mu[i] - 2.0);
        return q;
    });

    std::scoped_lock lock(cache_mutex);
    cache[key] = set;
    return set;
}

EdgeSampleSet wigner_edge_samples(const Eigen::MatrixXd& A, int depth, int trials,
                                  const EntryDistribution& dist, std::uint64_t seed,
                                  int workers) {
    const int N = static_cast<int>(A.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    std::vector<double> a_spec(es.eigenvalues().data(), es.eigenvalues().data() + N);
    const auto [l_minus, l_plus] = wigner_support(a_spec);
    (void)l_minus;

    EdgeSampleSet set;
    set.edge_index = 0;
    set.depth = depth;
    set.edge = l_plus;
    set.curvature = 1.0;
    const double scale = std::pow(static_cast<double>(N), 2.0 / 3.0);
    set.rescaled = parallel_trials<Eigen::VectorXd>(trials, workers, [&](int trial) {
        const auto sample = sample_deformed_wigner(dist, A, seed, trial);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sample.w_plus_a(),
                                                              Eigen::EigenvaluesOnly);
        const Eigen::VectorXd lam = solver.eigenvalues().reverse();
        Eigen::VectorXd q(depth);
        for (int i = 0; i < depth; ++i) q[i] = scale * (lam[i] - l_plus);
        return q;
    });
    return set;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw Error("ks_distance: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

}  // namespace speclaw
