#pragma once

#include "speclaw/resolvent.hpp"

namespace speclaw {

/// The nontrivial eigenvalues of Q split into consecutive blocks of the
/// classical per-component counts.
struct LabeledEigenvalues {
    std::vector<std::vector<double>> blocks;  // descending within each block
    bool split_warning = false;  // a block boundary missed its spectral gap
};

LabeledEigenvalues component_eigenvalues(const Eigen::VectorXd& eigenvalues_desc,
                                         const DensityProfile& profile,
                                         const std::vector<int>& counts);

struct RigidityEntry {
    int component = 0;
    int index = 0;  // 1-based within the component
    double lambda = 0.0;
    double gamma = 0.0;
    double deviation = 0.0;  // |lambda - gamma|
    double scale = 0.0;      // (i ^ (N_k+1-i))^{-1/3} N^{-2/3}
    double ratio = 0.0;
};

struct RigidityProfile {
    std::vector<RigidityEntry> entries;
    double percentile(double p) const;  // p in [0,1]
    double max_ratio() const;
};

/// Deviation profile |lambda_{k,i} - gamma_{k,i}| against the rigidity
/// scale, for all locations with gamma >= tau.
RigidityProfile rigidity_profile(const LabeledEigenvalues& labeled,
                                 const std::vector<double>& gamma,
                                 const std::vector<int>& counts, int N, double tau);

struct GapCheckReport {
    int violations = 0;
    double threshold = 0.0;  // N^{-2/3+epsilon}
    std::vector<double> offenders;
};

/// Counts eigenvalues at E >= tau whose distance to the support exceeds
/// N^{-2/3+epsilon}; the asymptotic expectation is zero.
GapCheckReport support_gap_check(const Eigen::VectorXd& eigenvalues_desc,
                                 const DensityProfile& profile, double epsilon, double tau);

/// Eigenvalues of Q = Sigma^{1/2} X X^* Sigma^{1/2} for one sampled X,
/// descending, the min(M, N) nontrivial ones.
Eigen::VectorXd covariance_eigenvalues(const PopulationModel& model,
                                       const EntryDistribution& dist, std::uint64_t seed,
                                       std::uint64_t trial);

struct EdgeSampleSet {
    int edge_index = 0;
    int depth = 0;
    double edge = 0.0;
    double curvature = 0.0;
    std::vector<Eigen::VectorXd> rescaled;  // one depth-vector per trial

    std::vector<double> coordinate(int j) const;
};

/// Per trial, the depth extreme eigenvalues of the component that owns
/// edge k, centered at the deterministic a_k and scaled by
/// N^{2/3}/curvature (sign flipped at left edges).
EdgeSampleSet edge_rescaled_samples(const DensityProfile& profile, int edge_index, int depth,
                                    int trials, const EntryDistribution& dist,
                                    std::uint64_t seed, int workers = 2);

/// Rescaled top eigenvalues N^{2/3}(mu_i - 2) of GOE (beta = 1) or GUE
/// (beta = 2) draws; results are cached by the full argument tuple.
EdgeSampleSet reference_edge_samples(int beta, int depth, int N, int trials,
                                     std::uint64_t seed, int workers = 2);

/// Deformed Wigner edge samples N^{2/3}(lambda_i - L_plus) for W + A.
EdgeSampleSet wigner_edge_samples(const Eigen::MatrixXd& A, int depth, int trials,
                                  const EntryDistribution& dist, std::uint64_t seed,
                                  int workers = 2);

/// Two-sample Kolmogorov-Smirnov sup-distance of empirical CDFs.
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace speclaw
