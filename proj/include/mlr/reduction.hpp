#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlr/core_model.hpp"
#include "mlr/estimators.hpp"

namespace mlr {

/// An undirected graph on n vertices, optionally with a planted k-subset.
struct DetectionInstance {
  int n = 0;
  Matrix adjacency;                     // symmetric 0/1, zero diagonal
  std::optional<IndexSet> planted_support;
  double q = 0.5;

  /// Throws InputError if the invariants fail.
  void validate() const;
};

/// X = N^{1/4} I_n over all C(n,2) pairs, so that X_i^T Theta X_j = sqrt(N) Theta_ij.
struct ReductionDesign {
  FeatureMatrix X;
  ObservationMask omega;
  double scaling = 0.0;  // N^{1/4}
};

ReductionDesign reduction_design(int n);

/// G(n, 1/2, k, q): k vertices chosen uniformly, pairs inside joined with
/// probability q, all other pairs with probability 1/2.
DetectionInstance sample_dense_subgraph(int n, int k, double q, std::uint64_t seed);

/// The same law produced by the matrix logistic model: Theta in G_k^{alpha_N}
/// with alpha = logit(q), alpha_N = alpha / sqrt(N), under reduction_design(n).
/// Requires q < 1.
DetectionInstance sample_via_model(int n, int k, double q, std::uint64_t seed);

/// Labels over the all-pairs mask in its sorted order.
EdgeObservations instance_observations(const DetectionInstance& inst);

/// Applies a vertex relabeling v -> perm[v].
DetectionInstance relabel(const DetectionInstance& inst, const std::vector<int>& perm);

/// Canonical code of the subgraph induced on S (minimum over relabelings of
/// its edge bit string) for |S| <= 7; above that a per-support value.
std::uint64_t induced_subgraph_key(const DetectionInstance& inst, const IndexSet& S);

/// sqrt of the sum over observed pairs of Theta_ij^2.
double frob_omega(const ParameterMatrix& theta, const ObservationMask& omega);

enum class DetectorMethod { psi_exhaustive, psi_lasso, spectral };

std::string to_string(DetectorMethod m);
DetectorMethod parse_detector_method(const std::string& s);

struct EstimatorConfig {
  DetectorMethod method = DetectorMethod::psi_exhaustive;  // psi_* only
  double M = 10.0;
  double penalty_c = 0.05;
  int k_max = 0;          // 0: use the planted k
  int r_max = 1;
  double lambda = 0.0;    // 0: default_lasso_lambda(d)
  FitOptions fit;
};

struct DetectionReport {
  double statistic = 0.0;
  double threshold = 0.0;
  int decision = 0;
  DetectorMethod method = DetectorMethod::psi_exhaustive;
};

/// tau^2 = u f with f = (k r + k log(d e / k)) / N.
double default_tau(int k, int r, int d, int N, double u);

/// Fits Theta_hat with the configured estimator and tests ||Theta_hat||_{F,Omega} >= tau.
DetectionReport detector_psi(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                             const EstimatorConfig& cfg, int k, double tau);

/// Statistic of detector_psi without the comparison.
double psi_statistic(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                     const EstimatorConfig& cfg, int k);

/// psi_statistic on a graph under reduction_design. Supports inducing
/// isomorphic subgraphs share one fit.
double psi_statistic(const DetectionInstance& inst, const EstimatorConfig& cfg, int k);

/// Largest eigenvalue of 2A - (J - I).
double spectral_statistic(const DetectionInstance& inst);

DetectionReport spectral_detector(const DetectionInstance& inst, double tau);

/// Smallest threshold t with #{null >= t} <= floor(level * size).
double calibrate_threshold(std::vector<double> null_stats, double level);

struct MarginalTest {
  double in_block_stat = 0.0;
  int in_block_df = 0;
  double in_block_p = 1.0;
  double off_block_stat = 0.0;
  int off_block_df = 0;
  double off_block_p = 1.0;
  int trials = 0;
  bool passed(double level) const { return in_block_p >= level && off_block_p >= level; }
};

/// Chi-square homogeneity test between the direct and the model-based
/// generators, on the per-trial counts of present in-block and off-block pairs.
MarginalTest generator_equivalence(int n, int k, double q, int trials, std::uint64_t seed);

struct PowerCellSpec {
  int n = 0;
  int k = 0;
  double q = 0.5;
};

struct PowerCell {
  PowerCellSpec spec;
  DetectorMethod method = DetectorMethod::spectral;
  bool skipped = false;
  std::string reason;
  double threshold = 0.0;
  int trials = 0;
  int false_alarms = 0;   // null trials with decision 1
  int misses = 0;         // planted trials with decision 0
  double type1() const { return trials ? static_cast<double>(false_alarms) / trials : 0.0; }
  double type2() const { return trials ? static_cast<double>(misses) / trials : 0.0; }
  double total_error() const { return type1() + type2(); }
  double type1_se() const;
  double type2_se() const;
  std::vector<double> null_stats;
  std::vector<double> alt_stats;
};

struct PowerOptions {
  int trials = 100;
  int calibration_trials = 100;
  double level = 0.1;
  std::uint64_t seed = 0;
  int threads = 1;
  EstimatorConfig estimator;
};

/// For each cell and method: calibrate the threshold on independent null
/// draws at `level`, then count errors on `trials` null and `trials` planted
/// draws. Exhaustive cells above the model budget are skipped and marked.
std::vector<PowerCell> power_experiment(const std::vector<PowerCellSpec>& grid,
                                        const std::vector<DetectorMethod>& methods, const PowerOptions& opts);

}  // namespace mlr
