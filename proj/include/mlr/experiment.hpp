#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mlr/core_model.hpp"

namespace mlr {

inline constexpr const char* MLR_VERSION = "0.1.0";

/// Settings of a rate-scaling study. Read from a flat `key = value` file.
struct ExperimentConfig {
  int d = 8;
  int k = 2;
  int r = 1;
  int n = 0;                       // vertices; 0 picks the smallest n with C(n,2) >= max N
  double M = 4.0;
  std::vector<int> N_grid{200, 800, 3200};
  int trials = 50;
  std::vector<std::string> estimators{"penalized", "lasso"};
  double penalty_c = 1.0;
  double lambda_c4 = 1.0;
  std::uint64_t seed = 0;
  std::string out_path = "rates.json";
  std::string csv_path;            // empty: no CSV mirror
  int k_max = 0;                   // penalized search size; 0 means k
  int r_max = 0;                   // 0 means r
  double signal = 0.75;            // ||Theta*||_{1,1} = signal * M
  int max_iters = 2000;
  int restarts = 3;
  int threads = 1;

  /// Throws InputError when an invariant fails.
  void validate() const;
  int vertices() const;
};

/// Parses `key = value` lines; '#' starts a comment; lists are comma separated.
ExperimentConfig parse_config(std::istream& in, const std::string& name = "config");
ExperimentConfig load_config(const std::string& path);
/// Applies one `key = value` assignment.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// d x n features with entries +-1 (the +-1/sqrt(d) ensemble rescaled by sqrt(d)).
FeatureMatrix rademacher_features(int d, int n, std::uint64_t seed);

/// Theta* on a uniform k-support with rank r and ||Theta*||_{1,1} = signal * M.
/// Rank one: u u^T with |u_a| in [1/2, 1] and random signs. Higher rank:
/// U diag(lambda) U^T with U orthonormal and |lambda_j| in [1/2, 1].
ParameterMatrix plant_parameter(int d, int k, int r, double M, double signal, std::uint64_t seed);

struct TrialRecord {
  std::string estimator;
  int N = 0;
  int trial = 0;
  bool ok = false;
  std::string error;
  double frob_sq = 0.0;
  double kl = 0.0;
  double pred = 0.0;        // (1/2N) ||Sigma_hat - Sigma*||^2_{F,Omega}
  double kkt = 0.0;         // lasso only, relative to lambda
  int selected_k = 0;
  int selected_r = 0;
};

struct DesignRecord {
  int N = 0;
  int trial = 0;
  int s = 0;
  double delta = 0.0;       // exact block isometry constant at s = min(2k, d)
  double witness = 0.0;     // max_{ij in Omega} ||X_j X_i^T||_inf
};

struct RateRow {
  std::string estimator;
  int N = 0;
  double median_frob_sq_error = 0.0;
  double iqr = 0.0;
  double median_kl = 0.0;
  double median_pred_error = 0.0;
  double mean_frob_sq_error = 0.0;
  double mean_kl = 0.0;
  double mean_pred_error = 0.0;
  int trials = 0;           // successful fits
  int failures = 0;
  double max_kkt = 0.0;
};

struct RateTable {
  ExperimentConfig config;
  std::vector<RateRow> rows;
  std::vector<TrialRecord> records;
  std::vector<DesignRecord> designs;

  const RateRow& row(const std::string& estimator, int N) const;
};

RateTable run_rates(const ExperimentConfig& config);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> v);
/// Interquartile range with linear interpolation between order statistics.
double iqr(std::vector<double> v);

}  // namespace mlr
