#include "mlr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mlr/design_analysis.hpp"
#include "mlr/error.hpp"
#include "mlr/estimators.hpp"
#include "mlr/likelihood.hpp"
#include "mlr/parallel.hpp"
#include "mlr/rng.hpp"

namespace mlr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream ss(value);
  T v{};
  ss >> v;
  if (!ss || !(ss >> std::ws).eof()) throw InputError("bad value '" + value + "' for " + key);
  return v;
}

}  // namespace

int ExperimentConfig::vertices() const {
  if (n > 0) return n;
  const int max_n = N_grid.empty() ? 2 : N_grid.back();
  int v = 2;
  while (binomial(v, 2) < max_n) ++v;
  return v;
}

void ExperimentConfig::validate() const {
  require(d >= 1 && k >= 1 && r >= 1, "d, k and r must be positive");
  require(k <= d, "k must not exceed d");
  require(r <= k, "r must not exceed k");
  require(n >= 0, "n must be nonnegative");
  require(M > 0.0, "M must be positive");
  require(!N_grid.empty(), "N_grid must not be empty");
  for (std::size_t i = 0; i < N_grid.size(); ++i) {
    require(N_grid[i] >= 1, "N_grid entries must be positive");
    require(i == 0 || N_grid[i] > N_grid[i - 1], "N_grid must be strictly increasing");
  }
  require(trials >= 1, "trials must be at least 1");
  require(!estimators.empty(), "at least one estimator is needed");
  for (const auto& e : estimators) require(e == "penalized" || e == "lasso", "unknown estimator '" + e + "'");
  require(penalty_c > 0.0 && lambda_c4 > 0.0, "penalty_c and lambda_c4 must be positive");
  require(signal > 0.0 && signal < 1.0, "signal must lie in (0, 1)");
  require(k_max >= 0 && k_max <= d && r_max >= 0, "k_max must lie in [0, d] and r_max must be nonnegative");
  require(max_iters >= 1 && restarts >= 1 && threads >= 1, "max_iters, restarts and threads must be positive");
  const int v = vertices();
  require(v >= 2 && binomial(v, 2) >= N_grid.back(), "n is too small for the largest N");
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "d") cfg.d = parse_number<int>(key, value);
  else if (key == "k") cfg.k = parse_number<int>(key, value);
  else if (key == "r") cfg.r = parse_number<int>(key, value);
  else if (key == "n") cfg.n = parse_number<int>(key, value);
  else if (key == "M") cfg.M = parse_number<double>(key, value);
  else if (key == "N_grid") {
    cfg.N_grid.clear();
    for (const auto& item : split_list(value)) cfg.N_grid.push_back(parse_number<int>(key, item));
  } else if (key == "trials") cfg.trials = parse_number<int>(key, value);
  else if (key == "estimators") cfg.estimators = split_list(value);
  else if (key == "penalty_c") cfg.penalty_c = parse_number<double>(key, value);
  else if (key == "lambda_c4") cfg.lambda_c4 = parse_number<double>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "out_path") cfg.out_path = value;
  else if (key == "csv_path") cfg.csv_path = value;
  else if (key == "k_max") cfg.k_max = parse_number<int>(key, value);
  else if (key == "r_max") cfg.r_max = parse_number<int>(key, value);
  else if (key == "signal") cfg.signal = parse_number<double>(key, value);
  else if (key == "max_iters") cfg.max_iters = parse_number<int>(key, value);
  else if (key == "restarts") cfg.restarts = parse_number<int>(key, value);
  else if (key == "threads") cfg.threads = parse_number<int>(key, value);
  else throw InputError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in, const std::string& name) {
  ExperimentConfig cfg;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(name + ":" + std::to_string(line_no) + ": expected 'key = value'");
    try {
      set_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const InputError& e) {
      throw InputError(name + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return parse_config(in, path);
}

FeatureMatrix rademacher_features(int d, int n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(d, n);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) X(a, i) = rng.sign();
  return FeatureMatrix(std::move(X));
}

ParameterMatrix plant_parameter(int d, int k, int r, double M, double signal, std::uint64_t seed) {
  require(k >= 1 && k <= d && r >= 1 && r <= k, "planting needs 1 <= r <= k <= d");
  require(M > 0.0 && signal > 0.0 && signal < 1.0, "planting needs M > 0 and signal in (0, 1)");
  Rng rng(seed);
  const IndexSet support = random_subset(d, k, rng);
  Matrix block(k, k);
  if (r == 1) {
    Vector u(k);
    for (int a = 0; a < k; ++a) u(a) = rng.sign() * (0.5 + 0.5 * rng.uniform());
    block = u * u.transpose();
  } else {
    Matrix G(k, r);
    for (int a = 0; a < k; ++a)
      for (int j = 0; j < r; ++j) G(a, j) = rng.normal();
    const Matrix U = Eigen::HouseholderQR<Matrix>(G).householderQ() * Matrix::Identity(k, r);
    Vector lambda(r);
    for (int j = 0; j < r; ++j) lambda(j) = rng.sign() * (0.5 + 0.5 * rng.uniform());
    block = U * lambda.asDiagonal() * U.transpose();
  }
  block *= signal * M / block.cwiseAbs().sum();
  ParameterMatrix theta(d);
  for (int a = 0; a < k; ++a)
    for (int b = a; b < k; ++b)
      theta.set(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)], block(a, b));
  theta.analytic_rank = r;
  return theta;
}

const RateRow& RateTable::row(const std::string& estimator, int N) const {
  for (const auto& r : rows)
    if (r.estimator == estimator && r.N == N) return r;
  throw InputError("no rate row for " + estimator + " at N = " + std::to_string(N));
}

double median(std::vector<double> v) {
  require(!v.empty(), "median of an empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

namespace {

double quantile_sorted(const std::vector<double>& v, double p) {
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double iqr(std::vector<double> v) {
  require(!v.empty(), "IQR of an empty sample");
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, 0.75) - quantile_sorted(v, 0.25);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "slope needs at least two points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, "log-log slope needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double mx = mean(lx), my = mean(ly);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

RateTable run_rates(const ExperimentConfig& config) {
  config.validate();
  const int n = config.vertices();
  const int d = config.d;
  const int s = std::min(2 * config.k, d);
  const auto E = config.estimators.size();
  const auto cells = config.N_grid.size() * static_cast<std::size_t>(config.trials);

  RateTable table;
  table.config = config;
  table.records.resize(cells * E);
  table.designs.resize(cells);

  parallel_for(cells, config.threads, [&](std::size_t cell) {
    const std::size_t ni = cell / static_cast<std::size_t>(config.trials);
    const int t = static_cast<int>(cell % static_cast<std::size_t>(config.trials));
    const int N = config.N_grid[ni];
    // Theta* depends on the trial only, so every N sees the same targets
    const ParameterMatrix theta_star = plant_parameter(d, config.k, config.r, config.M, config.signal, derive_seed(config.seed, 1, t));
    const FeatureMatrix X = rademacher_features(d, n, derive_seed(config.seed, 2, ni, t));
    const ObservationMask omega = ObservationMask::random_pairs(n, N, derive_seed(config.seed, 3, ni, t));
    const AffinityMatrix sigma_star = affinity(X, theta_star, omega);
    const EdgeObservations Y = sample_observations(edge_probabilities(sigma_star), derive_seed(config.seed, 4, ni, t));

    DesignRecord& dr = table.designs[cell];
    dr.N = N;
    dr.trial = t;
    dr.s = s;
    dr.delta = block_isometry_constant(X, omega, s).delta;
    dr.witness = check_affinity_bound(X, omega, config.M).witness;

    FitOptions opts;
    opts.max_iters = config.max_iters;
    opts.n_restarts = config.restarts;
    opts.seed = derive_seed(config.seed, 5, ni, t);
    for (std::size_t e = 0; e < E; ++e) {
      TrialRecord& rec = table.records[cell * E + e];
      rec.estimator = config.estimators[e];
      rec.N = N;
      rec.trial = t;
      try {
        FitResult fit;
        if (rec.estimator == "penalized") {
          const int k_max = config.k_max > 0 ? config.k_max : config.k;
          const int r_max = config.r_max > 0 ? config.r_max : config.r;
          fit = fit_penalized_mle(Y, X, omega, PenaltySpec{config.penalty_c, d}, config.M, k_max, r_max, opts);
        } else {
          fit = fit_lasso(Y, X, omega, default_lasso_lambda(d, config.lambda_c4), opts);
          rec.kkt = fit.kkt_residual;
        }
        const ParameterMatrix diff = fit.theta_hat - theta_star;
        rec.frob_sq = diff.frobenius_norm_sq();
        rec.kl = kl_divergence(theta_star, fit.theta_hat, X, omega);
        rec.pred = masked_quadratic_norm(X, diff, omega) / (2.0 * N);
        rec.selected_k = static_cast<int>(fit.theta_hat.support().size());
        rec.selected_r = fit.rank;
        rec.ok = true;
      } catch (const std::exception& ex) {
        rec.ok = false;
        rec.error = ex.what();
      }
    }
  });

  for (const auto& est : config.estimators)
    for (int N : config.N_grid) {
      RateRow row;
      row.estimator = est;
      row.N = N;
      std::vector<double> frob, kl, pred;
      for (const auto& rec : table.records) {
        if (rec.estimator != est || rec.N != N) continue;
        if (!rec.ok) {
          ++row.failures;
          continue;
        }
        frob.push_back(rec.frob_sq);
        kl.push_back(rec.kl);
        pred.push_back(rec.pred);
        row.max_kkt = std::max(row.max_kkt, rec.kkt);
      }
      row.trials = static_cast<int>(frob.size());
      if (!frob.empty()) {
        row.median_frob_sq_error = median(frob);
        row.iqr = iqr(frob);
        row.median_kl = median(kl);
        row.median_pred_error = median(pred);
        row.mean_frob_sq_error = mean(frob);
        row.mean_kl = mean(kl);
        row.mean_pred_error = mean(pred);
      }
      table.rows.push_back(row);
    }
  return table;
}

}  // namespace mlr
