#include "mlr/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "mlr/error.hpp"
#include "mlr/packing.hpp"
#include "mlr/parallel.hpp"
#include "mlr/rng.hpp"

namespace mlr {

void DetectionInstance::validate() const {
  require(n >= 2, "instance needs n >= 2");
  require_dims(adjacency.rows() == n && adjacency.cols() == n, "adjacency must be n x n");
  for (int i = 0; i < n; ++i) {
    require(adjacency(i, i) == 0.0, "adjacency diagonal must be zero");
    for (int j = i + 1; j < n; ++j) {
      require(adjacency(i, j) == adjacency(j, i), "adjacency must be symmetric");
      require(adjacency(i, j) == 0.0 || adjacency(i, j) == 1.0, "adjacency entries must be 0 or 1");
    }
  }
  if (planted_support)
    for (int v : *planted_support) require(v >= 0 && v < n, "planted vertex out of range");
}

ReductionDesign reduction_design(int n) {
  require(n >= 2, "reduction design needs n >= 2");
  const double N = binomial(n, 2);
  const double scaling = std::pow(N, 0.25);
  return {FeatureMatrix(scaling * Matrix::Identity(n, n)), ObservationMask::all_pairs(n), scaling};
}

namespace {

void check_dense_args(int n, int k, double q) {
  require(n >= 2, "graph needs n >= 2");
  require(k >= 0 && k <= n, "planted size k must lie in [0, n]");
  require(q >= 0.5 && q <= 1.0, "planted probability q must lie in [1/2, 1]");
}

IndexSet draw_support(int n, int k, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0));
  return random_subset(n, k, rng);
}

DetectionInstance from_labels(int n, const ObservationMask& omega, const Vector& y, IndexSet support, double q) {
  DetectionInstance inst;
  inst.n = n;
  inst.q = q;
  inst.adjacency = Matrix::Zero(n, n);
  for (int t = 0; t < omega.size(); ++t) {
    inst.adjacency(omega[t].i, omega[t].j) = y(t);
    inst.adjacency(omega[t].j, omega[t].i) = y(t);
  }
  inst.planted_support = std::move(support);
  return inst;
}

}  // namespace

DetectionInstance sample_dense_subgraph(int n, int k, double q, std::uint64_t seed) {
  check_dense_args(n, k, q);
  IndexSet support = draw_support(n, k, seed);
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  for (int v : support) in[static_cast<std::size_t>(v)] = 1;
  const ObservationMask omega = ObservationMask::all_pairs(n);
  const std::uint64_t edge_seed = derive_seed(seed, 1);
  Vector y(omega.size());
  for (int t = 0; t < omega.size(); ++t) {
    const bool planted = in[static_cast<std::size_t>(omega[t].i)] && in[static_cast<std::size_t>(omega[t].j)];
    y(t) = counter_uniform(edge_seed, static_cast<std::uint64_t>(t)) < (planted ? q : 0.5) ? 1.0 : 0.0;
  }
  return from_labels(n, omega, y, std::move(support), q);
}

DetectionInstance sample_via_model(int n, int k, double q, std::uint64_t seed) {
  check_dense_args(n, k, q);
  require(q < 1.0, "the model route needs q < 1");
  IndexSet support = draw_support(n, k, seed);
  const ReductionDesign design = reduction_design(n);
  ParameterMatrix theta(n);
  const double alpha = logit(q);
  if (k >= 1 && alpha > 0.0)
    theta = build_g_k_alpha(n, k, alpha / std::sqrt(static_cast<double>(design.omega.size())), support);
  const Vector probs = edge_probabilities(affinity(design.X, theta, design.omega));
  const EdgeObservations y = sample_observations(probs, derive_seed(seed, 2));
  return from_labels(n, design.omega, y.labels(), std::move(support), q);
}

EdgeObservations instance_observations(const DetectionInstance& inst) {
  inst.validate();
  const ObservationMask omega = ObservationMask::all_pairs(inst.n);
  Vector y(omega.size());
  for (int t = 0; t < omega.size(); ++t) y(t) = inst.adjacency(omega[t].i, omega[t].j);
  return EdgeObservations::binary(y);
}

DetectionInstance relabel(const DetectionInstance& inst, const std::vector<int>& perm) {
  require(static_cast<int>(perm.size()) == inst.n, "permutation length must equal n");
  std::vector<char> seen(perm.size(), 0);
  for (int p : perm) {
    require(p >= 0 && p < inst.n && !seen[static_cast<std::size_t>(p)], "not a permutation");
    seen[static_cast<std::size_t>(p)] = 1;
  }
  DetectionInstance out = inst;
  for (int i = 0; i < inst.n; ++i)
    for (int j = 0; j < inst.n; ++j)
      out.adjacency(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]) = inst.adjacency(i, j);
  if (inst.planted_support) {
    IndexSet s;
    for (int v : *inst.planted_support) s.push_back(perm[static_cast<std::size_t>(v)]);
    std::sort(s.begin(), s.end());
    out.planted_support = s;
  }
  return out;
}

namespace {

constexpr int MAX_CANONICAL = 7;

const std::vector<std::vector<int>>& permutations(int K) {
  static const auto table = [] {
    std::vector<std::vector<std::vector<int>>> t(MAX_CANONICAL + 1);
    for (int m = 0; m <= MAX_CANONICAL; ++m) {
      std::vector<int> p(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) p[static_cast<std::size_t>(i)] = i;
      do t[static_cast<std::size_t>(m)].push_back(p);
      while (std::next_permutation(p.begin(), p.end()));
    }
    return t;
  }();
  return table[static_cast<std::size_t>(K)];
}

}  // namespace

std::uint64_t induced_subgraph_key(const DetectionInstance& inst, const IndexSet& S) {
  const int K = static_cast<int>(S.size());
  if (K > MAX_CANONICAL) {
    std::uint64_t h = 0x8000000000000000ULL;
    for (int v : S) h = splitmix64(h ^ static_cast<std::uint64_t>(v + 1));
    return h | 0x8000000000000000ULL;
  }
  bool adj[MAX_CANONICAL][MAX_CANONICAL] = {};
  for (int a = 0; a < K; ++a)
    for (int b = 0; b < K; ++b)
      adj[a][b] = inst.adjacency(S[static_cast<std::size_t>(a)], S[static_cast<std::size_t>(b)]) != 0.0;
  std::uint64_t best = ~std::uint64_t{0};
  for (const auto& p : permutations(K)) {
    std::uint64_t code = 0;
    for (int a = 0; a < K; ++a)
      for (int b = a + 1; b < K; ++b) code = (code << 1) | (adj[p[static_cast<std::size_t>(a)]][p[static_cast<std::size_t>(b)]] ? 1u : 0u);
    best = std::min(best, code);
  }
  return best;
}

double frob_omega(const ParameterMatrix& theta, const ObservationMask& omega) {
  double s = 0.0;
  for (const auto& p : omega.pairs()) s += theta(p.i, p.j) * theta(p.i, p.j);
  return std::sqrt(s);
}

std::string to_string(DetectorMethod m) {
  switch (m) {
    case DetectorMethod::psi_exhaustive: return "psi-exhaustive";
    case DetectorMethod::psi_lasso: return "psi-lasso";
    case DetectorMethod::spectral: return "spectral";
  }
  return "unknown";
}

DetectorMethod parse_detector_method(const std::string& s) {
  if (s == "psi-exhaustive") return DetectorMethod::psi_exhaustive;
  if (s == "psi-lasso") return DetectorMethod::psi_lasso;
  if (s == "spectral") return DetectorMethod::spectral;
  throw InputError("unknown detector method '" + s + "'");
}

double default_tau(int k, int r, int d, int N, double u) {
  require(k >= 1 && r >= 1 && d >= k && N >= 1 && u > 0.0, "invalid arguments for the default threshold");
  const double f = (k * r + k * std::log(d * std::numbers::e / k)) / N;
  return std::sqrt(u * f);
}

double psi_statistic(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                     const EstimatorConfig& cfg, int k) {
  FitResult fit;
  switch (cfg.method) {
    case DetectorMethod::psi_exhaustive: {
      const int k_max = cfg.k_max > 0 ? cfg.k_max : k;
      require(k_max >= 1, "exhaustive detector needs k_max >= 1");
      fit = fit_penalized_mle(Y, X, omega, PenaltySpec{cfg.penalty_c, X.dim()}, cfg.M, k_max, cfg.r_max, cfg.fit);
      break;
    }
    case DetectorMethod::psi_lasso: {
      const double lambda = cfg.lambda > 0.0 ? cfg.lambda : default_lasso_lambda(X.dim());
      fit = fit_lasso(Y, X, omega, lambda, cfg.fit);
      break;
    }
    case DetectorMethod::spectral:
      throw InputError("detector_psi needs an estimator method, not spectral");
  }
  return frob_omega(fit.theta_hat, omega);
}

double psi_statistic(const DetectionInstance& inst, const EstimatorConfig& cfg, int k) {
  const ReductionDesign design = reduction_design(inst.n);
  EstimatorConfig local = cfg;
  if (cfg.method == DetectorMethod::psi_exhaustive)
    local.fit.equivalence_key = [&inst](const IndexSet& S) { return induced_subgraph_key(inst, S); };
  return psi_statistic(instance_observations(inst), design.X, design.omega, local, k);
}

DetectionReport detector_psi(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                             const EstimatorConfig& cfg, int k, double tau) {
  DetectionReport rep;
  rep.method = cfg.method;
  rep.statistic = psi_statistic(Y, X, omega, cfg, k);
  rep.threshold = tau;
  rep.decision = rep.statistic >= tau ? 1 : 0;
  return rep;
}

double spectral_statistic(const DetectionInstance& inst) {
  require(inst.n >= 2, "spectral statistic needs n >= 2");
  const int n = inst.n;
  Matrix centred = 2.0 * inst.adjacency - Matrix::Ones(n, n) + Matrix::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<Matrix> es(centred, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

DetectionReport spectral_detector(const DetectionInstance& inst, double tau) {
  DetectionReport rep;
  rep.method = DetectorMethod::spectral;
  rep.statistic = spectral_statistic(inst);
  rep.threshold = tau;
  rep.decision = rep.statistic >= tau ? 1 : 0;
  return rep;
}

double calibrate_threshold(std::vector<double> null_stats, double level) {
  require(!null_stats.empty(), "calibration needs null statistics");
  require(level >= 0.0 && level < 1.0, "level must lie in [0, 1)");
  std::sort(null_stats.begin(), null_stats.end(), std::greater<>());
  const auto allowed = static_cast<std::size_t>(std::floor(level * static_cast<double>(null_stats.size())));
  // just above the (allowed+1)-th largest value: at most `allowed` nulls reach it
  return std::nextafter(null_stats[allowed], std::numeric_limits<double>::infinity());
}

namespace {

struct ChiSquare {
  double stat = 0.0;
  int df = 0;
  double p = 1.0;
};

// Two-sample homogeneity on integer counts; adjacent values are pooled until
// every column holds at least `min_count` observations.
ChiSquare homogeneity(const std::vector<int>& a, const std::vector<int>& b, int min_count = 10) {
  std::map<int, std::pair<double, double>> hist;
  for (int v : a) hist[v].first += 1.0;
  for (int v : b) hist[v].second += 1.0;
  std::vector<std::pair<double, double>> cols;
  std::pair<double, double> acc{0.0, 0.0};
  for (const auto& [v, c] : hist) {
    acc.first += c.first;
    acc.second += c.second;
    if (acc.first + acc.second >= min_count) {
      cols.push_back(acc);
      acc = {0.0, 0.0};
    }
  }
  if (acc.first + acc.second > 0.0) {
    if (cols.empty()) cols.push_back(acc);
    else {
      cols.back().first += acc.first;
      cols.back().second += acc.second;
    }
  }
  ChiSquare out;
  out.df = static_cast<int>(cols.size()) - 1;
  if (out.df < 1) return out;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  for (const auto& [ca, cb] : cols) {
    const double total = ca + cb;
    const double ea = total * na / (na + nb), eb = total * nb / (na + nb);
    out.stat += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  out.p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(out.df), out.stat));
  return out;
}

void count_edges(const DetectionInstance& inst, int& in_block, int& off_block) {
  std::vector<char> in(static_cast<std::size_t>(inst.n), 0);
  for (int v : *inst.planted_support) in[static_cast<std::size_t>(v)] = 1;
  in_block = off_block = 0;
  for (int i = 0; i < inst.n; ++i)
    for (int j = i + 1; j < inst.n; ++j) {
      if (inst.adjacency(i, j) == 0.0) continue;
      if (in[static_cast<std::size_t>(i)] && in[static_cast<std::size_t>(j)]) ++in_block;
      else ++off_block;
    }
}

}  // namespace

MarginalTest generator_equivalence(int n, int k, double q, int trials, std::uint64_t seed) {
  require(trials >= 2, "equivalence test needs at least two trials");
  std::vector<int> in_a(static_cast<std::size_t>(trials)), off_a(in_a.size()), in_b(in_a.size()), off_b(in_a.size());
  for (int t = 0; t < trials; ++t) {
    const auto u = static_cast<std::size_t>(t);
    count_edges(sample_dense_subgraph(n, k, q, derive_seed(seed, 0, t)), in_a[u], off_a[u]);
    count_edges(sample_via_model(n, k, q, derive_seed(seed, 1, t)), in_b[u], off_b[u]);
  }
  MarginalTest out;
  out.trials = trials;
  const ChiSquare in = homogeneity(in_a, in_b);
  const ChiSquare off = homogeneity(off_a, off_b);
  out.in_block_stat = in.stat;
  out.in_block_df = in.df;
  out.in_block_p = in.p;
  out.off_block_stat = off.stat;
  out.off_block_df = off.df;
  out.off_block_p = off.p;
  return out;
}

double PowerCell::type1_se() const {
  const double p = type1();
  return trials ? std::sqrt(p * (1.0 - p) / trials) : 0.0;
}

double PowerCell::type2_se() const {
  const double p = type2();
  return trials ? std::sqrt(p * (1.0 - p) / trials) : 0.0;
}

namespace {

double method_statistic(DetectorMethod m, const DetectionInstance& inst, const EstimatorConfig& base, int k) {
  if (m == DetectorMethod::spectral) return spectral_statistic(inst);
  EstimatorConfig cfg = base;
  cfg.method = m;
  return psi_statistic(inst, cfg, k);
}

}  // namespace

std::vector<PowerCell> power_experiment(const std::vector<PowerCellSpec>& grid,
                                        const std::vector<DetectorMethod>& methods, const PowerOptions& opts) {
  require(opts.trials >= 1 && opts.calibration_trials >= 1, "power experiment needs at least one trial");
  std::vector<PowerCell> out;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    const PowerCellSpec& spec = grid[c];
    check_dense_args(spec.n, spec.k, spec.q);
    // the same draws feed every method, so comparisons within a cell are paired
    const auto null_seed = [&](int role, int t) { return derive_seed(opts.seed, c, role, t); };
    for (DetectorMethod m : methods) {
      PowerCell cell;
      cell.spec = spec;
      cell.method = m;
      cell.trials = opts.trials;
      if (m == DetectorMethod::psi_exhaustive) {
        const int k_max = opts.estimator.k_max > 0 ? opts.estimator.k_max : spec.k;
        const double count = penalized_model_count(spec.n, k_max, opts.estimator.r_max);
        if (k_max < 1 || count > opts.estimator.fit.model_budget) {
          cell.skipped = true;
          cell.reason = k_max < 1 ? "k = 0" : BudgetExceeded("penalized MLE model count", count, opts.estimator.fit.model_budget).what();
          out.push_back(std::move(cell));
          continue;
        }
      }
      std::vector<double> calib(static_cast<std::size_t>(opts.calibration_trials));
      cell.null_stats.resize(static_cast<std::size_t>(opts.trials));
      cell.alt_stats.resize(static_cast<std::size_t>(opts.trials));
      parallel_for(calib.size(), opts.threads, [&](std::size_t t) {
        calib[t] = method_statistic(m, sample_dense_subgraph(spec.n, 0, 0.5, null_seed(0, static_cast<int>(t))),
                                    opts.estimator, spec.k);
      });
      cell.threshold = calibrate_threshold(calib, opts.level);
      parallel_for(2 * static_cast<std::size_t>(opts.trials), opts.threads, [&](std::size_t u) {
        const bool alt = u >= static_cast<std::size_t>(opts.trials);
        const auto t = static_cast<int>(alt ? u - static_cast<std::size_t>(opts.trials) : u);
        const DetectionInstance inst = alt ? sample_dense_subgraph(spec.n, spec.k, spec.q, null_seed(2, t))
                                           : sample_dense_subgraph(spec.n, 0, 0.5, null_seed(1, t));
        const double s = method_statistic(m, inst, opts.estimator, spec.k);
        (alt ? cell.alt_stats : cell.null_stats)[static_cast<std::size_t>(t)] = s;
      });
      for (double s : cell.null_stats) cell.false_alarms += s >= cell.threshold ? 1 : 0;
      for (double s : cell.alt_stats) cell.misses += s < cell.threshold ? 1 : 0;
      out.push_back(std::move(cell));
    }
  }
  return out;
}

}  // namespace mlr
