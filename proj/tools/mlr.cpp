#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mlr/dataset_io.hpp"
#include "mlr/design_analysis.hpp"
#include "mlr/error.hpp"
#include "mlr/estimators.hpp"
#include "mlr/experiment.hpp"
#include "mlr/packing.hpp"
#include "mlr/reduction.hpp"
#include "mlr/rng.hpp"
#include "mlr/serialize.hpp"

using namespace mlr;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 1;
};

void emit(const Globals& g, const Json& doc) {
  if (g.out.empty())
    std::cout << doc.dump(2) << '\n';
  else
    write_json(g.out, doc);
}

ExperimentConfig base_config(const Globals& g) {
  ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.out_path = g.out;
  cfg.threads = g.threads;
  return cfg;
}

struct SimulateArgs {
  int d = 8, k = 2, r = 1, n = 40, N = 400;
  double M = 4.0, signal = 0.75;
  std::string features = "features.txt", edges = "edges.txt";
};

void run_simulate(const Globals& g, const SimulateArgs& a) {
  const std::uint64_t seed = g.seed.value_or(0);
  const FeatureMatrix X = rademacher_features(a.d, a.n, derive_seed(seed, 2));
  const ObservationMask omega = ObservationMask::random_pairs(a.n, a.N, derive_seed(seed, 3));
  const ParameterMatrix theta = plant_parameter(a.d, a.k, a.r, a.M, a.signal, derive_seed(seed, 1));
  const EdgeObservations Y = sample_observations(edge_probabilities(affinity(X, theta, omega)), derive_seed(seed, 4));
  save_dataset(a.features, a.edges, Dataset{X, omega, Y});
  Json doc;
  doc["version"] = MLR_VERSION;
  doc["seed"] = seed;
  doc["d"] = a.d;
  doc["n"] = a.n;
  doc["N"] = a.N;
  doc["theta_star"] = {{"support", theta.support()}, {"rank", a.r}, {"entries", upper_entries_json(theta)}};
  doc["features"] = a.features;
  doc["edges"] = a.edges;
  emit(g, doc);
}

struct FitArgs {
  std::string features, edges, estimator = "penalized";
  double M = 4.0, penalty_c = 0.0, lambda = 0.0;
  int k_max = 2, r_max = 1, rank = 1, restarts = 3, max_iters = 2000;
  std::vector<int> support;
};

void run_fit(const Globals& g, const FitArgs& a) {
  const Dataset data = load_dataset(a.features, a.edges);
  FitOptions opts;
  opts.seed = g.seed.value_or(0);
  opts.threads = g.threads;
  opts.n_restarts = a.restarts;
  opts.max_iters = a.max_iters;
  FitResult fit;
  Json doc;
  doc["version"] = MLR_VERSION;
  doc["estimator"] = a.estimator;
  if (a.estimator == "penalized") {
    const double c = a.penalty_c > 0.0 ? a.penalty_c : default_penalty_constant(a.M);
    fit = fit_penalized_mle(data.Y, data.X, data.omega, PenaltySpec{c, data.X.dim()}, a.M, a.k_max, a.r_max, opts);
    doc["penalty_c"] = c;
  } else if (a.estimator == "lasso") {
    const double lambda = a.lambda > 0.0 ? a.lambda : default_lasso_lambda(data.X.dim());
    fit = fit_lasso(data.Y, data.X, data.omega, lambda, opts);
    doc["lambda"] = lambda;
  } else if (a.estimator == "rank") {
    fit = fit_rank_constrained(data.Y, data.X, data.omega, a.support, a.rank, a.M, opts);
  } else {
    throw InputError("unknown estimator '" + a.estimator + "'");
  }
  doc["fit"] = to_json(fit);
  emit(g, doc);
}

struct IsometryArgs {
  std::string features, edges, mode = "exact";
  int s = 2, mc_supports = 200, mc_directions = 20;
  double budget = 1e5;
};

void run_isometry(const Globals& g, const IsometryArgs& a) {
  const Dataset data = load_dataset(a.features, a.edges);
  IsometryOptions opts;
  opts.exact_budget = a.budget;
  opts.mc_supports = a.mc_supports;
  opts.mc_directions = a.mc_directions;
  opts.seed = g.seed.value_or(0);
  const IsometryMode mode = a.mode == "exact" ? IsometryMode::exact : IsometryMode::monte_carlo;
  if (a.mode != "exact" && a.mode != "monte_carlo") throw InputError("mode must be exact or monte_carlo");
  Json doc;
  doc["version"] = MLR_VERSION;
  doc["N"] = data.omega.size();
  doc["isometry"] = to_json(block_isometry_constant(data.X, data.omega, a.s, mode, opts));
  doc["affinity_bound"] = {{"witness", check_affinity_bound(data.X, data.omega, 1.0).witness}};
  emit(g, doc);
}

struct RatesArgs {
  std::string csv;
};

void run_rates_cmd(const Globals& g, const RatesArgs& a) {
  ExperimentConfig cfg = base_config(g);
  if (!a.csv.empty()) cfg.csv_path = a.csv;
  const RateTable table = run_rates(cfg);
  write_json(cfg.out_path, to_json(table));
  if (!cfg.csv_path.empty()) {
    std::ofstream csv(cfg.csv_path);
    if (!csv) throw InputError("cannot write " + cfg.csv_path);
    csv << rates_csv(table);
  }
}

struct ReductionArgs {
  int n = 20, k = 6, trials = 100, calibration_trials = 100, k_max = 0;
  double q = 0.95, level = 0.1, M = 10.0, penalty_c = 0.05, lambda = 0.0;
  std::vector<std::string> methods{"spectral"};
};

void run_reduction(const Globals& g, const ReductionArgs& a) {
  PowerOptions opts;
  opts.trials = a.trials;
  opts.calibration_trials = a.calibration_trials;
  opts.level = a.level;
  opts.seed = g.seed.value_or(0);
  opts.threads = g.threads;
  opts.estimator.M = a.M;
  opts.estimator.penalty_c = a.penalty_c;
  opts.estimator.k_max = a.k_max;
  opts.estimator.lambda = a.lambda;
  std::vector<DetectorMethod> methods;
  for (const auto& m : a.methods) methods.push_back(parse_detector_method(m));
  const auto cells = power_experiment({PowerCellSpec{a.n, a.k, a.q}}, methods, opts);
  Json doc;
  doc["version"] = MLR_VERSION;
  doc["seed"] = opts.seed;
  doc["config"] = {{"n", a.n}, {"k", a.k}, {"q", a.q}, {"trials", a.trials}, {"calibration_trials", a.calibration_trials},
                   {"level", a.level}, {"M", a.M}, {"penalty_c", a.penalty_c}, {"methods", a.methods}};
  Json results = Json::array();
  bool refused = false;
  for (const auto& c : cells) {
    results.push_back(to_json(c));
    refused = refused || c.skipped;
  }
  doc["results"] = results;
  emit(g, doc);
  if (refused && cells.size() == 1) throw BudgetExceeded(cells.front().reason, 0, 0);
}

struct PackingArgs {
  int d = 8, k = 2, n = 0, N = 200;
  double c0 = 1.0, gamma = 0.1, alpha = 0.5, beta = 0.25, budget = 1e6;
};

void run_packing(const Globals& g, const PackingArgs& a) {
  const std::uint64_t seed = g.seed.value_or(0);
  const PackingSet pack = greedy_packing(a.d, a.k, a.c0, seed, a.budget);
  int n = a.n;
  if (n == 0)
    while (binomial(n, 2) < a.N) ++n;
  const FeatureMatrix X = rademacher_features(a.d, n, derive_seed(seed, 2));
  const ObservationMask omega = ObservationMask::random_pairs(n, a.N, derive_seed(seed, 3));
  const int s = std::min(2 * a.k, a.d);
  const double delta_iso = block_isometry_constant(X, omega, s).delta;
  const double alpha_n = sparse_packing_alpha(a.d, a.k, a.N, delta_iso, a.gamma);
  const PackingSet scaled = pack.scaled(alpha_n);
  Json doc;
  doc["version"] = MLR_VERSION;
  doc["seed"] = seed;
  doc["packing"] = to_json(pack);
  doc["audit"] = to_json(audit_cardinality(pack, a.alpha, a.beta));
  doc["design"] = {{"n", n}, {"N", a.N}, {"s", s}, {"delta", delta_iso}};
  doc["alpha_N"] = alpha_n;
  if (pack.size() >= 2) {
    const Matrix kl = packing_kl_matrix(scaled, X, omega);
    const double sep = sparse_packing_delta(a.k, alpha_n, a.c0);
    doc["kl_max"] = kl.maxCoeff();
    doc["kl_bound"] = packing_kl_bound(a.k, alpha_n, a.N, delta_iso);
    doc["fano"] = {{"delta", sep}, {"lower_bound", fano_lower_bound(sep, kl, pack.size())}};
  }
  emit(g, doc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix logistic regression for link prediction"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "key = value configuration file");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--out", g.out, "output path (JSON)");
  app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "draw a design, a parameter and edges; write the toy files");
  simulate->add_option("--d", sim.d);
  simulate->add_option("--k", sim.k);
  simulate->add_option("--r", sim.r);
  simulate->add_option("--n", sim.n);
  simulate->add_option("--N", sim.N);
  simulate->add_option("--M", sim.M);
  simulate->add_option("--signal", sim.signal);
  simulate->add_option("--features", sim.features);
  simulate->add_option("--edges", sim.edges);

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "fit an estimator to a dataset");
  fit->add_option("--features", fa.features)->required();
  fit->add_option("--edges", fa.edges)->required();
  fit->add_option("--estimator", fa.estimator)->check(CLI::IsMember({"penalized", "lasso", "rank"}));
  fit->add_option("--M", fa.M);
  fit->add_option("--penalty-c", fa.penalty_c, "0 selects 2 / L(M)");
  fit->add_option("--lambda", fa.lambda, "0 selects sqrt(log d)");
  fit->add_option("--k-max", fa.k_max);
  fit->add_option("--r-max", fa.r_max);
  fit->add_option("--rank", fa.rank);
  fit->add_option("--support", fa.support)->delimiter(',');
  fit->add_option("--restarts", fa.restarts);
  fit->add_option("--max-iters", fa.max_iters);

  IsometryArgs ia;
  auto* isometry = app.add_subcommand("isometry", "block isometry constant of a dataset's design");
  isometry->add_option("--features", ia.features)->required();
  isometry->add_option("--edges", ia.edges)->required();
  isometry->add_option("--s", ia.s);
  isometry->add_option("--mode", ia.mode)->check(CLI::IsMember({"exact", "monte_carlo"}));
  isometry->add_option("--budget", ia.budget);
  isometry->add_option("--mc-supports", ia.mc_supports);
  isometry->add_option("--mc-directions", ia.mc_directions);

  RatesArgs ra;
  auto* rates = app.add_subcommand("rates", "rate-scaling study");
  rates->add_option("--csv", ra.csv, "CSV mirror of the rate table");

  ReductionArgs rd;
  auto* reduction = app.add_subcommand("reduction", "planted dense subgraph detection");
  reduction->add_option("--n", rd.n);
  reduction->add_option("--k", rd.k);
  reduction->add_option("--q", rd.q);
  reduction->add_option("--trials", rd.trials);
  reduction->add_option("--calibration-trials", rd.calibration_trials);
  reduction->add_option("--level", rd.level);
  reduction->add_option("--method", rd.methods)
      ->delimiter(',')
      ->check(CLI::IsMember({"psi-exhaustive", "psi-lasso", "spectral"}));
  reduction->add_option("--M", rd.M);
  reduction->add_option("--penalty-c", rd.penalty_c);
  reduction->add_option("--k-max", rd.k_max);
  reduction->add_option("--lambda", rd.lambda);

  PackingArgs pa;
  auto* packing = app.add_subcommand("packing", "greedy packing, KL bound and Fano value");
  packing->add_option("--d", pa.d);
  packing->add_option("--k", pa.k);
  packing->add_option("--c0", pa.c0);
  packing->add_option("--n", pa.n);
  packing->add_option("--N", pa.N);
  packing->add_option("--gamma", pa.gamma);
  packing->add_option("--alpha", pa.alpha);
  packing->add_option("--beta", pa.beta);
  packing->add_option("--budget", pa.budget);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*simulate) run_simulate(g, sim);
    else if (*fit) run_fit(g, fa);
    else if (*isometry) run_isometry(g, ia);
    else if (*rates) run_rates_cmd(g, ra);
    else if (*reduction) run_reduction(g, rd);
    else if (*packing) run_packing(g, pa);
  } catch (const BudgetExceeded& e) {
    std::cerr << "budget refused: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
