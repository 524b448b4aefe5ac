#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mlr/error.hpp"
#include "mlr/packing.hpp"
#include "mlr/reduction.hpp"

using namespace mlr;

TEST_CASE("reduction design turns affinities into scaled entries") {
  const ReductionDesign des = reduction_design(3);
  CHECK(des.omega.size() == 3);
  CHECK(des.scaling == doctest::Approx(std::pow(3.0, 0.25)));
  CHECK(des.X.entries().isApprox(des.scaling * Matrix::Identity(3, 3)));

  const ReductionDesign big = reduction_design(7);
  const double N = big.omega.size();
  const ParameterMatrix g = build_g_k_alpha(7, 3, 0.7, {1, 3, 6});
  const AffinityMatrix sigma = affinity(big.X, g, big.omega);
  for (int t = 0; t < big.omega.size(); ++t)
    CHECK(sigma.values(t) == doctest::Approx(std::sqrt(N) * g(big.omega[t].i, big.omega[t].j)));
}

TEST_CASE("direct generator basics") {
  const DetectionInstance clique = sample_dense_subgraph(12, 5, 1.0, 3);
  clique.validate();
  const IndexSet& S = *clique.planted_support;
  CHECK(S.size() == 5);
  for (int a : S)
    for (int b : S)
      if (a != b) CHECK(clique.adjacency(a, b) == 1.0);

  const DetectionInstance empty = sample_dense_subgraph(12, 0, 0.9, 4);
  CHECK(empty.planted_support->empty());

  const DetectionInstance again = sample_dense_subgraph(12, 5, 1.0, 3);
  CHECK(again.adjacency == clique.adjacency);

  CHECK_THROWS_AS(sample_dense_subgraph(10, 3, 0.4, 0), InputError);
  CHECK_THROWS_AS(sample_dense_subgraph(10, 11, 0.6, 0), InputError);
  CHECK_THROWS_AS(sample_via_model(10, 3, 1.0, 0), InputError);
}

TEST_CASE("edge densities of both generators") {
  const int n = 30, k = 10, T = 200;
  for (int route = 0; route < 2; ++route) {
    double in = 0, off = 0, in_pairs = 0, off_pairs = 0;
    for (int t = 0; t < T; ++t) {
      const DetectionInstance g = route == 0 ? sample_dense_subgraph(n, k, 0.8, 100 + t) : sample_via_model(n, k, 0.8, 100 + t);
      std::vector<char> mark(n, 0);
      for (int v : *g.planted_support) mark[v] = 1;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const bool inside = mark[i] && mark[j];
          (inside ? in : off) += g.adjacency(i, j);
          (inside ? in_pairs : off_pairs) += 1;
        }
    }
    CHECK(in / in_pairs == doctest::Approx(0.8).epsilon(0.03));
    CHECK(off / off_pairs == doctest::Approx(0.5).epsilon(0.02));
  }
}

TEST_CASE("spectral statistic on extreme graphs") {
  DetectionInstance g;
  g.n = 6;
  g.adjacency = Matrix::Zero(6, 6);
  CHECK(spectral_statistic(g) == doctest::Approx(1.0));
  g.adjacency = Matrix::Ones(6, 6) - Matrix::Identity(6, 6);
  CHECK(spectral_statistic(g) == doctest::Approx(5.0));
}

TEST_CASE("threshold calibration") {
  std::vector<double> null(10);
  std::iota(null.begin(), null.end(), 1.0);
  const double t = calibrate_threshold(null, 0.1);
  CHECK(t > 9.0);
  CHECK(t < 9.0 + 1e-12);
  int above = 0;
  for (double s : null) above += s >= t;
  CHECK(above == 1);
  CHECK(calibrate_threshold(null, 0.0) > 10.0);
  CHECK(calibrate_threshold({2.0, 2.0, 2.0}, 0.5) > 2.0);
  CHECK_THROWS_AS(calibrate_threshold({}, 0.1), InputError);
}

TEST_CASE("default threshold formula") {
  CHECK(default_tau(2, 1, 8, 100, 3.0) == doctest::Approx(std::sqrt(3.0 * (2 + 2 * std::log(4 * std::exp(1.0))) / 100)));
  CHECK_THROWS_AS(default_tau(0, 1, 8, 100, 1.0), InputError);
}

TEST_CASE("isomorphism keys") {
  const DetectionInstance g = sample_dense_subgraph(9, 0, 0.5, 21);
  std::vector<int> perm{3, 7, 0, 8, 1, 5, 2, 6, 4};
  const DetectionInstance h = relabel(g, perm);
  for (const IndexSet& S : all_combinations(9, 4)) {
    IndexSet image;
    for (int v : S) image.push_back(perm[v]);
    std::sort(image.begin(), image.end());
    CHECK(induced_subgraph_key(g, S) == induced_subgraph_key(h, image));
  }
  // triangle plus isolated vertex versus path on four vertices
  DetectionInstance a;
  a.n = 4;
  a.adjacency = Matrix::Zero(4, 4);
  auto edge = [&](int i, int j) { a.adjacency(i, j) = a.adjacency(j, i) = 1; };
  edge(0, 1), edge(1, 2), edge(0, 2);
  const auto tri = induced_subgraph_key(a, {0, 1, 2, 3});
  a.adjacency.setZero();
  edge(0, 1), edge(1, 2), edge(2, 3);
  CHECK(induced_subgraph_key(a, {0, 1, 2, 3}) != tri);
  CHECK_THROWS_AS(relabel(g, {0, 0, 1, 2, 3, 4, 5, 6, 7}), InputError);
}

TEST_CASE("keyed exhaustive fit agrees with the plain search") {
  const DetectionInstance g = sample_dense_subgraph(7, 3, 0.9, 5);
  const ReductionDesign des = reduction_design(7);
  const EdgeObservations Y = instance_observations(g);
  FitOptions plain;
  plain.n_restarts = 2;
  FitOptions keyed = plain;
  keyed.equivalence_key = [&g](const IndexSet& S) { return induced_subgraph_key(g, S); };
  const PenaltySpec spec{0.05, 7};
  const FitResult a = fit_penalized_mle(Y, des.X, des.omega, spec, 10.0, 3, 1, plain);
  const FitResult b = fit_penalized_mle(Y, des.X, des.omega, spec, 10.0, 3, 1, keyed);
  CHECK(b.objective == doctest::Approx(a.objective).epsilon(1e-6));
  CHECK(b.support.size() == a.support.size());
}

TEST_CASE("psi statistic") {
  const DetectionInstance g = sample_dense_subgraph(8, 3, 0.9, 8);
  EstimatorConfig cfg;
  cfg.method = DetectorMethod::psi_lasso;
  cfg.lambda = 1e6;
  CHECK(psi_statistic(g, cfg, 3) == 0.0);

  cfg.method = DetectorMethod::psi_exhaustive;
  cfg.fit.n_restarts = 2;
  const double s = psi_statistic(g, cfg, 3);
  std::vector<int> perm{7, 6, 5, 4, 3, 2, 1, 0};
  CHECK(psi_statistic(relabel(g, perm), cfg, 3) == doctest::Approx(s).epsilon(1e-6));

  cfg.method = DetectorMethod::spectral;
  CHECK_THROWS_AS(psi_statistic(g, cfg, 3), InputError);
  CHECK(to_string(parse_detector_method("psi-lasso")) == "psi-lasso");
  CHECK_THROWS_AS(parse_detector_method("oracle"), InputError);
}

TEST_CASE("generators agree in distribution on a small cell") {
  const MarginalTest m = generator_equivalence(8, 3, 0.8, 2000, 77);
  CHECK(m.trials == 2000);
  CHECK(m.in_block_df >= 1);
  CHECK(m.off_block_df >= 1);
  CHECK(m.passed(1e-4));
}

TEST_CASE("power experiment") {
  PowerOptions opts;
  opts.trials = 40;
  opts.calibration_trials = 40;
  opts.level = 0.1;
  opts.seed = 3;
  const auto cells = power_experiment({{12, 4, 0.5}}, {DetectorMethod::spectral}, opts);
  REQUIRE(cells.size() == 1);
  CHECK(!cells[0].skipped);
  CHECK(cells[0].null_stats.size() == 40);
  // q = 1/2 plants nothing: both samples are G(n, 1/2)
  CHECK(cells[0].type1() <= 0.3);
  CHECK(cells[0].type2() >= 0.5);

  const auto strong = power_experiment({{16, 8, 1.0}}, {DetectorMethod::spectral}, opts);
  CHECK(strong[0].total_error() < 0.3);

  opts.estimator.fit.model_budget = 100;
  const auto skipped = power_experiment({{16, 4, 0.9}}, {DetectorMethod::psi_exhaustive}, opts);
  CHECK(skipped[0].skipped);
  CHECK(!skipped[0].reason.empty());
}
