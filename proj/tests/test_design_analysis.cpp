#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "mlr/design_analysis.hpp"
#include "mlr/error.hpp"
#include "mlr/experiment.hpp"
#include "mlr/reduction.hpp"

using namespace mlr;

TEST_CASE("design rows reproduce the affinities through vec") {
  Rng rng(1);
  const FeatureMatrix X = test::gaussian_features(3, 6, rng);
  const ObservationMask omega = ObservationMask::random_pairs(6, 9, 2);
  const ParameterMatrix theta = test::random_symmetric(3, rng);
  const DesignRows D = build_design_rows(X, omega);
  REQUIRE(D.rows.rows() == 9);
  REQUIRE(D.rows.cols() == 9);
  const Eigen::Map<const Vector> vec(theta.dense().data(), 9);
  const Vector a = D.rows * vec;
  for (int t = 0; t < omega.size(); ++t)
    CHECK(a(t) == doctest::Approx(test::naive_affinity(X, theta, omega[t].i, omega[t].j)));
}

TEST_CASE("block isometry equals the symmetric block RIP of the design rows") {
  Rng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    const FeatureMatrix X = test::gaussian_features(4, 5, rng);
    const ObservationMask omega = ObservationMask::random_pairs(5, 8, rng.next());
    const DesignRows D = build_design_rows(X, omega);
    for (int s = 1; s <= 2; ++s)
      CHECK(block_isometry_constant(X, omega, s).delta == doctest::Approx(block_rip_constant(D.rows, s)).epsilon(1e-10));
  }
}

TEST_CASE("isometry constant by direct search over random directions stays below the exact value") {
  Rng rng(3);
  const FeatureMatrix X = rademacher_features(5, 20, 4);
  const ObservationMask omega = ObservationMask::random_pairs(20, 100, 5);
  const IsometryReport exact = block_isometry_constant(X, omega, 2);
  IsometryOptions opts;
  opts.mc_supports = 30;
  const IsometryReport mc = block_isometry_constant(X, omega, 2, IsometryMode::monte_carlo, opts);
  CHECK(mc.delta <= exact.delta + 1e-12);
  CHECK(exact.supports_checked == 10);
  CHECK(exact.worst_support.size() == 2);
  CHECK(exact.lambda_min <= exact.lambda_max);
  CHECK(exact.delta == doctest::Approx(std::max(1 - exact.lambda_min, exact.lambda_max - 1)));

  // brute force: random symmetric B on the worst support never exceeds delta
  for (int rep = 0; rep < 50; ++rep) {
    ParameterMatrix B(5);
    const auto& S = exact.worst_support;
    for (std::size_t a = 0; a < S.size(); ++a)
      for (std::size_t b = a; b < S.size(); ++b) B.set(S[a], S[b], rng.normal());
    const double ratio = masked_quadratic_norm(X, B, omega) / (omega.size() * B.frobenius_norm_sq());
    CHECK(std::abs(ratio - 1.0) <= exact.delta + 1e-9);
  }
}

TEST_CASE("RIP constant of simple matrices") {
  CHECK(rip_constant(Matrix::Identity(4, 4), 2) == doctest::Approx(0.75));
  Matrix H(4, 4);
  H << 1, 1, 1, 1, 1, -1, 1, -1, 1, 1, -1, -1, 1, -1, -1, 1;
  CHECK(rip_constant(H, 3) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rip_constant(H, 3, IsometryMode::monte_carlo) <= 1e-12);
  CHECK_THROWS_AS(rip_constant(H, 5), InputError);
}

TEST_CASE("exact enumeration respects its budget") {
  const FeatureMatrix X = rademacher_features(12, 10, 1);
  const ObservationMask omega = ObservationMask::all_pairs(10);
  IsometryOptions opts;
  opts.exact_budget = 100;
  CHECK_THROWS_AS(block_isometry_constant(X, omega, 6, IsometryMode::exact, opts), BudgetExceeded);
  CHECK_NOTHROW(block_isometry_constant(X, omega, 6, IsometryMode::monte_carlo, opts));
}

TEST_CASE("the reduction design is degenerate") {
  const ReductionDesign design = reduction_design(6);
  const IsometryReport rep = block_isometry_constant(design.X, design.omega, 2);
  CHECK(rep.degenerate());
  CHECK(rep.delta == doctest::Approx(1.0));
}

TEST_CASE("affinity bound witness") {
  const FeatureMatrix X = rademacher_features(4, 6, 2);
  const ObservationMask omega = ObservationMask::all_pairs(6);
  const AffinityBoundCheck c = check_affinity_bound(X, omega, 4.0);
  CHECK(c.witness == 1.0);
  CHECK(c.guaranteed);
  ParameterMatrix theta(4);
  theta.set(0, 1, 1.0);
  theta.set(2, 2, -0.5);
  CHECK(max_abs_affinity(X, theta, omega) <= theta.l11_norm() * c.witness + 1e-12);
  const FeatureMatrix big(2.0 * Matrix::Ones(2, 3));
  CHECK_FALSE(check_affinity_bound(big, ObservationMask::all_pairs(3), 1.0).guaranteed);
}
