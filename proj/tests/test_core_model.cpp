#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "mlr/core_model.hpp"
#include "mlr/error.hpp"

using namespace mlr;

TEST_CASE("feature matrix validation") {
  CHECK_THROWS_AS(FeatureMatrix(Matrix(0, 3)), InputError);
  CHECK_THROWS_AS(FeatureMatrix(Matrix::Ones(2, 1)), InputError);
  Matrix bad = Matrix::Ones(2, 3);
  bad(1, 1) = std::nan("");
  CHECK_THROWS_AS(FeatureMatrix{bad}, InputError);
  const FeatureMatrix X(Matrix::Ones(3, 5));
  CHECK(X.dim() == 3);
  CHECK(X.vertices() == 5);
}

TEST_CASE("observation mask ordering, loops and duplicates") {
  ObservationMask m(4, {{2, 1}, {0, 3}, {0, 1}});
  REQUIRE(m.size() == 3);
  CHECK(m[0] == VertexPair{0, 1});
  CHECK(m[1] == VertexPair{0, 3});
  CHECK(m[2] == VertexPair{1, 2});

  CHECK_THROWS_AS(ObservationMask(4, {{1, 2}, {2, 1}}), InputError);
  CHECK_THROWS_AS(ObservationMask(4, {{1, 1}}), InputError);
  CHECK(ObservationMask(4, {{1, 1}, {0, 2}}, LoopPolicy::drop).size() == 1);
  CHECK_THROWS_AS(ObservationMask(4, {{0, 4}}), InputError);

  CHECK(ObservationMask::all_pairs(7).size() == 21);
  const auto r1 = ObservationMask::random_pairs(10, 20, 5);
  const auto r2 = ObservationMask::random_pairs(10, 20, 5);
  CHECK(r1.pairs() == r2.pairs());
  std::set<VertexPair> distinct(r1.pairs().begin(), r1.pairs().end());
  CHECK(distinct.size() == 20);
  CHECK_THROWS_AS(ObservationMask::random_pairs(4, 7, 0), InputError);
}

TEST_CASE("parameter matrix symmetry, support, rank and norms") {
  ParameterMatrix p(5);
  p.set(1, 3, 2.0);
  p.set(3, 3, -1.0);
  CHECK(p(3, 1) == 2.0);
  CHECK(p.support() == IndexSet{1, 3});
  CHECK(p.l11_norm() == doctest::Approx(5.0));
  CHECK(p.frobenius_norm_sq() == doctest::Approx(9.0));
  CHECK(p.rank() == 2);
  CHECK(ParameterMatrix(4).rank() == 0);

  Vector u(4);
  u << 1.0, -2.0, 0.5, 0.0;
  const auto r1 = ParameterMatrix::from_upper_triangle(u * u.transpose());
  CHECK(r1.rank() == 1);
  CHECK(r1.support() == IndexSet{0, 1, 2});
  CHECK(r1.in_class(3, 1, r1.l11_norm() + 1e-9));
  CHECK_FALSE(r1.in_class(3, 1, r1.l11_norm()));
  CHECK_FALSE(r1.in_class(2, 1, 100.0));
  CHECK_FALSE((r1 + ParameterMatrix::from_upper_triangle(Matrix::Identity(4, 4))).in_class(4, 1, 100.0));

  Matrix lower = Matrix::Zero(2, 2);
  lower(1, 0) = 7.0;
  CHECK(ParameterMatrix::from_upper_triangle(lower)(0, 1) == 0.0);
}

TEST_CASE("build_parameter membership modes") {
  UpperEntries e{{{0, 1}, 1.0}, {{2, 2}, 0.5}};
  const ParameterMatrix p = build_parameter(3, e, 10.0);
  CHECK(p(1, 0) == 1.0);
  CHECK(p.l11_norm() == doctest::Approx(2.5));
  CHECK_NOTHROW(build_parameter(3, e, 2.0, Membership::lenient));
  CHECK_THROWS_AS(build_parameter(3, e, 2.5, Membership::strict), InputError);
  CHECK_THROWS_AS(build_parameter(3, {{{1, 0}, 1.0}}, 10.0), InputError);
}

TEST_CASE("sigmoid and logit") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
  for (double t : {-30.0, -2.5, 0.3, 4.0, 25.0}) {
    CHECK(sigmoid(t) + sigmoid(-t) == doctest::Approx(1.0));
    CHECK(sigmoid(t) == doctest::Approx(1.0 / (1.0 + std::exp(-t))));
  }
  for (double q : {0.1, 0.5, 0.9, 0.999}) CHECK(sigmoid(logit(q)) == doctest::Approx(q));
}

TEST_CASE("affinity matches explicit bilinear form") {
  Rng rng(3);
  const FeatureMatrix X = test::gaussian_features(4, 7, rng);
  const ParameterMatrix theta = test::random_symmetric(4, rng);
  const ObservationMask omega = ObservationMask::all_pairs(7);
  const AffinityMatrix a = affinity(X, theta, omega);
  for (int t = 0; t < omega.size(); ++t)
    CHECK(a.values(t) == doctest::Approx(test::naive_affinity(X, theta, omega[t].i, omega[t].j)).epsilon(1e-12));
  const Vector p = edge_probabilities(a);
  for (int t = 0; t < omega.size(); ++t) CHECK(p(t) == doctest::Approx(sigmoid(a.values(t))));
  CHECK_THROWS_AS(affinity(X, ParameterMatrix(3), omega), DimensionMismatch);
}

TEST_CASE("edge observations and sampling") {
  CHECK_THROWS_AS(EdgeObservations::binary(std::vector<int>{0, 2}), InputError);
  CHECK_THROWS_AS(EdgeObservations::fractional(Vector::Constant(2, 1.5)), InputError);
  CHECK(EdgeObservations::fractional(Vector::Constant(2, 0.3)).is_fractional());

  const Vector p = Vector::Constant(20000, 0.3);
  const EdgeObservations a = sample_observations(p, 17);
  const EdgeObservations b = sample_observations(p, 17);
  CHECK(a.labels() == b.labels());
  CHECK(a.labels().mean() == doctest::Approx(0.3).epsilon(0.05));
  CHECK_THROWS_AS(sample_observations(Vector::Constant(2, 1.0), 0), InputError);
}
