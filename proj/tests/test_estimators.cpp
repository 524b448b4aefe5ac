#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "mlr/design_analysis.hpp"
#include "mlr/error.hpp"
#include "mlr/estimators.hpp"
#include "mlr/experiment.hpp"
#include "mlr/likelihood.hpp"

using namespace mlr;

namespace {

struct Problem {
  FeatureMatrix X;
  ObservationMask omega;
  ParameterMatrix theta_star;
  EdgeObservations Y;
};

Problem make_problem(int d, int k, int r, int n, int N, std::uint64_t seed, double M = 4.0) {
  FeatureMatrix X = rademacher_features(d, n, derive_seed(seed, 1));
  ObservationMask omega = ObservationMask::random_pairs(n, N, derive_seed(seed, 2));
  ParameterMatrix theta = plant_parameter(d, k, r, M, 0.75, derive_seed(seed, 3));
  EdgeObservations Y = sample_observations(edge_probabilities(affinity(X, theta, omega)), derive_seed(seed, 4));
  return {std::move(X), std::move(omega), std::move(theta), std::move(Y)};
}

// Euclidean projection onto the weighted l1 ball found by bisection on the threshold.
Matrix bisection_projection(const Matrix& B, double radius) {
  auto mass = [&](double mu) {
    double s = 0.0;
    for (int a = 0; a < B.rows(); ++a)
      for (int b = a; b < B.cols(); ++b) s += (a == b ? 1.0 : 2.0) * std::max(std::abs(B(a, b)) - mu, 0.0);
    return s;
  };
  if (mass(0.0) <= radius) return B;
  double lo = 0.0, hi = B.cwiseAbs().maxCoeff();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > radius ? lo : hi) = mid;
  }
  Matrix out = B;
  for (Eigen::Index c = 0; c < B.size(); ++c) {
    const double v = B(c);
    out(c) = (v < 0 ? -1.0 : 1.0) * std::max(std::abs(v) - hi, 0.0);
  }
  return out;
}

// Unconstrained logistic MLE by Newton's method on a design built from scratch:
// one column per upper-triangular (a <= b) coordinate of the support block.
Matrix newton_oracle(const Problem& p, const IndexSet& S) {
  const int K = static_cast<int>(S.size());
  std::vector<std::pair<int, int>> coords;
  for (int a = 0; a < K; ++a)
    for (int b = a; b < K; ++b) coords.emplace_back(a, b);
  const auto P = static_cast<Eigen::Index>(coords.size());
  Matrix Z(p.omega.size(), P);
  for (int t = 0; t < p.omega.size(); ++t) {
    const auto xi = p.X.column(p.omega[t].i), xj = p.X.column(p.omega[t].j);
    for (Eigen::Index c = 0; c < P; ++c) {
      const int a = S[static_cast<std::size_t>(coords[static_cast<std::size_t>(c)].first)];
      const int b = S[static_cast<std::size_t>(coords[static_cast<std::size_t>(c)].second)];
      Z(t, c) = a == b ? xi(a) * xj(a) : xi(a) * xj(b) + xi(b) * xj(a);
    }
  }
  Vector beta = Vector::Zero(P);
  for (int it = 0; it < 100; ++it) {
    const Vector eta = Z * beta;
    Vector pi(eta.size()), w(eta.size());
    for (Eigen::Index t = 0; t < eta.size(); ++t) {
      pi(t) = 1.0 / (1.0 + std::exp(-eta(t)));
      w(t) = pi(t) * (1 - pi(t));
    }
    const Vector g = Z.transpose() * (p.Y.labels() - pi);
    const Matrix H = Z.transpose() * w.asDiagonal() * Z;
    const Vector step = H.ldlt().solve(g);
    beta += step;
    if (step.norm() < 1e-13) break;
  }
  Matrix block(K, K);
  for (Eigen::Index c = 0; c < P; ++c) {
    const auto [a, b] = coords[static_cast<std::size_t>(c)];
    block(a, b) = block(b, a) = beta(c);
  }
  return block;
}

double neg_loglik(const Problem& p, const ParameterMatrix& theta) { return -log_likelihood(p.Y, p.X, theta, p.omega); }

}  // namespace

TEST_CASE("penalty function") {
  const PenaltySpec spec{2.0, 10};
  CHECK(penalty(0, 0, spec) == 0.0);
  CHECK(penalty(3, 2, spec) == doctest::Approx(2.0 * 6 + 2.0 * 3 * std::log(10 * std::numbers::e / 3)));
  CHECK_THROWS_AS(penalty(3, 4, spec), InputError);
  CHECK_THROWS_AS(penalty(11, 1, spec), InputError);
  CHECK_THROWS_AS(penalty(2, 1, PenaltySpec{0.0, 5}), InputError);
  CHECK(default_penalty_constant(4.0) == doctest::Approx(2.0 / l_constant(4.0)));
  CHECK(projection_radius(3.0) < 3.0);
}

TEST_CASE("l11 projection agrees with a bisection solver") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix B = test::random_symmetric(5, rng, 2.0).dense();
    const double radius = 0.5 + 5.0 * rng.uniform();
    const Matrix P = project_l11_ball(B, radius);
    CHECK((P - bisection_projection(B, radius)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(ParameterMatrix::from_upper_triangle(P).l11_norm() <= radius * (1 + 1e-12));
  }
  const Matrix small = Matrix::Identity(3, 3) * 0.1;
  CHECK(project_l11_ball(small, 1.0) == small);
}

TEST_CASE("rank truncation is the best low-rank approximation") {
  Rng rng(4);
  const Matrix B = test::random_symmetric(6, rng).dense();
  Eigen::SelfAdjointEigenSolver<Matrix> es(B);
  std::vector<double> sq;
  for (int i = 0; i < 6; ++i) sq.push_back(es.eigenvalues()(i) * es.eigenvalues()(i));
  std::sort(sq.begin(), sq.end());
  for (int r = 1; r <= 6; ++r) {
    const Matrix T = truncate_rank(B, r);
    CHECK(ParameterMatrix::from_upper_triangle(T).rank() <= r);
    double dropped = 0.0;
    for (int i = 0; i < 6 - r; ++i) dropped += sq[static_cast<std::size_t>(i)];
    CHECK((B - T).squaredNorm() == doctest::Approx(dropped).epsilon(1e-9));
  }
}

TEST_CASE("convex block fit matches an independent Newton solver") {
  const Problem p = make_problem(4, 2, 1, 30, 300, 77, 4.0);
  const IndexSet S = p.theta_star.support();
  const Matrix oracle = newton_oracle(p, S);
  REQUIRE(oracle.cwiseAbs().sum() < 3.9);
  for (bool newton : {true, false}) {
    FitOptions opts;
    opts.use_newton = newton;
    opts.max_iters = 20000;
    opts.tol = 1e-15;
    const FitResult fit = fit_rank_constrained(p.Y, p.X, p.omega, S, 2, 4.0, opts);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        CHECK(fit.theta_hat(S[a], S[b]) == doctest::Approx(oracle(a, b)).epsilon(1e-5));
  }
}

TEST_CASE("rank-constrained fit is feasible and beats the truth") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Problem p = make_problem(5, 3, 1, 30, 250, seed);
    const FitResult fit = fit_rank_constrained(p.Y, p.X, p.omega, p.theta_star.support(), 1, 4.0);
    CHECK(fit.theta_hat.rank() <= 1);
    CHECK(fit.theta_hat.l11_norm() < 4.0);
    CHECK(fit.neg_loglik <= neg_loglik(p, p.theta_star) + 1e-8);
    CHECK(fit.neg_loglik == doctest::Approx(neg_loglik(p, fit.theta_hat)));
  }
  const Problem p = make_problem(5, 3, 1, 30, 250, 1);
  CHECK_THROWS_AS(fit_rank_constrained(p.Y, p.X, p.omega, {}, 1, 4.0), InputError);
  CHECK_THROWS_AS(fit_rank_constrained(p.Y, p.X, p.omega, {0, 1}, 3, 4.0), InputError);
  CHECK_THROWS_AS(fit_rank_constrained(p.Y, p.X, p.omega, {1, 0}, 1, 4.0), InputError);
}

TEST_CASE("penalized MLE is the minimum over all per-support fits") {
  const Problem p = make_problem(5, 2, 1, 30, 300, 12);
  const PenaltySpec spec{1.0, 5};
  const FitResult best = fit_penalized_mle(p.Y, p.X, p.omega, spec, 4.0, 2, 2);
  double brute = neg_loglik(p, ParameterMatrix(5));
  for (int K = 1; K <= 2; ++K)
    for_each_combination(5, K, [&](const IndexSet& S) {
      for (int R = 1; R <= K; ++R) {
        const FitResult f = fit_rank_constrained(p.Y, p.X, p.omega, S, R, 4.0);
        const int k_act = static_cast<int>(f.theta_hat.support().size());
        const double pen = k_act == 0 ? 0.0 : penalty(k_act, std::max(f.theta_hat.rank(), 1), spec);
        brute = std::min(brute, f.neg_loglik + pen);
      }
    });
  CHECK(best.objective == doctest::Approx(brute).epsilon(1e-9));
  CHECK(best.objective == doctest::Approx(best.neg_loglik + best.penalty_value));
  CHECK(best.support == p.theta_star.support());
  CHECK(best.model_count_searched == 5 + 10 * 2);
  CHECK(penalized_model_count(5, 2, 2) == 25);

  FitOptions tiny;
  tiny.model_budget = 10;
  CHECK_THROWS_AS(fit_penalized_mle(p.Y, p.X, p.omega, spec, 4.0, 2, 2, tiny), BudgetExceeded);
  CHECK_THROWS_AS(fit_penalized_mle(p.Y, p.X, p.omega, PenaltySpec{1.0, 6}, 4.0, 2, 2), InputError);
}

TEST_CASE("penalized MLE: huge penalty selects the empty model; threads do not change the result") {
  const Problem p = make_problem(5, 2, 1, 30, 200, 5);
  const FitResult empty = fit_penalized_mle(p.Y, p.X, p.omega, PenaltySpec{1e6, 5}, 4.0, 2, 1);
  CHECK(empty.support.empty());
  CHECK(empty.theta_hat.frobenius_norm_sq() == 0.0);
  FitOptions one, four;
  four.threads = 4;
  const FitResult a = fit_penalized_mle(p.Y, p.X, p.omega, PenaltySpec{1.0, 5}, 4.0, 3, 2, one);
  const FitResult b = fit_penalized_mle(p.Y, p.X, p.omega, PenaltySpec{1.0, 5}, 4.0, 3, 2, four);
  CHECK(a.objective == b.objective);
  CHECK(a.theta_hat.dense() == b.theta_hat.dense());
}

TEST_CASE("equivalence keys that separate every support change nothing") {
  const Problem p = make_problem(5, 2, 1, 30, 200, 6);
  FitOptions keyed;
  keyed.equivalence_key = [](const IndexSet& S) {
    std::uint64_t h = 0;
    for (int a : S) h = h * 31 + static_cast<std::uint64_t>(a) + 1;
    return h;
  };
  const FitResult a = fit_penalized_mle(p.Y, p.X, p.omega, PenaltySpec{1.0, 5}, 4.0, 3, 1);
  const FitResult b = fit_penalized_mle(p.Y, p.X, p.omega, PenaltySpec{1.0, 5}, 4.0, 3, 1, keyed);
  CHECK(a.objective == b.objective);
  CHECK(a.theta_hat.dense() == b.theta_hat.dense());
}

TEST_CASE("lasso: KKT, monotone objective, zero solution for large lambda") {
  const Problem p = make_problem(6, 2, 1, 30, 300, 9);
  const double lambda = default_lasso_lambda(6);
  CHECK(lambda == doctest::Approx(std::sqrt(std::log(6.0))));
  const FitResult fit = fit_lasso(p.Y, p.X, p.omega, lambda);
  CHECK(fit.kkt_residual <= 1e-6);
  CHECK(lasso_kkt_residual(p.Y, p.X, p.omega, fit.theta_hat, lambda) <= 1e-6);
  for (std::size_t i = 1; i < fit.objective_history.size(); ++i)
    CHECK(fit.objective_history[i] <= fit.objective_history[i - 1] + 1e-12);
  CHECK(fit.objective == doctest::Approx(neg_loglik(p, fit.theta_hat) + lambda * fit.theta_hat.l11_norm()));

  // zero is optimal once lambda dominates the gradient at zero
  const Matrix g0 = gradient(p.Y, p.X, ParameterMatrix(6), p.omega);
  const FitResult zero = fit_lasso(p.Y, p.X, p.omega, 1.01 * g0.cwiseAbs().maxCoeff());
  CHECK(zero.theta_hat.frobenius_norm_sq() == 0.0);
  CHECK(lasso_kkt_residual(p.Y, p.X, p.omega, ParameterMatrix(6), 0.99 * g0.cwiseAbs().maxCoeff()) > 0.0);
}

TEST_CASE("lasso error on a single pair stays under the frozen envelope") {
  // C5 measured once on this instance and frozen
  constexpr double C5 = 0.67;
  const FeatureMatrix X = rademacher_features(2, 142, derive_seed(0, 1));
  const ObservationMask omega = ObservationMask::random_pairs(142, 10000, derive_seed(0, 2));
  ParameterMatrix theta(2);
  theta.set(0, 1, 0.3);
  const EdgeObservations Y = sample_observations(edge_probabilities(affinity(X, theta, omega)), derive_seed(0, 3));
  const FitResult fit = fit_lasso(Y, X, omega, default_lasso_lambda(2));
  const double delta = block_isometry_constant(X, omega, 2).delta;
  REQUIRE(delta < 1.0);
  const double envelope = C5 / (l_constant(1.0) * (1.0 - delta)) * 4.0 / 10000 * std::log(2.0);
  CHECK((fit.theta_hat - theta).frobenius_norm_sq() <= envelope);
  CHECK(fit.kkt_residual <= 1e-6);
}

TEST_CASE("predicted probabilities are the sigmoid of the affinities") {
  const Problem p = make_problem(4, 2, 1, 12, 40, 10);
  const Prediction pr = predict_probabilities(p.theta_star, p.X, p.omega);
  for (int t = 0; t < p.omega.size(); ++t) {
    CHECK(pr.affinities(t) == doctest::Approx(test::naive_affinity(p.X, p.theta_star, p.omega[t].i, p.omega[t].j)));
    CHECK(pr.probabilities(t) == doctest::Approx(sigmoid(pr.affinities(t))));
  }
}
