#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mlr/core_model.hpp"

namespace mlr {

/// g(R, K) = c K R + c K log(d e / K).
struct PenaltySpec {
  double c = 1.0;
  int d = 1;
};

/// 2 / L(M): satisfies c >= c1 / L(M) with c1 = 2.
double default_penalty_constant(double M);

double penalty(int K, int R, const PenaltySpec& spec);

struct FitOptions {
  int max_iters = 2000;
  double tol = 1e-10;          // relative objective decrease
  int n_restarts = 5;
  std::uint64_t seed = 0;
  double model_budget = 1e6;   // penalized MLE: number of (support, rank) fits
  int threads = 1;
  double lasso_tol = 1e-9;     // lasso: relative objective decrease
  double kkt_tol = 1e-7;       // lasso: KKT residual relative to lambda
  bool lasso_polish = true;    // lasso: active-set Newton refinement after FISTA
  bool use_newton = true;      // rank-constrained, convex case: try Newton first
  bool zero_start = true;      // rank-constrained: first restart starts at 0
  /// Penalized MLE: supports mapped to the same key must pose the same
  /// fitting problem up to relabeling; each key is then fitted once.
  std::function<std::uint64_t(const IndexSet&)> equivalence_key;
};

struct FitResult {
  ParameterMatrix theta_hat{1};
  double objective = 0.0;       // -l_Y(theta_hat) + penalty
  double neg_loglik = 0.0;
  double penalty_value = 0.0;
  IndexSet support;
  int rank = 0;
  int iterations = 0;
  bool converged = false;
  std::uint64_t model_count_searched = 0;
  std::vector<double> objective_history;  // lasso only
  double kkt_residual = 0.0;               // lasso only, in units of lambda
};

/// l11 radius used when projecting: M (1 - 1e-9).
double projection_radius(double M);

/// Euclidean projection of a symmetric matrix onto {||B||_{1,1} <= radius}.
Matrix project_l11_ball(const Matrix& B, double radius);

/// Keeps the r eigen-components of largest |eigenvalue|.
Matrix truncate_rank(const Matrix& B, int r);

/// Rank-constrained MLE over symmetric matrices supported on support x support,
/// rank <= r, l11 <= projection_radius(M). Projected gradient with restarts;
/// when r >= |support| the problem is convex and a Newton solve is tried first.
FitResult fit_rank_constrained(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                               const IndexSet& support, int r, double M, const FitOptions& opts = {});

/// Number of (support, rank) fits enumerated by fit_penalized_mle.
double penalized_model_count(int d, int k_max, int r_max);

/// Exhaustive penalized MLE over all supports with |S| <= k_max and ranks
/// R <= min(|S|, r_max). Ties go to smaller K, then smaller R, then the
/// lexicographically first searched support. Throws BudgetExceeded above
/// opts.model_budget.
FitResult fit_penalized_mle(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                            const PenaltySpec& spec, double M, int k_max, int r_max, const FitOptions& opts = {});

/// lambda = c4 sqrt(log d).
double default_lasso_lambda(int d, double c4 = 1.0);

/// argmin -l_Y(Theta) + lambda ||Theta||_{1,1} over symmetric Theta (monotone FISTA).
FitResult fit_lasso(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega, double lambda,
                    const FitOptions& opts = {});

/// Largest violation of the lasso optimality conditions at theta, divided by lambda.
double lasso_kkt_residual(const EdgeObservations& Y, const FeatureMatrix& X, const ObservationMask& omega,
                          const ParameterMatrix& theta, double lambda);

struct Prediction {
  Vector probabilities;
  Vector affinities;
};

Prediction predict_probabilities(const ParameterMatrix& theta_hat, const FeatureMatrix& X, const ObservationMask& omega);

}  // namespace mlr
