#include "mlr/likelihood.hpp"

#include <algorithm>
#include <cmath>

#include "mlr/error.hpp"

namespace mlr {

namespace {

void check_shapes(const EdgeObservations& Y, const FeatureMatrix& X, const ParameterMatrix& theta,
                  const ObservationMask& omega) {
  require_dims(X.dim() == theta.dim(), "feature and parameter dimensions differ");
  require_dims(X.vertices() == omega.vertices(), "mask vertex count differs from feature matrix");
  require_dims(Y.size() == omega.size(), "label count differs from mask size");
}

// Accumulates sum_t w_t (X_j X_i^T + X_i X_j^T) / 2 as (X W X^T + X W^T X^T) / 2
// with W the n x n matrix holding w_t at (i,j).
Matrix symmetric_outer_sum(const FeatureMatrix& X, const ObservationMask& omega, const Vector& w) {
  const int n = X.vertices();
  Matrix W = Matrix::Zero(n, n);
  for (int t = 0; t < omega.size(); ++t) W(omega[t].i, omega[t].j) = w(t);
  const Matrix XW = X.entries() * W;
  const Matrix half = XW * X.entries().transpose();
  return 0.5 * (half + half.transpose());
}

}  // namespace

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double log_likelihood(const EdgeObservations& Y, const FeatureMatrix& X, const ParameterMatrix& theta,
                      const ObservationMask& omega) {
  check_shapes(Y, X, theta, omega);
  const AffinityMatrix sigma = affinity(X, theta, omega);
  double total = 0.0;
  if (!Y.is_fractional()) {
    for (int t = 0; t < omega.size(); ++t) {
      const double s = 2.0 * Y[t] - 1.0;
      total -= softplus(-s * sigma.values(t));
    }
  } else {
    for (int t = 0; t < omega.size(); ++t) total += Y[t] * sigma.values(t) - softplus(sigma.values(t));
  }
  return total;
}

LikelihoodReport evaluate(const EdgeObservations& Y, const FeatureMatrix& X, const ParameterMatrix& theta,
                          const ObservationMask& omega) {
  check_shapes(Y, X, theta, omega);
  LikelihoodReport r;
  r.loglik = log_likelihood(Y, X, theta, omega);
  r.per_pair_probs = edge_probabilities(affinity(X, theta, omega));
  r.gradient = symmetric_outer_sum(X, omega, Y.labels() - r.per_pair_probs);
  return r;
}

Matrix gradient(const EdgeObservations& Y, const FeatureMatrix& X, const ParameterMatrix& theta,
                const ObservationMask& omega) {
  check_shapes(Y, X, theta, omega);
  const Vector pi = edge_probabilities(affinity(X, theta, omega));
  return symmetric_outer_sum(X, omega, Y.labels() - pi);
}

double bernoulli_kl(double p, double q) {
  double kl = 0.0;
  if (p > 0.0) kl += p * (std::log(p) - std::log(q));
  if (p < 1.0) kl += (1.0 - p) * (std::log1p(-p) - std::log1p(-q));
  return std::max(kl, 0.0);
}

double kl_divergence(const ParameterMatrix& theta_star, const ParameterMatrix& theta, const FeatureMatrix& X,
                     const ObservationMask& omega) {
  const AffinityMatrix a_star = affinity(X, theta_star, omega);
  const AffinityMatrix a = affinity(X, theta, omega);
  double total = 0.0;
  for (int t = 0; t < omega.size(); ++t) {
    // KL(Ber(sigma(u)) || Ber(sigma(v))) = softplus(v) - softplus(u) - sigma(u) (v - u)
    const double u = a_star.values(t);
    const double v = a.values(t);
    const double term = softplus(v) - softplus(u) - sigmoid(u) * (v - u);
    total += std::max(term, 0.0);
  }
  return total;
}

double masked_quadratic_norm(const FeatureMatrix& X, const ParameterMatrix& B, const ObservationMask& omega) {
  return affinity(X, B, omega).values.squaredNorm();
}

double l_constant(double M) {
  require(M >= 0.0, "M must be nonnegative");
  const double s = sigmoid(M);
  return s * (1.0 - s);
}

SandwichCheck taylor_sandwich_check(const ParameterMatrix& theta_star, const ParameterMatrix& theta,
                                    const FeatureMatrix& X, const ObservationMask& omega, double M) {
  SandwichCheck c;
  const AffinityMatrix a_star = affinity(X, theta_star, omega);
  const AffinityMatrix a = affinity(X, theta, omega);
  c.max_abs_affinity = omega.size() == 0 ? 0.0 : std::max(a_star.values.cwiseAbs().maxCoeff(), a.values.cwiseAbs().maxCoeff());
  c.assumption_holds = c.max_abs_affinity < M || (c.max_abs_affinity == 0.0 && M == 0.0);
  c.kl = kl_divergence(theta_star, theta, X, omega);
  const double norm_sq = (a_star.values - a.values).squaredNorm();
  c.lower = 0.5 * l_constant(M) * norm_sq;
  c.upper = norm_sq / 8.0;
  c.lower_ok = c.lower <= c.kl;
  c.upper_ok = c.kl <= c.upper;
  return c;
}

NoiseGradient noise_gradient(const EdgeObservations& Y, const FeatureMatrix& X, const ParameterMatrix& theta_star,
                             const ObservationMask& omega) {
  check_shapes(Y, X, theta_star, omega);
  NoiseGradient out;
  const Vector pi = edge_probabilities(affinity(X, theta_star, omega));
  out.noise.n = omega.vertices();
  out.noise.residuals = Y.labels() - pi;
  out.noise.upper = Matrix::Zero(omega.vertices(), omega.vertices());
  for (int t = 0; t < omega.size(); ++t) out.noise.upper(omega[t].i, omega[t].j) = out.noise.residuals(t);
  out.grad_zeta = symmetric_outer_sum(X, omega, out.noise.residuals);
  return out;
}

double noise_inner(const NoiseMatrix& noise, const FeatureMatrix& X, const ParameterMatrix& B,
                   const ObservationMask& omega) {
  require_dims(noise.residuals.size() == omega.size(), "noise matrix does not match the mask");
  return noise.residuals.dot(affinity(X, B, omega).values);
}

}  // namespace mlr
