#pragma once

#include "mlr/core_model.hpp"

namespace mlr {

/// Variance proxy of a centred Bernoulli variable. Not the sigmoid.
inline constexpr double BERNOULLI_SUBGAUSSIAN_VAR = 0.25;

/// log(1 + e^x) without overflow.
double softplus(double x);

struct LikelihoodReport {
  double loglik = 0.0;
  Matrix gradient;       // symmetric d x d
  Vector per_pair_probs;  // sigma(X_i^T Theta X_j) over the mask
};

/// l_Y(Theta) = -sum_t softplus(-s_t * Sigma_t), s_t = 2 Y_t - 1.
/// For fractional labels the Bernoulli form sum Y log pi + (1-Y) log(1-pi) is used,
/// which coincides with the above on binary labels.
double log_likelihood(const EdgeObservations& Y, const FeatureMatrix& X, const ParameterMatrix& theta,
                      const ObservationMask& omega);

/// Gradient of l_Y over symmetric matrices:
///   sum_t (Y_t - pi_t) (X_j X_i^T + X_i X_j^T) / 2.
Matrix gradient(const EdgeObservations& Y, const FeatureMatrix& X, const ParameterMatrix& theta,
                const ObservationMask& omega);

LikelihoodReport evaluate(const EdgeObservations& Y, const FeatureMatrix& X, const ParameterMatrix& theta,
                          const ObservationMask& omega);

/// Bernoulli KL(p || q) for scalars in (0,1).
double bernoulli_kl(double p, double q);

/// sum over the mask of KL(pi_ij(theta_star) || pi_ij(theta)).
double kl_divergence(const ParameterMatrix& theta_star, const ParameterMatrix& theta, const FeatureMatrix& X,
                     const ObservationMask& omega);

/// ||X^T B X||^2_{F,Omega} = sum over the mask of (X_i^T B X_j)^2.
double masked_quadratic_norm(const FeatureMatrix& X, const ParameterMatrix& B, const ObservationMask& omega);

/// Curvature floor sigma(M)(1 - sigma(M)).
double l_constant(double M);

struct SandwichCheck {
  bool assumption_holds = true;  // max |affinity| < M for both parameters
  double max_abs_affinity = 0.0;
  double kl = 0.0;               // l(theta_star) - l(theta), expected log-likelihoods
  double lower = 0.0;            // L(M)/2 * ||X^T (theta_star - theta) X||^2_{F,Omega}
  double upper = 0.0;            // 1/8 * same norm
  bool lower_ok = false;
  bool upper_ok = false;
  double lower_slack() const { return kl - lower; }
  double upper_slack() const { return upper - kl; }
};

/// Evaluates L/2 ||.||^2 <= KL <= 1/8 ||.||^2. When the affinity bound fails,
/// assumption_holds is false and the flags describe the raw comparison only.
SandwichCheck taylor_sandwich_check(const ParameterMatrix& theta_star, const ParameterMatrix& theta,
                                    const FeatureMatrix& X, const ObservationMask& omega, double M);

/// E_Omega: residuals Y - pi(theta_star) on the mask, zero elsewhere (n x n, upper triangle).
struct NoiseMatrix {
  int n = 0;
  Vector residuals;  // parallel to the mask pairs
  Matrix upper;      // n x n, entry (i,j) with i < j
};

struct NoiseGradient {
  NoiseMatrix noise;
  Matrix grad_zeta;  // X E_Omega X^T, symmetrised
};

NoiseGradient noise_gradient(const EdgeObservations& Y, const FeatureMatrix& X, const ParameterMatrix& theta_star,
                             const ObservationMask& omega);

/// <<E_Omega, X^T B X>>_{F,Omega} = sum_t eps_t * X_i^T B X_j.
double noise_inner(const NoiseMatrix& noise, const FeatureMatrix& X, const ParameterMatrix& B,
                   const ObservationMask& omega);

}  // namespace mlr
