#pragma once

#include "mlr/core_model.hpp"
#include "mlr/rng.hpp"

namespace mlr::test {

inline FeatureMatrix gaussian_features(int d, int n, Rng& rng, double scale = 1.0) {
  Matrix X(d, n);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < d; ++a) X(a, i) = scale * rng.normal();
  return FeatureMatrix(X);
}

inline ParameterMatrix random_symmetric(int d, Rng& rng, double scale = 1.0) {
  ParameterMatrix p(d);
  for (int a = 0; a < d; ++a)
    for (int b = a; b < d; ++b) p.set(a, b, scale * rng.normal());
  return p;
}

/// Scales p so that ||p||_{1,1} = target.
inline ParameterMatrix with_l11(ParameterMatrix p, double target) {
  const double l = p.l11_norm();
  if (l > 0.0) p *= target / l;
  return p;
}

inline EdgeObservations random_labels(int N, Rng& rng) {
  Vector y(N);
  for (int t = 0; t < N; ++t) y(t) = rng.uniform() < 0.5 ? 1.0 : 0.0;
  return EdgeObservations::binary(y);
}

/// X_i^T Theta X_j by explicit loops.
inline double naive_affinity(const FeatureMatrix& X, const ParameterMatrix& theta, int i, int j) {
  double s = 0.0;
  for (int a = 0; a < X.dim(); ++a)
    for (int b = 0; b < X.dim(); ++b) s += X.entries()(a, i) * theta(a, b) * X.entries()(b, j);
  return s;
}

}  // namespace mlr::test
