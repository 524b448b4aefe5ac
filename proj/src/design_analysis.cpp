#include "mlr/design_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mlr/error.hpp"
#include "mlr/rng.hpp"

namespace mlr {

namespace {

struct Extremes {
  double lo = 0.0;
  double hi = 0.0;
};

Extremes gram_extremes(const Matrix& cols) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(cols.transpose() * cols, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

double deviation(const Extremes& e, double scale) { return std::max(1.0 - e.lo / scale, e.hi / scale - 1.0); }

// Columns of the map from s-block symmetric matrices (orthonormal basis
// E_aa, (E_ab + E_ba)/sqrt2) to the affinities over the mask.
Matrix symmetric_block_map(const FeatureMatrix& X, const ObservationMask& omega, const IndexSet& S) {
  const int K = static_cast<int>(S.size());
  Matrix out(omega.size(), K * (K + 1) / 2);
  const Matrix& E = X.entries();
  for (int t = 0; t < omega.size(); ++t) {
    const int i = omega[t].i, j = omega[t].j;
    for (int a = 0, c = 0; a < K; ++a)
      for (int b = a; b < K; ++b, ++c) {
        const int sa = S[static_cast<std::size_t>(a)], sb = S[static_cast<std::size_t>(b)];
        out(t, c) = a == b ? E(sa, i) * E(sa, j) : (E(sa, i) * E(sb, j) + E(sb, i) * E(sa, j)) / std::numbers::sqrt2;
      }
  }
  return out;
}

// The same map read off a generic N x d^2 matrix whose columns are vec-indexed.
Matrix symmetric_block_columns(const Matrix& A, int d, const IndexSet& S) {
  const int K = static_cast<int>(S.size());
  Matrix out(A.rows(), K * (K + 1) / 2);
  for (int a = 0, c = 0; a < K; ++a)
    for (int b = a; b < K; ++b, ++c) {
      const int sa = S[static_cast<std::size_t>(a)], sb = S[static_cast<std::size_t>(b)];
      if (a == b)
        out.col(c) = A.col(sa + sa * d);
      else
        out.col(c) = (A.col(sa + sb * d) + A.col(sb + sa * d)) / std::numbers::sqrt2;
    }
  return out;
}

void check_exact_budget(int p, int s, const IsometryOptions& opts) {
  const double count = binomial(p, s);
  if (count > opts.exact_budget) throw BudgetExceeded("exact isometry support count", count, opts.exact_budget);
}

}  // namespace

DesignRows build_design_rows(const FeatureMatrix& X, const ObservationMask& omega) {
  require_dims(X.vertices() == omega.vertices(), "mask vertex count differs from feature matrix");
  const int d = X.dim();
  DesignRows D{d, Matrix(omega.size(), d * d)};
  for (int t = 0; t < omega.size(); ++t) {
    const auto xi = X.column(omega[t].i);
    const auto xj = X.column(omega[t].j);
    for (int b = 0; b < d; ++b)
      for (int a = 0; a < d; ++a) D.rows(t, a + b * d) = xj(a) * xi(b);
  }
  return D;
}

IsometryReport block_isometry_constant(const FeatureMatrix& X, const ObservationMask& omega, int s, IsometryMode mode,
                                       const IsometryOptions& opts) {
  require_dims(X.vertices() == omega.vertices(), "mask vertex count differs from feature matrix");
  require(s >= 1 && s <= X.dim(), "block size s must lie in [1, d]");
  require(omega.size() >= 1, "mask must be nonempty");
  const double N = omega.size();
  IsometryReport rep;
  rep.s = s;
  rep.mode = mode;
  rep.delta = -1.0;
  if (mode == IsometryMode::exact) {
    check_exact_budget(X.dim(), s, opts);
    for_each_combination(X.dim(), s, [&](const IndexSet& S) {
      const Extremes e = gram_extremes(symmetric_block_map(X, omega, S));
      const double dev = deviation(e, N);
      ++rep.supports_checked;
      if (dev > rep.delta) {
        rep.delta = dev;
        rep.lambda_min = e.lo / N;
        rep.lambda_max = e.hi / N;
        rep.worst_support = S;
      }
    });
    return rep;
  }
  Rng rng(opts.seed);
  for (int m = 0; m < opts.mc_supports; ++m) {
    const IndexSet S = random_subset(X.dim(), s, rng);
    const Matrix map = symmetric_block_map(X, omega, S);
    ++rep.supports_checked;
    for (int q = 0; q < opts.mc_directions; ++q) {
      Vector v(map.cols());
      for (Eigen::Index c = 0; c < v.size(); ++c) v(c) = rng.normal();
      const double ratio = (map * v).squaredNorm() / (N * v.squaredNorm());
      const double dev = std::abs(ratio - 1.0);
      if (dev > rep.delta) {
        rep.delta = dev;
        rep.lambda_min = std::min(ratio, 1.0);
        rep.lambda_max = std::max(ratio, 1.0);
        rep.worst_support = S;
      }
    }
  }
  return rep;
}

double rip_constant(const Matrix& A, int s, IsometryMode mode, const IsometryOptions& opts) {
  const int p = static_cast<int>(A.cols());
  require(s >= 1 && s <= p, "sparsity s must lie in [1, p]");
  const double N = static_cast<double>(A.rows());
  double delta = -1.0;
  if (mode == IsometryMode::exact) {
    check_exact_budget(p, s, opts);
    for_each_combination(p, s, [&](const IndexSet& S) {
      Matrix cols(A.rows(), s);
      for (int c = 0; c < s; ++c) cols.col(c) = A.col(S[static_cast<std::size_t>(c)]);
      delta = std::max(delta, deviation(gram_extremes(cols), N));
    });
    return delta;
  }
  Rng rng(opts.seed);
  for (int m = 0; m < opts.mc_supports; ++m) {
    const IndexSet S = random_subset(p, s, rng);
    for (int q = 0; q < opts.mc_directions; ++q) {
      Vector v = Vector::Zero(p);
      for (int c : S) v(c) = rng.normal();
      delta = std::max(delta, std::abs((A * v).squaredNorm() / (N * v.squaredNorm()) - 1.0));
    }
  }
  return delta;
}

double block_rip_constant(const Matrix& A, int s, IsometryMode mode, const IsometryOptions& opts) {
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(A.cols()))));
  require(d * d == A.cols(), "block RIP needs a square number of columns");
  require(s >= 1 && s <= d, "block size s must lie in [1, d]");
  const double N = static_cast<double>(A.rows());
  double delta = -1.0;
  if (mode == IsometryMode::exact) {
    check_exact_budget(d, s, opts);
    for_each_combination(d, s, [&](const IndexSet& S) {
      delta = std::max(delta, deviation(gram_extremes(symmetric_block_columns(A, d, S)), N));
    });
    return delta;
  }
  Rng rng(opts.seed);
  for (int m = 0; m < opts.mc_supports; ++m) {
    const Matrix cols = symmetric_block_columns(A, d, random_subset(d, s, rng));
    for (int q = 0; q < opts.mc_directions; ++q) {
      Vector v(cols.cols());
      for (Eigen::Index c = 0; c < v.size(); ++c) v(c) = rng.normal();
      delta = std::max(delta, std::abs((cols * v).squaredNorm() / (N * v.squaredNorm()) - 1.0));
    }
  }
  return delta;
}

AffinityBoundCheck check_affinity_bound(const FeatureMatrix& X, const ObservationMask& omega, double M) {
  require(M > 0.0, "M must be positive");
  require_dims(X.vertices() == omega.vertices(), "mask vertex count differs from feature matrix");
  AffinityBoundCheck c;
  const Vector col_max = X.entries().cwiseAbs().colwise().maxCoeff().transpose();
  for (const auto& p : omega.pairs()) c.witness = std::max(c.witness, col_max(p.i) * col_max(p.j));
  c.guaranteed = c.witness <= 1.0;
  return c;
}

double max_abs_affinity(const FeatureMatrix& X, const ParameterMatrix& theta, const ObservationMask& omega) {
  const AffinityMatrix a = affinity(X, theta, omega);
  return a.values.size() == 0 ? 0.0 : a.values.cwiseAbs().maxCoeff();
}

}  // namespace mlr
