#pragma once

#include <cstdint>

#include "mlr/core_model.hpp"
#include "mlr/likelihood.hpp"

namespace mlr {

/// D_Omega: N x d^2, row t = vec(X_j X_i^T) for pair t = (i, j).
/// vec is column-major: vec(A)[a + b d] = A(a, b).
struct DesignRows {
  int d = 0;
  Matrix rows;
};

DesignRows build_design_rows(const FeatureMatrix& X, const ObservationMask& omega);

enum class IsometryMode { exact, monte_carlo };

struct IsometryOptions {
  double exact_budget = 1e5;       // max number of supports enumerated
  int mc_supports = 200;           // monte carlo: supports sampled
  int mc_directions = 20;          // monte carlo: random B per support
  std::uint64_t seed = 0;
};

struct IsometryReport {
  int s = 0;
  double delta = 0.0;
  double lambda_min = 0.0;   // over N, at the worst support
  double lambda_max = 0.0;
  IsometryMode mode = IsometryMode::exact;
  std::uint64_t supports_checked = 0;
  IndexSet worst_support;
  /// delta >= 1: the lower isometry bound is vacuous on this design.
  bool degenerate() const { return delta >= 1.0; }
};

/// Block isometry constant Delta_{Omega,s}(X): the worst deviation over
/// s-block-sparse symmetric B of ||X^T B X||^2_{F,Omega} / (N ||B||_F^2) from 1.
/// Monte Carlo mode returns a lower bound.
IsometryReport block_isometry_constant(const FeatureMatrix& X, const ObservationMask& omega, int s,
                                       IsometryMode mode = IsometryMode::exact, const IsometryOptions& opts = {});

/// delta_s(A) for s-sparse vectors, normalised by the row count.
double rip_constant(const Matrix& A, int s, IsometryMode mode = IsometryMode::exact, const IsometryOptions& opts = {});

/// delta_{B,s}(A) for A with d^2 columns: restriction to v = vec(B), B symmetric
/// with ||B||_{0,0} <= s.
double block_rip_constant(const Matrix& A, int s, IsometryMode mode = IsometryMode::exact,
                          const IsometryOptions& opts = {});

struct AffinityBoundCheck {
  bool guaranteed = false;  // max ||X_j X_i^T||_inf <= 1
  double witness = 0.0;     // that maximum
};

AffinityBoundCheck check_affinity_bound(const FeatureMatrix& X, const ObservationMask& omega, double M);

/// Per-parameter check: max over the mask of |X_i^T Theta X_j|.
double max_abs_affinity(const FeatureMatrix& X, const ParameterMatrix& theta, const ObservationMask& omega);

}  // namespace mlr
