#pragma once

#include "mlr/core_model.hpp"

namespace mlr {

/// Logistic-regression view of the model restricted to a block support S.
///
/// A symmetric K x K block B is packed row-wise over its upper triangle into
/// theta (length K(K+1)/2). Row t of `design` holds the coefficients with
/// Sigma_t = design.row(t) . theta, so off-diagonal columns carry
/// X_i[a] X_j[b] + X_i[b] X_j[a]. Pairs whose row vanishes on S contribute
/// the constant log 2 to the negative log-likelihood and are dropped.
class SupportDesign {
 public:
  SupportDesign(const FeatureMatrix& X, const ObservationMask& omega, const EdgeObservations& Y, IndexSet support);

  int block_size() const { return static_cast<int>(support_.size()); }
  int packed_size() const { return static_cast<int>(design_.cols()); }
  const IndexSet& support() const { return support_; }
  const Matrix& design() const { return design_; }
  const Vector& labels() const { return labels_; }
  /// Frobenius weight of each packed coordinate: 1 on the diagonal, 2 off it.
  const Vector& weights() const { return weights_; }

  /// Negative log-likelihood -l_Y at the packed parameter, over the whole mask.
  double objective(const Vector& theta) const;
  /// Objective and d(objective)/d(theta) in packed coordinates.
  double objective_and_gradient(const Vector& theta, Vector& grad) const;
  /// Z^T diag(pi (1 - pi)) Z.
  Matrix hessian(const Vector& theta) const;

  Matrix to_block(const Vector& theta) const;
  Vector from_block(const Matrix& block) const;
  ParameterMatrix embed(const Vector& theta, int d) const;

  /// Largest eigenvalue of Z^T Z / 4 in packed coordinates.
  double packed_lipschitz() const;
  /// Same bound measured in the Frobenius metric on blocks.
  double frobenius_lipschitz() const;

 private:
  IndexSet support_;
  Matrix design_;
  Vector labels_;
  Vector weights_;
  bool fractional_ = false;
  int inactive_pairs_ = 0;
};

}  // namespace mlr
