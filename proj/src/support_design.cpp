#include "mlr/support_design.hpp"

#include <cmath>
#include <numbers>

#include "mlr/error.hpp"
#include "mlr/likelihood.hpp"

namespace mlr {

SupportDesign::SupportDesign(const FeatureMatrix& X, const ObservationMask& omega, const EdgeObservations& Y,
                             IndexSet support)
    : support_(std::move(support)), fractional_(Y.is_fractional()) {
  require_dims(X.vertices() == omega.vertices(), "mask vertex count differs from feature matrix");
  require_dims(Y.size() == omega.size(), "label count differs from mask size");
  require(!support_.empty(), "support must be nonempty");
  for (int a : support_) require(a >= 0 && a < X.dim(), "support index out of range");

  const int K = block_size();
  const int p = K * (K + 1) / 2;
  weights_.resize(p);
  for (int a = 0, c = 0; a < K; ++a)
    for (int b = a; b < K; ++b, ++c) weights_(c) = a == b ? 1.0 : 2.0;

  Matrix rows(omega.size(), p);
  Vector labels(omega.size());
  int active = 0;
  Vector u(K), v(K), row(p);
  for (int t = 0; t < omega.size(); ++t) {
    const auto& pr = omega[t];
    for (int a = 0; a < K; ++a) {
      u(a) = X.entries()(support_[static_cast<std::size_t>(a)], pr.i);
      v(a) = X.entries()(support_[static_cast<std::size_t>(a)], pr.j);
    }
    for (int a = 0, c = 0; a < K; ++a)
      for (int b = a; b < K; ++b, ++c) row(c) = a == b ? u(a) * v(a) : u(a) * v(b) + u(b) * v(a);
    if (row.isZero(0.0)) {
      ++inactive_pairs_;
      continue;
    }
    rows.row(active) = row.transpose();
    labels(active) = Y[t];
    ++active;
  }
  design_ = rows.topRows(active);
  labels_ = labels.head(active);
}

namespace {

inline double pair_loss(double a, double y, bool fractional) {
  if (fractional) return softplus(a) - y * a;
  return y == 1.0 ? softplus(-a) : softplus(a);
}

}  // namespace

double SupportDesign::objective(const Vector& theta) const {
  const Vector a = design_ * theta;
  double f = inactive_pairs_ * std::numbers::ln2;
  for (Eigen::Index t = 0; t < a.size(); ++t) f += pair_loss(a(t), labels_(t), fractional_);
  return f;
}

double SupportDesign::objective_and_gradient(const Vector& theta, Vector& grad) const {
  const Vector a = design_ * theta;
  Vector resid(a.size());
  double f = inactive_pairs_ * std::numbers::ln2;
  for (Eigen::Index t = 0; t < a.size(); ++t) {
    f += pair_loss(a(t), labels_(t), fractional_);
    resid(t) = sigmoid(a(t)) - labels_(t);
  }
  grad.noalias() = design_.transpose() * resid;
  return f;
}

Matrix SupportDesign::hessian(const Vector& theta) const {
  const Vector a = design_ * theta;
  Vector w(a.size());
  for (Eigen::Index t = 0; t < a.size(); ++t) {
    const double s = sigmoid(a(t));
    w(t) = s * (1.0 - s);
  }
  return design_.transpose() * w.asDiagonal() * design_;
}

Matrix SupportDesign::to_block(const Vector& theta) const {
  const int K = block_size();
  Matrix B(K, K);
  for (int a = 0, c = 0; a < K; ++a)
    for (int b = a; b < K; ++b, ++c) B(a, b) = B(b, a) = theta(c);
  return B;
}

Vector SupportDesign::from_block(const Matrix& block) const {
  const int K = block_size();
  Vector theta(packed_size());
  for (int a = 0, c = 0; a < K; ++a)
    for (int b = a; b < K; ++b, ++c) theta(c) = block(a, b);
  return theta;
}

ParameterMatrix SupportDesign::embed(const Vector& theta, int d) const {
  ParameterMatrix out(d);
  const int K = block_size();
  for (int a = 0, c = 0; a < K; ++a)
    for (int b = a; b < K; ++b, ++c)
      if (theta(c) != 0.0) out.set(support_[static_cast<std::size_t>(a)], support_[static_cast<std::size_t>(b)], theta(c));
  return out;
}

double SupportDesign::packed_lipschitz() const {
  if (design_.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(design_.transpose() * design_, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() / 4.0;
}

double SupportDesign::frobenius_lipschitz() const {
  if (design_.rows() == 0) return 0.0;
  // packed theta = W^{-1/2} phi with phi orthonormal coordinates in the Frobenius metric
  const Vector scale = weights_.cwiseSqrt().cwiseInverse();
  const Matrix Zs = design_ * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Matrix> es(Zs.transpose() * Zs, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff() / 4.0;
}

}  // namespace mlr
