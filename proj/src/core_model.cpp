#include "mlr/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlr/error.hpp"
#include "mlr/rng.hpp"

namespace mlr {

FeatureMatrix::FeatureMatrix(Matrix entries) : entries_(std::move(entries)) {
  require(entries_.rows() >= 1, "feature matrix needs d >= 1");
  require(entries_.cols() >= 2, "feature matrix needs n >= 2");
  require(entries_.allFinite(), "feature matrix has non-finite entries");
}

ObservationMask::ObservationMask(int n, std::vector<VertexPair> pairs, LoopPolicy loops) : n_(n) {
  require(n >= 2, "observation mask needs n >= 2");
  pairs_.reserve(pairs.size());
  for (auto p : pairs) {
    if (p.i > p.j) std::swap(p.i, p.j);
    require(p.i >= 0 && p.j < n,
            "pair (" + std::to_string(p.i) + "," + std::to_string(p.j) + ") out of range for n=" + std::to_string(n));
    if (p.i == p.j) {
      require(loops == LoopPolicy::drop, "loop pair (" + std::to_string(p.i) + "," + std::to_string(p.j) + ") rejected");
      continue;
    }
    pairs_.push_back(p);
  }
  std::sort(pairs_.begin(), pairs_.end());
  const auto dup = std::adjacent_find(pairs_.begin(), pairs_.end());
  require(dup == pairs_.end(),
          dup == pairs_.end() ? std::string{}
                              : "duplicate pair (" + std::to_string(dup->i) + "," + std::to_string(dup->j) + ")");
}

ObservationMask ObservationMask::all_pairs(int n) {
  std::vector<VertexPair> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(std::max(n - 1, 0)) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.push_back({i, j});
  return ObservationMask(n, std::move(pairs));
}

ObservationMask ObservationMask::random_pairs(int n, int count, std::uint64_t seed) {
  const double total = binomial(n, 2);
  require(count >= 1 && count <= total,
          "cannot draw " + std::to_string(count) + " pairs among " + std::to_string(static_cast<long>(total)));
  std::vector<VertexPair> all = ObservationMask::all_pairs(n).pairs();
  Rng rng(seed);
  for (int t = 0; t < count; ++t) {
    const auto j = static_cast<std::size_t>(t) + static_cast<std::size_t>(rng.below(all.size() - static_cast<std::size_t>(t)));
    std::swap(all[static_cast<std::size_t>(t)], all[j]);
  }
  all.resize(static_cast<std::size_t>(count));
  return ObservationMask(n, std::move(all));
}

ParameterMatrix::ParameterMatrix(int d) : entries_(Matrix::Zero(d, d)) {
  require(d >= 1, "parameter dimension must be positive");
}

ParameterMatrix ParameterMatrix::from_upper_triangle(const Matrix& m) {
  require(m.rows() == m.cols(), "parameter matrix must be square");
  ParameterMatrix p(static_cast<int>(m.rows()));
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i <= j; ++i) p.set(i, j, m(i, j));
  return p;
}

void ParameterMatrix::set(int i, int j, double value) {
  require(std::isfinite(value), "parameter entries must be finite");
  entries_(i, j) = value;
  entries_(j, i) = value;
  analytic_rank.reset();
}

IndexSet ParameterMatrix::support() const {
  IndexSet s;
  for (int i = 0; i < entries_.rows(); ++i)
    if ((entries_.row(i).array() != 0.0).any()) s.push_back(i);
  return s;
}

int ParameterMatrix::rank() const {
  if (entries_.isZero(0.0)) return 0;
  // symmetric: singular values are |eigenvalues|
  Eigen::SelfAdjointEigenSolver<Matrix> es(entries_, Eigen::EigenvaluesOnly);
  const Vector sv = es.eigenvalues().cwiseAbs();
  const double cutoff = static_cast<double>(dim()) * sv.maxCoeff() * 0x1.0p-40;
  return static_cast<int>((sv.array() > cutoff).count());
}

double ParameterMatrix::l11_norm() const { return entries_.cwiseAbs().sum(); }

bool ParameterMatrix::in_class(int k, int r, double M) const {
  return l11_norm() < M && static_cast<int>(support().size()) <= k && rank() <= r;
}

ParameterMatrix& ParameterMatrix::operator+=(const ParameterMatrix& other) {
  require_dims(other.dim() == dim(), "parameter dimensions differ");
  entries_ += other.entries_;
  analytic_rank.reset();
  return *this;
}

ParameterMatrix& ParameterMatrix::operator*=(double a) {
  entries_ *= a;
  if (a == 0.0) analytic_rank = 0;
  return *this;
}

ParameterMatrix build_parameter(int d, const UpperEntries& upper, double M, Membership mode) {
  require(M > 0.0, "budget M must be positive");
  ParameterMatrix p(d);
  for (const auto& [ij, v] : upper) {
    const auto [i, j] = ij;
    require(i >= 0 && j >= 0 && i < d && j < d, "parameter index out of range");
    require(i <= j, "upper-triangular entries need i <= j");
    p.set(i, j, v);
  }
  if (mode == Membership::strict)
    require(p.l11_norm() < M, "l11 norm " + std::to_string(p.l11_norm()) + " is not below M = " + std::to_string(M));
  return p;
}

EdgeObservations EdgeObservations::binary(std::span<const int> labels) {
  Vector v(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t t = 0; t < labels.size(); ++t) {
    require(labels[t] == 0 || labels[t] == 1, "edge label must be 0 or 1");
    v(static_cast<Eigen::Index>(t)) = labels[t];
  }
  return EdgeObservations(std::move(v), false);
}

EdgeObservations EdgeObservations::binary(const Vector& labels) {
  for (Eigen::Index t = 0; t < labels.size(); ++t)
    require(labels(t) == 0.0 || labels(t) == 1.0, "edge label must be 0 or 1");
  return EdgeObservations(labels, false);
}

EdgeObservations EdgeObservations::fractional(const Vector& labels) {
  for (Eigen::Index t = 0; t < labels.size(); ++t)
    require(labels(t) >= 0.0 && labels(t) <= 1.0, "fractional label must lie in [0,1]");
  return EdgeObservations(labels, true);
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double logit(double q) { return std::log(q) - std::log1p(-q); }

AffinityMatrix affinity(const FeatureMatrix& X, const ParameterMatrix& theta, const ObservationMask& omega) {
  require_dims(X.dim() == theta.dim(), "feature dimension d=" + std::to_string(X.dim()) +
                                           " differs from parameter dimension " + std::to_string(theta.dim()));
  require_dims(omega.vertices() == X.vertices(), "mask vertex count differs from feature matrix");
  const Matrix theta_x = theta.dense() * X.entries();
  AffinityMatrix out{Vector(omega.size())};
  for (int t = 0; t < omega.size(); ++t) {
    const auto& p = omega[t];
    out.values(t) = X.column(p.i).dot(theta_x.col(p.j));
  }
  return out;
}

Vector edge_probabilities(const AffinityMatrix& sigma) {
  Vector p(sigma.values.size());
  for (Eigen::Index t = 0; t < p.size(); ++t) p(t) = sigmoid(sigma.values(t));
  return p;
}

EdgeObservations sample_observations(const Vector& probabilities, std::uint64_t seed) {
  Vector y(probabilities.size());
  for (Eigen::Index t = 0; t < y.size(); ++t) {
    const double p = probabilities(t);
    require(p > 0.0 && p < 1.0, "edge probability outside (0,1)");
    y(t) = counter_uniform(seed, static_cast<std::uint64_t>(t)) < p ? 1.0 : 0.0;
  }
  return EdgeObservations::binary(y);
}

}  // namespace mlr
