#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mlr/combinatorics.hpp"

namespace mlr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Explanatory variables, one column per vertex (d x n).
class FeatureMatrix {
 public:
  explicit FeatureMatrix(Matrix entries);

  int dim() const { return static_cast<int>(entries_.rows()); }
  int vertices() const { return static_cast<int>(entries_.cols()); }
  const Matrix& entries() const { return entries_; }
  auto column(int i) const { return entries_.col(i); }

 private:
  Matrix entries_;
};

/// Unordered vertex pair stored with i < j.
struct VertexPair {
  int i = 0;
  int j = 0;
  auto operator<=>(const VertexPair&) const = default;
};

enum class LoopPolicy { drop, reject };

/// The set of observed pairs, sorted lexicographically, no loops, no duplicates.
class ObservationMask {
 public:
  /// Pairs given as (i, j) in any orientation. Loops are dropped or rejected
  /// according to `loops`; duplicates are always rejected.
  ObservationMask(int n, std::vector<VertexPair> pairs, LoopPolicy loops = LoopPolicy::reject);

  static ObservationMask all_pairs(int n);
  /// Uniformly random subset of `count` pairs out of all C(n,2).
  static ObservationMask random_pairs(int n, int count, std::uint64_t seed);

  int vertices() const { return n_; }
  int size() const { return static_cast<int>(pairs_.size()); }
  const std::vector<VertexPair>& pairs() const { return pairs_; }
  const VertexPair& operator[](int t) const { return pairs_[static_cast<std::size_t>(t)]; }

 private:
  int n_;
  std::vector<VertexPair> pairs_;
};

using UpperEntries = std::map<std::pair<int, int>, double>;

/// Symmetric d x d parameter. Every write goes to (i,j) and (j,i) together,
/// so the stored matrix is exactly symmetric.
class ParameterMatrix {
 public:
  explicit ParameterMatrix(int d);

  /// Reads the upper triangle of `m` (including the diagonal) and mirrors it.
  static ParameterMatrix from_upper_triangle(const Matrix& m);

  int dim() const { return static_cast<int>(entries_.rows()); }
  double operator()(int i, int j) const { return entries_(i, j); }
  void set(int i, int j, double value);
  const Matrix& dense() const { return entries_; }

  /// Rows holding a nonzero entry; |support()| is the block sparsity.
  IndexSet support() const;
  /// Number of singular values above d * s_max * 2^-40.
  int rank() const;
  double l11_norm() const;
  double frobenius_norm_sq() const { return entries_.squaredNorm(); }

  /// Strict membership: l11 < M, |support| <= k, rank <= r.
  bool in_class(int k, int r, double M) const;

  /// Rank known in closed form for structured constructions.
  std::optional<int> analytic_rank;

  ParameterMatrix& operator+=(const ParameterMatrix& other);
  ParameterMatrix& operator*=(double a);
  friend ParameterMatrix operator+(ParameterMatrix a, const ParameterMatrix& b) { return a += b; }
  friend ParameterMatrix operator-(ParameterMatrix a, const ParameterMatrix& b) {
    ParameterMatrix nb = b;
    nb *= -1.0;
    return a += nb;
  }
  friend ParameterMatrix operator*(double s, ParameterMatrix a) { return a *= s; }

 private:
  Matrix entries_;
};

enum class Membership { lenient, strict };

/// Assembles a parameter from its upper-triangular entries (keys with i <= j).
/// In strict mode, l11 >= M is rejected.
ParameterMatrix build_parameter(int d, const UpperEntries& upper, double M,
                                Membership mode = Membership::lenient);

struct AffinityMatrix {
  Vector values;  // parallel to ObservationMask::pairs()
};

/// Binary edge labels over the mask. The fractional form accepts labels in
/// [0,1] and exists for checking expectation identities in tests.
class EdgeObservations {
 public:
  static EdgeObservations binary(std::span<const int> labels);
  static EdgeObservations binary(const Vector& labels);
  static EdgeObservations fractional(const Vector& labels);

  int size() const { return static_cast<int>(labels_.size()); }
  const Vector& labels() const { return labels_; }
  double operator[](int t) const { return labels_(t); }
  bool is_fractional() const { return fractional_; }

 private:
  EdgeObservations(Vector labels, bool fractional) : labels_(std::move(labels)), fractional_(fractional) {}
  Vector labels_;
  bool fractional_;
};

/// 1 / (1 + exp(-t)) evaluated without overflow.
double sigmoid(double t);

/// log(q / (1 - q)).
double logit(double q);

/// Sigma_ij = X_i^T Theta X_j for each observed pair.
AffinityMatrix affinity(const FeatureMatrix& X, const ParameterMatrix& theta, const ObservationMask& omega);

Vector edge_probabilities(const AffinityMatrix& sigma);

/// Independent Bernoulli draws; label t depends only on (seed, t).
EdgeObservations sample_observations(const Vector& probabilities, std::uint64_t seed);

}  // namespace mlr
