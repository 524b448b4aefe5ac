#include "mlr/packing.hpp"

#include <algorithm>
#include <bit>
#include <iterator>
#include <cmath>
#include <limits>
#include <numbers>

#include "mlr/error.hpp"
#include "mlr/likelihood.hpp"
#include "mlr/rng.hpp"

namespace mlr {

ParameterMatrix build_g_k_alpha(int d, int k, double alpha_n, const IndexSet& support) {
  require(static_cast<int>(support.size()) == k && k >= 1 && k <= d, "support size must equal k <= d");
  require(alpha_n > 0.0, "alpha_N must be positive");
  for (int a : support) require(a >= 0 && a < d, "support index out of range");
  ParameterMatrix theta(d);
  for (int a : support)
    for (int b : support)
      if (a <= b) theta.set(a, b, alpha_n);
  theta.analytic_rank = 1;
  return theta;
}

int block_hamming(const ParameterMatrix& E, const ParameterMatrix& E2) {
  require_dims(E.dim() == E2.dim(), "Hamming distance needs equal shapes");
  return static_cast<int>((E.dense().array() != E2.dense().array()).count());
}

int block_hamming_closed_form(int k, int m) { return 2 * (k * k - (k - m) * (k - m)); }

PackingSet PackingSet::scaled(double alpha_n) const {
  PackingSet out = *this;
  out.scale = alpha_n;
  for (std::size_t u = 0; u < members.size(); ++u) out.members[u] = build_g_k_alpha(d, k, alpha_n, supports[u]);
  return out;
}

PackingSet greedy_packing(int d, int k, double c0, std::uint64_t order_seed, double max_supports) {
  require(k >= 1 && k <= d, "packing needs 1 <= k <= d");
  require(c0 > 0.0 && c0 < 2.0, "separation constant c0 must lie in (0, 2)");
  const double total = binomial(d, k);
  if (total > max_supports) throw BudgetExceeded("packing support count", total, max_supports);

  std::vector<IndexSet> order = all_combinations(d, k);
  Rng rng(order_seed);
  rng.shuffle(order);

  const double threshold = c0 * k * k;
  PackingSet pack;
  pack.d = d;
  pack.k = k;
  pack.c0 = c0;
  std::vector<std::uint64_t> masks;  // d <= 64 fast path for overlaps
  const bool use_masks = d <= 64;
  for (const IndexSet& S : order) {
    std::uint64_t mask = 0;
    if (use_masks)
      for (int a : S) mask |= std::uint64_t{1} << a;
    bool keep = true;
    for (std::size_t u = 0; u < pack.supports.size() && keep; ++u) {
      int overlap = 0;
      if (use_masks) {
        overlap = std::popcount(mask & masks[u]);
      } else {
        IndexSet inter;
        std::set_intersection(S.begin(), S.end(), pack.supports[u].begin(), pack.supports[u].end(), std::back_inserter(inter));
        overlap = static_cast<int>(inter.size());
      }
      // two single blocks overlapping in `overlap` indices differ in m = k - overlap indices
      keep = block_hamming_closed_form(k, k - overlap) > threshold;
    }
    if (!keep) continue;
    pack.supports.push_back(S);
    masks.push_back(mask);
  }
  for (const IndexSet& S : pack.supports) pack.members.push_back(build_g_k_alpha(d, k, 1.0, S));
  pack.min_pairwise_hamming = verify_min_hamming(pack);
  return pack;
}

int verify_min_hamming(const PackingSet& pack) {
  int best = std::numeric_limits<int>::max();
  for (std::size_t u = 0; u < pack.members.size(); ++u)
    for (std::size_t v = u + 1; v < pack.members.size(); ++v)
      best = std::min(best, block_hamming(pack.members[u], pack.members[v]));
  return best;
}

CardinalityAudit audit_cardinality(const PackingSet& pack, double alpha, double beta) {
  require(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0, "alpha and beta must lie in (0, 1)");
  CardinalityAudit a;
  a.applicable = pack.k <= alpha * beta * pack.d;
  a.rho = alpha / (-std::log(alpha * beta)) * (-std::log(beta) + beta - 1.0);
  a.separation_c = 2.0 * (1.0 - alpha * alpha);
  a.required_log = a.rho * pack.k * std::log(pack.d * std::numbers::e / pack.k);
  a.actual_log = std::log(static_cast<double>(std::max(pack.size(), 1)));
  a.satisfied = a.actual_log >= a.required_log;
  return a;
}

Matrix packing_kl_matrix(const PackingSet& pack, const FeatureMatrix& X, const ObservationMask& omega) {
  const int J = pack.size();
  Matrix kl = Matrix::Zero(J, J);
  for (int u = 0; u < J; ++u)
    for (int v = 0; v < J; ++v)
      if (u != v)
        kl(u, v) = kl_divergence(pack.members[static_cast<std::size_t>(u)], pack.members[static_cast<std::size_t>(v)], X, omega);
  return kl;
}

double packing_kl_bound(int k, double alpha_n, int N, double delta) {
  return (1.0 + delta) / 4.0 * k * k * alpha_n * alpha_n * N;
}

double fano_lower_bound(double delta, const Matrix& kl_matrix, int J) {
  require(J >= 2, "Fano bound needs J >= 2");
  require(delta > 0.0, "Fano bound needs delta > 0");
  require_dims(kl_matrix.rows() == J && kl_matrix.cols() == J, "KL matrix must be J x J");
  const double mean_kl = kl_matrix.sum() / (static_cast<double>(J) * J);
  return delta * delta * std::max(0.0, 1.0 - (mean_kl + std::numbers::ln2) / std::log(static_cast<double>(J)));
}

double sparse_packing_alpha(int d, int k, int N, double delta, double gamma) {
  return std::sqrt(4.0 * gamma * std::numbers::ln2 * std::log(d * std::numbers::e / k) / (k * static_cast<double>(N) * (1.0 + delta)));
}

double sparse_packing_delta(int k, double alpha_n, double c0) { return std::sqrt(c0 * k * k * alpha_n * alpha_n / 4.0); }

ParameterMatrix tiled_block_member(int d, const IndexSet& support, int r, double alpha_n,
                                   const std::vector<std::uint8_t>& bits) {
  const int k = static_cast<int>(support.size());
  require(r >= 1 && r <= k, "tiled construction needs 1 <= r <= k");
  require(static_cast<int>(bits.size()) == k * r, "tile needs k * r bits");
  Matrix A = Matrix::Zero(k, k);
  const int copies = k / r;
  for (int c = 0; c < copies; ++c)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < r; ++j) A(i, c * r + j) = bits[static_cast<std::size_t>(i * r + j)] ? alpha_n : 0.0;
  const Matrix sym = 0.5 * (A + A.transpose());
  ParameterMatrix theta(d);
  for (int a = 0; a < k; ++a)
    for (int b = a; b < k; ++b)
      if (sym(a, b) != 0.0) theta.set(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)], sym(a, b));
  return theta;
}

double tiled_packing_alpha(int k, int r, int N, double delta, double gamma) {
  return std::sqrt(gamma * std::numbers::ln2 / (1.0 + delta) * r / (2.0 * k * static_cast<double>(N)));
}

double tiled_separation_lower(int k, int r, double alpha_n) {
  return k * r / 16.0 * (alpha_n / 2.0) * (alpha_n / 2.0) * (k / r);
}

}  // namespace mlr
