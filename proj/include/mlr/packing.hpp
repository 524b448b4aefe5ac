#pragma once

#include <cstdint>
#include <vector>

#include "mlr/core_model.hpp"

namespace mlr {

/// alpha_N on support x support, zero elsewhere. Rank one.
ParameterMatrix build_g_k_alpha(int d, int k, double alpha_n, const IndexSet& support);

/// Number of entries where E and E' differ.
int block_hamming(const ParameterMatrix& E, const ParameterMatrix& E2);

/// 2 (k^2 - (k - m)^2): distance between two single k-blocks whose supports
/// differ in m indices.
int block_hamming_closed_form(int k, int m);

struct PackingSet {
  int d = 0;
  int k = 0;
  double c0 = 0.0;
  double scale = 1.0;               // 1 for 0/1 blocks, alpha_N once scaled
  std::vector<IndexSet> supports;
  std::vector<ParameterMatrix> members;
  int min_pairwise_hamming = 0;     // exhaustive over all member pairs

  int size() const { return static_cast<int>(members.size()); }
  PackingSet scaled(double alpha_n) const;
};

/// Greedy packing over all C(d,k) single-block 0/1 matrices taken in a
/// seeded order: a block is kept when its Hamming distance to every kept
/// block exceeds c0 k^2.
PackingSet greedy_packing(int d, int k, double c0, std::uint64_t order_seed, double max_supports = 1e6);

/// Recomputes the minimum pairwise Hamming distance of the members.
int verify_min_hamming(const PackingSet& pack);

struct CardinalityAudit {
  bool applicable = false;      // k <= alpha beta d
  double rho = 0.0;             // alpha / (-log(alpha beta)) (-log beta + beta - 1)
  double separation_c = 0.0;    // 2 (1 - alpha^2)
  double required_log = 0.0;    // rho k log(d e / k)
  double actual_log = 0.0;      // log |packing|
  bool satisfied = false;
};

/// Compares the greedy cardinality to the existence guarantee of the
/// Varshamov-Gilbert variant. Advisory: greedy need not attain it.
CardinalityAudit audit_cardinality(const PackingSet& pack, double alpha, double beta);

/// Pairwise KL(P_u || P_v) between the (scaled) members.
Matrix packing_kl_matrix(const PackingSet& pack, const FeatureMatrix& X, const ObservationMask& omega);

/// (1 + Delta) / 4 k^2 alpha_N^2 N.
double packing_kl_bound(int k, double alpha_n, int N, double delta);

/// delta^2 max(0, 1 - (mean KL + log 2) / log J), mean over all J^2 entries.
double fano_lower_bound(double delta, const Matrix& kl_matrix, int J);

/// alpha_N^2 = 4 gamma log 2 log(d e / k) / (k N (1 + Delta)).
double sparse_packing_alpha(int d, int k, int N, double delta, double gamma);

/// Half-separation of the sparse packing: delta^2 = c0 k^2 alpha_N^2 / 4.
double sparse_packing_delta(int k, double alpha_n, double c0);

/// Tiled low-rank construction: (A + A^T)/2 with A = (T | ... | T | 0),
/// T a k x r matrix of {0, alpha_N} given by `bits` (row-major, k*r entries),
/// embedded on `support`.
ParameterMatrix tiled_block_member(int d, const IndexSet& support, int r, double alpha_n,
                                   const std::vector<std::uint8_t>& bits);

/// alpha_N^2 = gamma log 2 r / ((1 + Delta) 2 k N).
double tiled_packing_alpha(int k, int r, int N, double delta, double gamma);

/// Lower end of the Frobenius separation bracket for the tiled construction:
/// k r / 16 (alpha_N / 2)^2 floor(k / r).
double tiled_separation_lower(int k, int r, double alpha_n);

}  // namespace mlr
