#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <type_traits>
#include <vector>

#include "mlr/rng.hpp"

namespace mlr {

using IndexSet = std::vector<int>;

/// C(n, k) as a double (exact for the sizes used here, finite for large n).
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(r);
}

/// Calls fn(const IndexSet&) for every k-subset of [0, n) in lexicographic order.
/// Stops early if fn returns false.
template <class Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return;
  IndexSet c(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) c[static_cast<std::size_t>(i)] = i;
  while (true) {
    if constexpr (std::is_same_v<decltype(fn(c)), bool>) {
      if (!fn(static_cast<const IndexSet&>(c))) return;
    } else {
      fn(static_cast<const IndexSet&>(c));
    }
    int i = k - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++c[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline std::vector<IndexSet> all_combinations(int n, int k) {
  std::vector<IndexSet> out;
  for_each_combination(n, k, [&](const IndexSet& c) { out.push_back(c); });
  return out;
}

/// Uniform random k-subset of [0, n), returned sorted.
inline IndexSet random_subset(int n, int k, Rng& rng) {
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  // partial Fisher-Yates
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(all[static_cast<std::size_t>(i)], all[j]);
  }
  IndexSet s(all.begin(), all.begin() + k);
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace mlr
