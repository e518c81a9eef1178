#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "npt/csr.hpp"
#include "npt/rng.hpp"
#include "npt/tensor.hpp"

namespace npt {

// Bijection on [n]; output row i reads input row map[i].
struct Permutation {
  std::vector<int> map;

  int size() const { return static_cast<int>(map.size()); }

  Permutation inverse() const {
    Permutation inv;
    inv.map.resize(map.size());
    for (size_t i = 0; i < map.size(); ++i) inv.map[map[i]] = static_cast<int>(i);
    return inv;
  }

  static Permutation identity(int n) {
    Permutation p;
    p.map.resize(n);
    std::iota(p.map.begin(), p.map.end(), 0);
    return p;
  }
};

// Uniform over all n! permutations (Fisher-Yates with unbiased index draws).
inline Permutation sample_permutation(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_permutation: n must be >= 1");
  Permutation p = Permutation::identity(n);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(p.map[i], p.map[j]);
  }
  return p;
}

// Reorders column m by the permutation; all other columns are left
// bit-identical. The input is not mutated.
inline Tensor permute_feature(const Tensor& x, int m, const Permutation& perm) {
  if (m < 0 || m >= x.cols)
    throw std::invalid_argument("permute_feature: column " + std::to_string(m) +
                                " out of range for " + x.shape_str());
  if (perm.size() != x.rows)
    throw std::invalid_argument("permute_feature: permutation length mismatch");
  Tensor y = x;
  for (int i = 0; i < x.rows; ++i) y(i, m) = x(perm.map[i], m);
  return y;
}

// In-place variant used by the scoring loop; returns the previous column so
// the caller can restore it.
inline std::vector<double> permute_feature_inplace(Tensor& x, int m, const Permutation& perm) {
  if (m < 0 || m >= x.cols)
    throw std::invalid_argument("permute_feature: column " + std::to_string(m) +
                                " out of range for " + x.shape_str());
  std::vector<double> old(x.rows);
  for (int i = 0; i < x.rows; ++i) old[i] = x(i, m);
  for (int i = 0; i < x.rows; ++i) x(i, m) = old[perm.map[i]];
  return old;
}

inline void restore_column(Tensor& x, int m, const std::vector<double>& col) {
  for (int i = 0; i < x.rows; ++i) x(i, m) = col[i];
}

// Row i of the output is row perm(i) of the input.
inline Tensor permute_rows(const Tensor& x, const Permutation& perm) {
  if (perm.size() != x.rows)
    throw std::invalid_argument("permute_rows: permutation length mismatch");
  Tensor y(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) y(i, j) = x(perm.map[i], j);
  return y;
}

// i.i.d. standard normal matrix (Box-Muller draws from the given stream).
inline Tensor gaussian_features(int n, int m, Rng& rng) {
  if (n < 1 || m < 1) throw std::invalid_argument("gaussian_features: dimensions must be >= 1");
  Tensor w(n, m);
  for (double& v : w.data) v = rng.normal();
  return w;
}

namespace detail {
// Decodes an index in [0, n(n-1)/2) into the (i, j) pair with i < j, rows in
// ascending i order. Binary search keeps the decode exact for any n.
inline std::pair<int, int> pair_from_index(std::int64_t q, int n) {
  auto row_offset = [n](std::int64_t i) { return i * n - i * (i + 1) / 2; };
  int lo = 0, hi = n - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (row_offset(mid) <= q)
      lo = mid;
    else
      hi = mid - 1;
  }
  const int i = lo;
  const int j = i + 1 + static_cast<int>(q - row_offset(i));
  return {i, j};
}
}  // namespace detail

// Uniformly random simple undirected graph with exactly the same edge count
// as the input (fixed-edge-count model, not independent-probability).
// Emits unit weights. Uses Floyd's sampling for an exact k-subset of pairs.
inline CsrMatrix er_same_density(const CsrMatrix& adjacency, Rng& rng) {
  if (adjacency.rows != adjacency.cols)
    throw std::invalid_argument("er_same_density: adjacency must be square");
  const int n = adjacency.rows;
  std::int64_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int p = adjacency.row_ptr[i]; p < adjacency.row_ptr[i + 1]; ++p)
      if (adjacency.col_idx[p] > i && adjacency.vals[p] != 0.0) ++k;
  const std::int64_t total = static_cast<std::int64_t>(n) * (n - 1) / 2;
  if (k > total)
    throw std::invalid_argument("er_same_density: edge count exceeds n(n-1)/2");

  std::unordered_set<std::int64_t> chosen;
  chosen.reserve(static_cast<size_t>(k) * 2);
  for (std::int64_t j = total - k; j < total; ++j) {
    const std::int64_t t = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(j) + 1));
    if (!chosen.insert(t).second) chosen.insert(j);
  }

  std::vector<CooEntry> entries;
  entries.reserve(static_cast<size_t>(k) * 2);
  for (std::int64_t q : chosen) {
    const auto [i, j] = detail::pair_from_index(q, n);
    entries.push_back({i, j, 1.0});
    entries.push_back({j, i, 1.0});
  }
  return csr_from_coo(n, n, std::move(entries));
}

}  // namespace npt
