#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "npt/csr.hpp"
#include "npt/tensor.hpp"

namespace npt {

// Undirected node-classification instance. The adjacency never stores
// self-loops; normalization adds them on the fly.
struct Graph {
  int n_nodes = 0;
  int n_feats = 0;
  int n_classes = 0;
  CsrMatrix adjacency;           // symmetric, zero diagonal, weights >= 0
  Tensor features;               // N x M
  std::vector<int> labels;       // values in [0, C)
  std::vector<std::uint8_t> train_mask, val_mask, test_mask;

  void validate() const {
    if (adjacency.rows != n_nodes || adjacency.cols != n_nodes)
      throw std::invalid_argument("graph: adjacency shape does not match n_nodes");
    if (features.rows != n_nodes || features.cols != n_feats)
      throw std::invalid_argument("graph: feature matrix shape mismatch");
    if (static_cast<int>(labels.size()) != n_nodes)
      throw std::invalid_argument("graph: label count does not match n_nodes");
    for (int y : labels)
      if (y < 0 || y >= n_classes)
        throw std::invalid_argument("graph: label " + std::to_string(y) + " outside [0, " +
                                    std::to_string(n_classes) + ")");
    for (double w : adjacency.vals)
      if (w < 0.0) throw std::invalid_argument("graph: negative weight");
    for (int i = 0; i < n_nodes; ++i)
      for (int k = adjacency.row_ptr[i]; k < adjacency.row_ptr[i + 1]; ++k)
        if (adjacency.col_idx[k] == i && adjacency.vals[k] != 0.0)
          throw std::invalid_argument("graph: self-loop at node " + std::to_string(i));
    if (!csr_is_symmetric(adjacency, 1e-12))
      throw std::invalid_argument("graph: adjacency is not symmetric");
    if (static_cast<int>(train_mask.size()) != n_nodes ||
        static_cast<int>(val_mask.size()) != n_nodes ||
        static_cast<int>(test_mask.size()) != n_nodes)
      throw std::invalid_argument("graph: mask length does not match n_nodes");
    for (int i = 0; i < n_nodes; ++i) {
      const int hits = (train_mask[i] ? 1 : 0) + (val_mask[i] ? 1 : 0) + (test_mask[i] ? 1 : 0);
      if (hits > 1) throw std::invalid_argument("graph: masks overlap at node " + std::to_string(i));
      if (hits == 0) throw std::invalid_argument("graph: masks do not cover node " + std::to_string(i));
    }
  }

  int n_edges() const { return adjacency.nnz() / 2; }
};

// One-hot labels with per-class counts and reciprocals.
struct ClassStats {
  Tensor one_hot;                  // N x C
  std::vector<int> counts;         // p, all >= 1
  std::vector<double> inv_counts;  // 1 / p
};

inline ClassStats class_stats(const std::vector<int>& labels, int n_classes) {
  ClassStats s;
  s.counts.assign(n_classes, 0);
  for (int y : labels) {
    if (y < 0 || y >= n_classes) throw std::invalid_argument("class_stats: label out of range");
    ++s.counts[y];
  }
  for (int c = 0; c < n_classes; ++c)
    if (s.counts[c] == 0)
      throw std::invalid_argument("class_stats: empty class " + std::to_string(c));
  s.one_hot = Tensor(static_cast<int>(labels.size()), n_classes);
  for (size_t i = 0; i < labels.size(); ++i) s.one_hot(static_cast<int>(i), labels[i]) = 1.0;
  s.inv_counts.resize(n_classes);
  for (int c = 0; c < n_classes; ++c) s.inv_counts[c] = 1.0 / s.counts[c];
  return s;
}

inline ClassStats class_stats(const Graph& g) { return class_stats(g.labels, g.n_classes); }

enum class NormKind { Symmetric, RandomWalk };

// Self-loop augmented normalization of a symmetric zero-diagonal adjacency.
// degrees holds the *unaugmented* weighted degrees d = A1.
struct NormalizedAdjacency {
  NormKind kind = NormKind::RandomWalk;
  CsrMatrix matrix;
  std::vector<double> degrees;
};

inline NormalizedAdjacency normalize(const CsrMatrix& adjacency, NormKind kind) {
  if (adjacency.rows != adjacency.cols)
    throw std::invalid_argument("normalize: adjacency must be square");
  for (double w : adjacency.vals)
    if (w < 0.0) throw std::invalid_argument("normalize: negative weight");
  for (int i = 0; i < adjacency.rows; ++i)
    for (int k = adjacency.row_ptr[i]; k < adjacency.row_ptr[i + 1]; ++k)
      if (adjacency.col_idx[k] == i && adjacency.vals[k] != 0.0)
        throw std::invalid_argument("normalize: nonzero diagonal at node " + std::to_string(i));
  if (!csr_is_symmetric(adjacency, 1e-12))
    throw std::invalid_argument("normalize: adjacency asymmetric beyond 1e-12");

  NormalizedAdjacency out;
  out.kind = kind;
  out.degrees = csr_row_sums(adjacency);

  const int n = adjacency.rows;
  std::vector<CooEntry> entries;
  entries.reserve(adjacency.col_idx.size() + static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int k = adjacency.row_ptr[i]; k < adjacency.row_ptr[i + 1]; ++k)
      if (adjacency.vals[k] != 0.0)
        entries.push_back({i, adjacency.col_idx[k], adjacency.vals[k]});
    entries.push_back({i, i, 1.0});  // the single self-loop added here
  }
  for (auto& e : entries) {
    if (kind == NormKind::RandomWalk)
      e.val /= out.degrees[e.row] + 1.0;
    else
      e.val /= std::sqrt(out.degrees[e.row] + 1.0) * std::sqrt(out.degrees[e.col] + 1.0);
  }
  out.matrix = csr_from_coo(n, n, std::move(entries));
  return out;
}

// Splits the adjacency into same-class edges and cross-class edges:
// first = A* (intra-class), second = Delta = A - A*. Supports are disjoint,
// both matrices stay symmetric.
inline std::pair<CsrMatrix, CsrMatrix> idealize_graph(const Graph& g) {
  std::vector<CooEntry> same, cross;
  for (int i = 0; i < g.n_nodes; ++i) {
    for (int k = g.adjacency.row_ptr[i]; k < g.adjacency.row_ptr[i + 1]; ++k) {
      const int j = g.adjacency.col_idx[k];
      const CooEntry e{i, j, g.adjacency.vals[k]};
      if (g.labels[i] == g.labels[j])
        same.push_back(e);
      else
        cross.push_back(e);
    }
  }
  return {csr_from_coo(g.n_nodes, g.n_nodes, std::move(same)),
          csr_from_coo(g.n_nodes, g.n_nodes, std::move(cross))};
}

// Class-mean projection of the features: row i becomes the mean feature
// vector of class y_i. Idempotent up to rounding.
inline Tensor idealize_features(const Tensor& features, const std::vector<int>& labels,
                                int n_classes) {
  const ClassStats cs = class_stats(labels, n_classes);
  Tensor means(n_classes, features.cols);
  for (int i = 0; i < features.rows; ++i) {
    const int c = labels[i];
    for (int j = 0; j < features.cols; ++j) means(c, j) += features(i, j);
  }
  for (int c = 0; c < n_classes; ++c)
    for (int j = 0; j < features.cols; ++j) means(c, j) *= cs.inv_counts[c];
  Tensor out(features.rows, features.cols);
  for (int i = 0; i < features.rows; ++i)
    for (int j = 0; j < features.cols; ++j) out(i, j) = means(labels[i], j);
  return out;
}

inline Tensor idealize_features(const Graph& g) {
  return idealize_features(g.features, g.labels, g.n_classes);
}

}  // namespace npt
