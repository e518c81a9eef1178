#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace npt {

// Compressed sparse row matrix, double weights. Column indices are strictly
// increasing within each row; explicit zeros are allowed but never produced
// by the builders here.
struct CsrMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;  // size rows + 1
  std::vector<int> col_idx;
  std::vector<double> vals;

  CsrMatrix() : row_ptr(1, 0) {}
  CsrMatrix(int r, int c) : rows(r), cols(c), row_ptr(static_cast<size_t>(r) + 1, 0) {}

  int nnz() const { return static_cast<int>(col_idx.size()); }

  double at(int i, int j) const {
    const int lo = row_ptr[i], hi = row_ptr[i + 1];
    const auto first = col_idx.begin() + lo;
    const auto last = col_idx.begin() + hi;
    const auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return vals[static_cast<size_t>(it - col_idx.begin())];
  }
};

struct CooEntry {
  int row = 0;
  int col = 0;
  double val = 0.0;
};

// Sorts entries and assembles CSR. Throws on out-of-range indices and on
// duplicate (row, col) pairs.
inline CsrMatrix csr_from_coo(int rows, int cols, std::vector<CooEntry> entries) {
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols)
      throw std::invalid_argument("csr_from_coo: entry (" + std::to_string(e.row) + "," +
                                  std::to_string(e.col) + ") outside " + std::to_string(rows) +
                                  "x" + std::to_string(cols));
  }
  std::sort(entries.begin(), entries.end(), [](const CooEntry& a, const CooEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].row == entries[k - 1].row && entries[k].col == entries[k - 1].col)
      throw std::invalid_argument("csr_from_coo: duplicate entry (" +
                                  std::to_string(entries[k].row) + "," +
                                  std::to_string(entries[k].col) + ")");
  }
  CsrMatrix m(rows, cols);
  m.col_idx.reserve(entries.size());
  m.vals.reserve(entries.size());
  size_t k = 0;
  for (int i = 0; i < rows; ++i) {
    m.row_ptr[i] = static_cast<int>(k);
    while (k < entries.size() && entries[k].row == i) {
      m.col_idx.push_back(entries[k].col);
      m.vals.push_back(entries[k].val);
      ++k;
    }
  }
  m.row_ptr[rows] = static_cast<int>(k);
  return m;
}

inline CsrMatrix csr_identity(int n) {
  CsrMatrix m(n, n);
  m.col_idx.resize(n);
  m.vals.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    m.row_ptr[i] = i;
    m.col_idx[i] = i;
  }
  m.row_ptr[n] = n;
  return m;
}

inline CsrMatrix csr_transpose(const CsrMatrix& a) {
  CsrMatrix t(a.cols, a.rows);
  std::vector<int> counts(a.cols, 0);
  for (int j : a.col_idx) ++counts[j];
  for (int j = 0; j < a.cols; ++j) t.row_ptr[j + 1] = t.row_ptr[j] + counts[j];
  t.col_idx.resize(a.col_idx.size());
  t.vals.resize(a.vals.size());
  std::vector<int> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      const int j = a.col_idx[k];
      const int pos = cursor[j]++;
      t.col_idx[pos] = i;
      t.vals[pos] = a.vals[k];
    }
  }
  return t;
}

inline bool csr_is_symmetric(const CsrMatrix& a, double tol) {
  if (a.rows != a.cols) return false;
  const CsrMatrix t = csr_transpose(a);
  if (t.col_idx.size() != a.col_idx.size()) return false;
  for (int i = 0; i < a.rows; ++i) {
    if (a.row_ptr[i] != t.row_ptr[i]) return false;
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
      if (a.col_idx[k] != t.col_idx[k]) return false;
      if (std::abs(a.vals[k] - t.vals[k]) > tol) return false;
    }
  }
  return true;
}

inline double csr_frobenius(const CsrMatrix& a) {
  double s = 0.0;
  for (double v : a.vals) s += v * v;
  return std::sqrt(s);
}

inline std::vector<double> csr_row_sums(const CsrMatrix& a) {
  std::vector<double> d(a.rows, 0.0);
  for (int i = 0; i < a.rows; ++i)
    for (int k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) d[i] += a.vals[k];
  return d;
}

}  // namespace npt
