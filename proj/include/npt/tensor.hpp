#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "npt/csr.hpp"

namespace npt {

// Dense row-major f64 matrix. All training-time math runs in f64.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
  Tensor(int r, int c, std::vector<double> d) : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != static_cast<size_t>(r) * c)
      throw std::invalid_argument("Tensor: data length does not match " + std::to_string(r) +
                                  "x" + std::to_string(c));
  }

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
  std::string shape_str() const { return std::to_string(rows) + "x" + std::to_string(cols); }

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double v) {
    Tensor t(r, c);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
  }

  double frobenius() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

namespace detail {
inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shape mismatch (" + a.shape_str() +
                                " vs " + b.shape_str() + ")");
}
}  // namespace detail

// C = A * B. The (i,k,j) loop accumulates over k in ascending order, so the
// result is bit-identical to a naive row-by-column dot product; zero entries
// of A are skipped, which leaves the accumulator unchanged and makes sparse
// feature matrices cheap.
inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: shape mismatch (" + a.shape_str() + " vs " +
                                b.shape_str() + ")");
  Tensor c(a.rows, b.cols);
  const int n = a.rows, k_dim = a.cols, m = b.cols;
  for (int i = 0; i < n; ++i) {
    double* ci = &c.data[static_cast<size_t>(i) * m];
    const double* ai = &a.data[static_cast<size_t>(i) * k_dim];
    for (int k = 0; k < k_dim; ++k) {
      const double s = ai[k];
      if (s == 0.0) continue;
      const double* bk = &b.data[static_cast<size_t>(k) * m];
      for (int j = 0; j < m; ++j) ci[j] += s * bk[j];
    }
  }
  return c;
}

// C = A^T * B, with A stored untransposed (k-major accumulation, same
// ascending-k order as matmul).
inline Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows != b.rows)
    throw std::invalid_argument("matmul_tn: shape mismatch (" + a.shape_str() + " vs " +
                                b.shape_str() + ")");
  Tensor c(a.cols, b.cols);
  const int kk = a.rows, n = a.cols, m = b.cols;
  for (int k = 0; k < kk; ++k) {
    const double* ak = &a.data[static_cast<size_t>(k) * n];
    const double* bk = &b.data[static_cast<size_t>(k) * m];
    for (int i = 0; i < n; ++i) {
      const double s = ak[i];
      if (s == 0.0) continue;
      double* ci = &c.data[static_cast<size_t>(i) * m];
      for (int j = 0; j < m; ++j) ci[j] += s * bk[j];
    }
  }
  return c;
}

// C = A * B^T.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols != b.cols)
    throw std::invalid_argument("matmul_nt: shape mismatch (" + a.shape_str() + " vs " +
                                b.shape_str() + ")");
  Tensor c(a.rows, b.rows);
  for (int i = 0; i < a.rows; ++i) {
    const double* ai = &a.data[static_cast<size_t>(i) * a.cols];
    for (int j = 0; j < b.rows; ++j) {
      const double* bj = &b.data[static_cast<size_t>(j) * b.cols];
      double s = 0.0;
      for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

// Y = S * X for CSR S.
inline Tensor spmm(const CsrMatrix& s, const Tensor& x) {
  if (s.cols != x.rows)
    throw std::invalid_argument("spmm: shape mismatch (" + std::to_string(s.rows) + "x" +
                                std::to_string(s.cols) + " vs " + x.shape_str() + ")");
  Tensor y(s.rows, x.cols);
  const int m = x.cols;
  for (int i = 0; i < s.rows; ++i) {
    double* yi = &y.data[static_cast<size_t>(i) * m];
    for (int k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) {
      const double v = s.vals[k];
      const double* xr = &x.data[static_cast<size_t>(s.col_idx[k]) * m];
      for (int j = 0; j < m; ++j) yi[j] += v * xr[j];
    }
  }
  return y;
}

// Y = S^T * X for CSR S (scatter form; rows of S visited in ascending order).
inline Tensor spmm_t(const CsrMatrix& s, const Tensor& x) {
  if (s.rows != x.rows)
    throw std::invalid_argument("spmm_t: shape mismatch (" + std::to_string(s.rows) + "x" +
                                std::to_string(s.cols) + " vs " + x.shape_str() + ")");
  Tensor y(s.cols, x.cols);
  const int m = x.cols;
  for (int i = 0; i < s.rows; ++i) {
    const double* xi = &x.data[static_cast<size_t>(i) * m];
    for (int k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) {
      const double v = s.vals[k];
      double* yr = &y.data[static_cast<size_t>(s.col_idx[k]) * m];
      for (int j = 0; j < m; ++j) yr[j] += v * xi[j];
    }
  }
  return y;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape("add", a, b);
  Tensor c = a;
  for (size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

// X + broadcast row bias (bias is 1 x cols).
inline Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (bias.rows != 1 || bias.cols != x.cols)
    throw std::invalid_argument("add_bias: shape mismatch (" + x.shape_str() + " vs " +
                                bias.shape_str() + ")");
  Tensor y = x;
  for (int i = 0; i < y.rows; ++i)
    for (int j = 0; j < y.cols; ++j) y(i, j) += bias.data[j];
  return y;
}

inline Tensor scale(const Tensor& x, double s) {
  Tensor y = x;
  for (double& v : y.data) v *= s;
  return y;
}

inline Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

inline Tensor log_softmax_rows(const Tensor& x) {
  Tensor y(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < x.cols; ++j) mx = std::max(mx, x(i, j));
    double sum = 0.0;
    for (int j = 0; j < x.cols; ++j) sum += std::exp(x(i, j) - mx);
    const double lse = mx + std::log(sum);
    for (int j = 0; j < x.cols; ++j) y(i, j) = x(i, j) - lse;
  }
  return y;
}

// Mean negative log-likelihood of the true class over masked rows; logp is
// expected to hold log-probabilities (rows of log_softmax output).
inline double nll_masked(const Tensor& logp, const std::vector<int>& labels,
                         const std::vector<std::uint8_t>& mask) {
  if (static_cast<int>(labels.size()) != logp.rows ||
      static_cast<int>(mask.size()) != logp.rows)
    throw std::invalid_argument("nll_masked: labels/mask length does not match rows");
  double s = 0.0;
  int cnt = 0;
  for (int i = 0; i < logp.rows; ++i) {
    if (!mask[i]) continue;
    const int y = labels[i];
    if (y < 0 || y >= logp.cols) throw std::invalid_argument("nll_masked: label out of range");
    s -= logp(i, y);
    ++cnt;
  }
  if (cnt == 0) throw std::invalid_argument("nll_masked: empty mask");
  return s / cnt;
}

// Fraction of masked rows whose argmax matches the label. Ties go to the
// lowest class index.
inline double accuracy(const Tensor& logits, const std::vector<int>& labels,
                       const std::vector<std::uint8_t>& mask) {
  if (static_cast<int>(labels.size()) != logits.rows ||
      static_cast<int>(mask.size()) != logits.rows)
    throw std::invalid_argument("accuracy: labels/mask length does not match rows");
  int hit = 0, cnt = 0;
  for (int i = 0; i < logits.rows; ++i) {
    if (!mask[i]) continue;
    int best = 0;
    double bv = logits(i, 0);
    for (int j = 1; j < logits.cols; ++j) {
      if (logits(i, j) > bv) {
        bv = logits(i, j);
        best = j;
      }
    }
    if (best == labels[i]) ++hit;
    ++cnt;
  }
  if (cnt == 0) throw std::invalid_argument("accuracy: empty mask");
  return static_cast<double>(hit) / cnt;
}

// Column selection: keeps columns listed in `cols` (in that order).
inline Tensor select_columns(const Tensor& x, const std::vector<int>& cols) {
  Tensor y(x.rows, static_cast<int>(cols.size()));
  for (int c : cols)
    if (c < 0 || c >= x.cols) throw std::invalid_argument("select_columns: index out of range");
  for (int i = 0; i < x.rows; ++i)
    for (size_t j = 0; j < cols.size(); ++j) y(i, static_cast<int>(j)) = x(i, cols[j]);
  return y;
}

}  // namespace npt
