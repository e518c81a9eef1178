#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "npt/csr.hpp"
#include "npt/tensor.hpp"

namespace npt {

// Reverse-mode tape over a fixed op set. Records are appended in topological
// order by construction; backward() visits each record exactly once in
// reverse and accumulates gradients additively, so fan-out works without any
// bookkeeping at use sites.
class Tape {
 public:
  using Id = int;

  Id leaf(Tensor value, bool requires_grad) {
    return push(Op::Leaf, -1, -1, std::move(value), requires_grad);
  }

  Id matmul(Id a, Id b) {
    Tensor v = npt::matmul(value(a), value(b));
    return push(Op::MatMul, a, b, std::move(v), requires(a) || requires(b));
  }

  // Sparse factor is a constant (never differentiated); only x gets a grad.
  Id spmm(const CsrMatrix* s, Id x) {
    Tensor v = npt::spmm(*s, value(x));
    Id id = push(Op::Spmm, x, -1, std::move(v), requires(x));
    nodes_.back().sparse = s;
    return id;
  }

  Id add(Id a, Id b) {
    Tensor v = npt::add(value(a), value(b));
    return push(Op::Add, a, b, std::move(v), requires(a) || requires(b));
  }

  Id add_bias(Id x, Id bias) {
    Tensor v = npt::add_bias(value(x), value(bias));
    return push(Op::AddBias, x, bias, std::move(v), requires(x) || requires(bias));
  }

  Id scale(Id x, double s) {
    Tensor v = npt::scale(value(x), s);
    Id id = push(Op::Scale, x, -1, std::move(v), requires(x));
    nodes_.back().scalar = s;
    return id;
  }

  Id relu(Id x) {
    Tensor v = npt::relu(value(x));
    return push(Op::Relu, x, -1, std::move(v), requires(x));
  }

  Id log_softmax_rows(Id x) {
    Tensor v = npt::log_softmax_rows(value(x));
    return push(Op::LogSoftmaxRows, x, -1, std::move(v), requires(x));
  }

  // Scalar (1x1) output: mean NLL of the true class over masked rows.
  Id nll_masked(Id logp, std::vector<int> labels, std::vector<std::uint8_t> mask) {
    const double v = npt::nll_masked(value(logp), labels, mask);
    Tensor out(1, 1);
    out.data[0] = v;
    Id id = push(Op::NllMasked, logp, -1, std::move(out), requires(logp));
    nodes_.back().labels = std::move(labels);
    nodes_.back().mask = std::move(mask);
    return id;
  }

  const Tensor& value(Id id) const { return values_[id]; }
  const Tensor& grad(Id id) const { return grads_[id]; }
  bool requires(Id id) const { return requires_[id] != 0; }

  // Seeds d(loss)/d(loss) = 1 and propagates to every recorded value.
  // loss must be 1x1.
  void backward(Id loss) {
    const Tensor& lv = values_[loss];
    if (lv.rows != 1 || lv.cols != 1)
      throw std::invalid_argument("backward: loss must be a 1x1 tensor, got " + lv.shape_str());
    for (size_t i = 0; i < values_.size(); ++i)
      grads_[i] = Tensor(values_[i].rows, values_[i].cols);
    grads_[loss].data[0] = 1.0;
    for (Id id = loss; id >= 0; --id) {
      if (!requires_[id]) continue;
      propagate(id);
    }
  }

 private:
  enum class Op {
    Leaf,
    MatMul,
    Spmm,
    Add,
    AddBias,
    Scale,
    Relu,
    LogSoftmaxRows,
    NllMasked,
  };

  struct Node {
    Op op;
    Id a = -1, b = -1;
    const CsrMatrix* sparse = nullptr;
    double scalar = 0.0;
    std::vector<int> labels;
    std::vector<std::uint8_t> mask;
  };

  Id push(Op op, Id a, Id b, Tensor value, bool req) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    values_.push_back(std::move(value));
    grads_.emplace_back();
    requires_.push_back(req ? 1 : 0);
    nodes_.push_back(std::move(n));
    return static_cast<Id>(values_.size()) - 1;
  }

  void accumulate(Id id, const Tensor& g) {
    Tensor& dst = grads_[id];
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += g.data[i];
  }

  void propagate(Id id) {
    const Node& n = nodes_[id];
    const Tensor& g = grads_[id];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        if (requires_[n.a]) accumulate(n.a, matmul_nt(g, values_[n.b]));
        if (requires_[n.b]) accumulate(n.b, matmul_tn(values_[n.a], g));
        break;
      case Op::Spmm:
        if (requires_[n.a]) accumulate(n.a, spmm_t(*n.sparse, g));
        break;
      case Op::Add:
        if (requires_[n.a]) accumulate(n.a, g);
        if (requires_[n.b]) accumulate(n.b, g);
        break;
      case Op::AddBias: {
        if (requires_[n.a]) accumulate(n.a, g);
        if (requires_[n.b]) {
          Tensor db(1, g.cols);
          for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) db.data[j] += g(i, j);
          accumulate(n.b, db);
        }
        break;
      }
      case Op::Scale:
        if (requires_[n.a]) accumulate(n.a, npt::scale(g, n.scalar));
        break;
      case Op::Relu: {
        if (!requires_[n.a]) break;
        const Tensor& x = values_[n.a];
        Tensor dx(x.rows, x.cols);
        for (size_t i = 0; i < dx.data.size(); ++i)
          dx.data[i] = x.data[i] > 0.0 ? g.data[i] : 0.0;  // subgradient 0 at 0
        accumulate(n.a, dx);
        break;
      }
      case Op::LogSoftmaxRows: {
        if (!requires_[n.a]) break;
        const Tensor& y = values_[id];  // log-probabilities
        Tensor dx(y.rows, y.cols);
        for (int i = 0; i < y.rows; ++i) {
          double gsum = 0.0;
          for (int j = 0; j < y.cols; ++j) gsum += g(i, j);
          for (int j = 0; j < y.cols; ++j) dx(i, j) = g(i, j) - std::exp(y(i, j)) * gsum;
        }
        accumulate(n.a, dx);
        break;
      }
      case Op::NllMasked: {
        if (!requires_[n.a]) break;
        const Tensor& logp = values_[n.a];
        int cnt = 0;
        for (std::uint8_t b : n.mask) cnt += b ? 1 : 0;
        const double up = g.data[0] / cnt;
        Tensor dx(logp.rows, logp.cols);
        for (int i = 0; i < logp.rows; ++i)
          if (n.mask[i]) dx(i, n.labels[i]) = -up;
        accumulate(n.a, dx);
        break;
      }
    }
  }

  std::vector<Tensor> values_;
  std::vector<Tensor> grads_;
  std::vector<char> requires_;
  std::vector<Node> nodes_;
};

}  // namespace npt
