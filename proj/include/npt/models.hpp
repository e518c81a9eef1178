#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "npt/adam.hpp"
#include "npt/autodiff.hpp"
#include "npt/feature_mask.hpp"
#include "npt/graph.hpp"
#include "npt/rng.hpp"
#include "npt/tensor.hpp"

namespace npt {

enum class Arch { GCN, GIN, TAGCN, MLP };

inline const char* arch_name(Arch a) {
  switch (a) {
    case Arch::GCN: return "gcn";
    case Arch::GIN: return "gin";
    case Arch::TAGCN: return "tagcn";
    case Arch::MLP: return "mlp";
  }
  return "?";
}

inline Arch arch_from_name(const std::string& s) {
  if (s == "gcn") return Arch::GCN;
  if (s == "gin") return Arch::GIN;
  if (s == "tagcn") return Arch::TAGCN;
  if (s == "mlp") return Arch::MLP;
  throw std::invalid_argument("unknown architecture '" + s + "'");
}

struct ModelSpec {
  Arch arch = Arch::GCN;
  int hidden_dim = 512;
  int tagcn_hops = 3;   // number of propagation hops K (layer sums hops 0..K)
  bool bias = true;
};

// Flat parameter list; the layout per architecture is fixed by param_shapes.
struct ModelParams {
  std::vector<Tensor> tensors;
};

// Adjacency operands shared by the architectures: random-walk normalization
// for GCN, symmetric for TAGCN, raw sum-aggregation for GIN.
struct GraphOps {
  CsrMatrix rw;
  CsrMatrix sym;
  const CsrMatrix* raw = nullptr;
};

inline GraphOps make_graph_ops(const Graph& g) {
  GraphOps ops;
  ops.rw = normalize(g.adjacency, NormKind::RandomWalk).matrix;
  ops.sym = normalize(g.adjacency, NormKind::Symmetric).matrix;
  ops.raw = &g.adjacency;
  return ops;
}

namespace detail {

struct ParamLayout {
  std::vector<std::pair<int, int>> shapes;
  std::vector<std::string> names;
  std::vector<size_t> input_dim_indices;  // tensors whose row count equals the active feature count
  std::vector<size_t> bias_indices;
};

inline ParamLayout param_layout(const ModelSpec& spec, int in_feats, int n_classes) {
  ParamLayout lay;
  const int h = spec.hidden_dim;
  auto weight = [&](const std::string& name, int r, int c, bool input_dim) {
    if (input_dim) lay.input_dim_indices.push_back(lay.shapes.size());
    lay.shapes.emplace_back(r, c);
    lay.names.push_back(name);
  };
  auto bias = [&](const std::string& name, int c) {
    if (!spec.bias) return;
    lay.bias_indices.push_back(lay.shapes.size());
    lay.shapes.emplace_back(1, c);
    lay.names.push_back(name);
  };
  switch (spec.arch) {
    case Arch::GCN:
    case Arch::MLP:
      weight("w1", in_feats, h, true);
      bias("b1", h);
      weight("w2", h, n_classes, false);
      bias("b2", n_classes);
      break;
    case Arch::GIN:
      weight("l1.wa", in_feats, h, true);
      bias("l1.ba", h);
      weight("l1.wb", h, h, false);
      bias("l1.bb", h);
      weight("l2.wa", h, h, false);
      bias("l2.ba", h);
      weight("l2.wb", h, n_classes, false);
      bias("l2.bb", n_classes);
      break;
    case Arch::TAGCN: {
      for (int k = 0; k <= spec.tagcn_hops; ++k)
        weight("l1.w" + std::to_string(k), in_feats, h, true);
      bias("b1", h);
      for (int k = 0; k <= spec.tagcn_hops; ++k)
        weight("l2.w" + std::to_string(k), h, n_classes, false);
      bias("b2", n_classes);
      break;
    }
  }
  return lay;
}

}  // namespace detail

// Glorot-uniform weights, zero biases, one derived stream per tensor.
inline ModelParams init_params(const ModelSpec& spec, int in_feats, int n_classes,
                               std::uint64_t seed) {
  if (spec.hidden_dim < 1) throw std::invalid_argument("init_params: hidden_dim must be >= 1");
  if (in_feats < 1) throw std::invalid_argument("init_params: empty feature set");
  const auto lay = detail::param_layout(spec, in_feats, n_classes);
  ModelParams p;
  p.tensors.reserve(lay.shapes.size());
  for (size_t t = 0; t < lay.shapes.size(); ++t) {
    const auto [r, c] = lay.shapes[t];
    Tensor w(r, c);
    const bool is_bias = r == 1 && std::find(lay.bias_indices.begin(), lay.bias_indices.end(),
                                             t) != lay.bias_indices.end();
    if (!is_bias) {
      Rng rng = substream(seed, Stream::Init, static_cast<std::uint64_t>(t));
      const double bound = std::sqrt(6.0 / (r + c));
      for (double& v : w.data) v = (2.0 * rng.uniform() - 1.0) * bound;
    }
    p.tensors.push_back(std::move(w));
  }
  return p;
}

// Logits before the log-softmax head. X must already be column-selected to
// the active features.
inline Tensor forward_eval(const ModelSpec& spec, const ModelParams& params,
                           const GraphOps& ops, const Tensor& x) {
  const auto& t = params.tensors;
  auto expect = [&](size_t n) {
    if (t.size() != n)
      throw std::invalid_argument("forward: parameter count mismatch for " +
                                  std::string(arch_name(spec.arch)));
  };
  switch (spec.arch) {
    case Arch::MLP: {
      expect(spec.bias ? 4u : 2u);
      const Tensor h = spec.bias ? relu(add_bias(matmul(x, t[0]), t[1]))
                                 : relu(matmul(x, t[0]));
      return spec.bias ? add_bias(matmul(h, t[2]), t[3]) : matmul(h, t[1]);
    }
    case Arch::GCN: {
      expect(spec.bias ? 4u : 2u);
      const Tensor a1 = spmm(ops.rw, matmul(x, t[0]));
      const Tensor h = spec.bias ? relu(add_bias(a1, t[1])) : relu(a1);
      const Tensor a2 = spmm(ops.rw, matmul(h, spec.bias ? t[2] : t[1]));
      return spec.bias ? add_bias(a2, t[3]) : a2;
    }
    case Arch::GIN: {
      expect(spec.bias ? 8u : 4u);
      auto layer = [&](const Tensor& h, size_t wa, size_t ba, size_t wb, size_t bb) {
        const Tensor u = add(h, spmm(*ops.raw, h));  // (1 + eps) h + A h with eps = 0
        Tensor inner = matmul(u, t[wa]);
        if (spec.bias) inner = add_bias(inner, t[ba]);
        inner = relu(inner);
        Tensor out = matmul(inner, t[wb]);
        if (spec.bias) out = add_bias(out, t[bb]);
        return out;
      };
      const Tensor h1 = spec.bias ? relu(layer(x, 0, 1, 2, 3)) : relu(layer(x, 0, 0, 1, 0));
      return spec.bias ? layer(h1, 4, 5, 6, 7) : layer(h1, 2, 0, 3, 0);
    }
    case Arch::TAGCN: {
      const int K = spec.tagcn_hops;
      const size_t per_layer = static_cast<size_t>(K) + 1;
      expect(2 * per_layer + (spec.bias ? 2u : 0u));
      auto layer = [&](const Tensor& h, size_t w0, int bias_idx) {
        Tensor hop = h;
        Tensor acc = matmul(hop, t[w0]);
        for (int k = 1; k <= K; ++k) {
          hop = spmm(ops.sym, hop);
          acc = add(acc, matmul(hop, t[w0 + static_cast<size_t>(k)]));
        }
        if (spec.bias) acc = add_bias(acc, t[static_cast<size_t>(bias_idx)]);
        return acc;
      };
      const size_t b1 = per_layer;
      const size_t w2 = spec.bias ? per_layer + 1 : per_layer;
      const size_t b2 = spec.bias ? 2 * per_layer + 1 : 0;
      const Tensor h1 = relu(layer(x, 0, static_cast<int>(b1)));
      return layer(h1, w2, static_cast<int>(b2));
    }
  }
  throw std::logic_error("forward: unreachable");
}

// Tape twin of forward_eval; both paths call the same kernels in the same
// order, so logits are bit-identical.
inline Tape::Id forward_tape(Tape& tape, const ModelSpec& spec, const std::vector<Tape::Id>& t,
                             const GraphOps& ops, Tape::Id x) {
  switch (spec.arch) {
    case Arch::MLP: {
      Tape::Id h = tape.matmul(x, t[0]);
      if (spec.bias) h = tape.add_bias(h, t[1]);
      h = tape.relu(h);
      Tape::Id out = tape.matmul(h, spec.bias ? t[2] : t[1]);
      if (spec.bias) out = tape.add_bias(out, t[3]);
      return out;
    }
    case Arch::GCN: {
      Tape::Id a1 = tape.spmm(&ops.rw, tape.matmul(x, t[0]));
      if (spec.bias) a1 = tape.add_bias(a1, t[1]);
      const Tape::Id h = tape.relu(a1);
      Tape::Id a2 = tape.spmm(&ops.rw, tape.matmul(h, spec.bias ? t[2] : t[1]));
      if (spec.bias) a2 = tape.add_bias(a2, t[3]);
      return a2;
    }
    case Arch::GIN: {
      auto layer = [&](Tape::Id h, size_t wa, size_t ba, size_t wb, size_t bb) {
        const Tape::Id u = tape.add(h, tape.spmm(ops.raw, h));
        Tape::Id inner = tape.matmul(u, t[wa]);
        if (spec.bias) inner = tape.add_bias(inner, t[ba]);
        inner = tape.relu(inner);
        Tape::Id out = tape.matmul(inner, t[wb]);
        if (spec.bias) out = tape.add_bias(out, t[bb]);
        return out;
      };
      const Tape::Id h1 = spec.bias ? tape.relu(layer(x, 0, 1, 2, 3))
                                    : tape.relu(layer(x, 0, 0, 1, 0));
      return spec.bias ? layer(h1, 4, 5, 6, 7) : layer(h1, 2, 0, 3, 0);
    }
    case Arch::TAGCN: {
      const int K = spec.tagcn_hops;
      const size_t per_layer = static_cast<size_t>(K) + 1;
      auto layer = [&](Tape::Id h, size_t w0, size_t bias_idx) {
        Tape::Id hop = h;
        Tape::Id acc = tape.matmul(hop, t[w0]);
        for (int k = 1; k <= K; ++k) {
          hop = tape.spmm(&ops.sym, hop);
          acc = tape.add(acc, tape.matmul(hop, t[w0 + static_cast<size_t>(k)]));
        }
        if (spec.bias) acc = tape.add_bias(acc, t[bias_idx]);
        return acc;
      };
      const size_t b1 = per_layer;
      const size_t w2 = spec.bias ? per_layer + 1 : per_layer;
      const size_t b2 = spec.bias ? 2 * per_layer + 1 : 0;
      const Tape::Id h1 = tape.relu(layer(x, 0, b1));
      return layer(h1, w2, b2);
    }
  }
  throw std::logic_error("forward: unreachable");
}

struct TrainHyper {
  int epochs = 400;
  AdamConfig adam;
};

struct EpochStat {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  int active_count = 0;
};

struct TrainRecord {
  std::vector<EpochStat> epochs;
  ModelParams params;
};

// Owns parameters and optimizer state; run_epoch does one full-batch update.
// prune_to lets the adaptive loop drop feature columns mid-run while the
// surviving first-layer rows keep their trained values.
class Trainer {
 public:
  Trainer(ModelSpec spec, const Graph& graph, const GraphOps& ops, FeatureMask mask,
          std::uint64_t seed, AdamConfig adam_cfg)
      : spec_(spec), graph_(&graph), ops_(&ops), mask_(std::move(mask)) {
    if (mask_.size() != graph.n_feats)
      throw std::invalid_argument("train: feature mask length mismatch");
    if (mask_.active_count() == 0) throw std::runtime_error("train: empty feature set");
    int train_nodes = 0;
    for (std::uint8_t b : graph.train_mask) train_nodes += b ? 1 : 0;
    if (train_nodes == 0) throw std::runtime_error("train: empty train mask");
    x_active_ = select_columns(graph.features, mask_.active_indices());
    params_ = init_params(spec_, x_active_.cols, graph.n_classes, seed);
    opt_ = AdamState::for_params(params_.tensors, adam_cfg);
  }

  EpochStat run_epoch() {
    Tape tape;
    std::vector<Tape::Id> pids;
    pids.reserve(params_.tensors.size());
    for (const auto& t : params_.tensors) pids.push_back(tape.leaf(t, true));
    const Tape::Id x = tape.leaf(x_active_, false);
    const Tape::Id logits = forward_tape(tape, spec_, pids, *ops_, x);
    const Tape::Id logp = tape.log_softmax_rows(logits);
    const Tape::Id loss = tape.nll_masked(logp, graph_->labels, graph_->train_mask);
    tape.backward(loss);

    std::vector<Tensor> grads;
    grads.reserve(pids.size());
    for (Tape::Id id : pids) grads.push_back(tape.grad(id));
    adam_step(opt_, params_.tensors, grads);

    ++epoch_;
    EpochStat st;
    st.epoch = epoch_;
    st.train_loss = tape.value(loss).data[0];
    const Tensor post = forward_eval(spec_, params_, *ops_, x_active_);
    st.val_acc = accuracy(post, graph_->labels, graph_->val_mask);
    st.test_acc = accuracy(post, graph_->labels, graph_->test_mask);
    st.active_count = mask_.active_count();
    return st;
  }

  // keep_original: subset of currently active original feature indices that
  // survive. First-layer rows of dropped features are deleted; everything
  // else is untouched, optimizer moments included.
  void prune_to(const std::vector<int>& keep_original) {
    const std::vector<int> current = mask_.active_indices();
    std::vector<int> keep_rows;
    keep_rows.reserve(keep_original.size());
    for (size_t r = 0; r < current.size(); ++r)
      if (std::find(keep_original.begin(), keep_original.end(), current[r]) !=
          keep_original.end())
        keep_rows.push_back(static_cast<int>(r));
    if (keep_rows.size() != keep_original.size())
      throw std::invalid_argument("prune_to: keep set is not a subset of active features");
    if (keep_rows.empty()) throw std::runtime_error("prune_to: empty feature set");

    const auto lay = detail::param_layout(spec_, x_active_.cols, graph_->n_classes);
    for (size_t idx : lay.input_dim_indices) {
      Tensor& w = params_.tensors[idx];
      Tensor next(static_cast<int>(keep_rows.size()), w.cols);
      for (size_t r = 0; r < keep_rows.size(); ++r)
        for (int c = 0; c < w.cols; ++c) next(static_cast<int>(r), c) = w(keep_rows[r], c);
      w = std::move(next);
      opt_.prune_rows(idx, keep_rows);
    }
    std::vector<std::uint8_t> bits(mask_.size(), 0);
    for (int m : keep_original) bits[m] = 1;
    mask_ = FeatureMask(std::move(bits));
    x_active_ = select_columns(graph_->features, mask_.active_indices());
  }

  const ModelSpec& spec() const { return spec_; }
  const ModelParams& params() const { return params_; }
  const FeatureMask& mask() const { return mask_; }
  const Tensor& active_features() const { return x_active_; }
  int epoch() const { return epoch_; }

 private:
  ModelSpec spec_;
  const Graph* graph_;
  const GraphOps* ops_;
  FeatureMask mask_;
  Tensor x_active_;
  ModelParams params_;
  AdamState opt_;
  int epoch_ = 0;
};

// Full-batch training with a fixed feature mask; deterministic given seed.
inline TrainRecord train(const ModelSpec& spec, const Graph& graph, const GraphOps& ops,
                         const FeatureMask& mask, const TrainHyper& hyper, std::uint64_t seed) {
  Trainer tr(spec, graph, ops, mask, seed, hyper.adam);
  TrainRecord rec;
  rec.epochs.reserve(hyper.epochs);
  for (int e = 0; e < hyper.epochs; ++e) rec.epochs.push_back(tr.run_epoch());
  rec.params = tr.params();
  return rec;
}

inline TrainRecord train(const ModelSpec& spec, const Graph& graph, const FeatureMask& mask,
                         const TrainHyper& hyper, std::uint64_t seed) {
  const GraphOps ops = make_graph_ops(graph);
  return train(spec, graph, ops, mask, hyper, seed);
}

// Test accuracy at the epoch of maximum validation accuracy (earliest on
// ties).
inline EpochStat best_val_epoch(const std::vector<EpochStat>& epochs) {
  if (epochs.empty()) throw std::invalid_argument("best_val_epoch: empty record");
  size_t best = 0;
  for (size_t i = 1; i < epochs.size(); ++i)
    if (epochs[i].val_acc > epochs[best].val_acc) best = i;
  return epochs[best];
}

}  // namespace npt
