#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "npt/feature_mask.hpp"
#include "npt/graph.hpp"
#include "npt/models.hpp"
#include "npt/perturb.hpp"
#include "npt/rng.hpp"
#include "npt/tensor.hpp"

namespace npt {

enum class Metric { NPT, NPTMask, MI, TFI, HAttr, HEuc, HGE, Random };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::NPT: return "NPT";
    case Metric::NPTMask: return "NPT-mask";
    case Metric::MI: return "MI";
    case Metric::TFI: return "TFI";
    case Metric::HAttr: return "h_attr";
    case Metric::HEuc: return "h_Euc";
    case Metric::HGE: return "h_GE";
    case Metric::Random: return "random";
  }
  return "?";
}

inline Metric metric_from_name(const std::string& s) {
  for (Metric m : {Metric::NPT, Metric::NPTMask, Metric::MI, Metric::TFI, Metric::HAttr,
                   Metric::HEuc, Metric::HGE, Metric::Random})
    if (s == metric_name(m)) return m;
  throw std::invalid_argument("unknown metric '" + s + "'");
}

inline const std::vector<Metric>& all_metrics() {
  static const std::vector<Metric> ms = {Metric::NPT,   Metric::NPTMask, Metric::MI,
                                         Metric::TFI,   Metric::HAttr,   Metric::HEuc,
                                         Metric::HGE,   Metric::Random};
  return ms;
}

enum class EvalSplit { Train, Val, Test };

inline const char* split_name(EvalSplit s) {
  switch (s) {
    case EvalSplit::Train: return "train";
    case EvalSplit::Val: return "val";
    case EvalSplit::Test: return "test";
  }
  return "?";
}

inline EvalSplit split_from_name(const std::string& s) {
  if (s == "train") return EvalSplit::Train;
  if (s == "val") return EvalSplit::Val;
  if (s == "test") return EvalSplit::Test;
  throw std::invalid_argument("unknown split '" + s + "'");
}

inline const std::vector<std::uint8_t>& split_mask(const Graph& g, EvalSplit s) {
  switch (s) {
    case EvalSplit::Train: return g.train_mask;
    case EvalSplit::Val: return g.val_mask;
    case EvalSplit::Test: return g.test_mask;
  }
  throw std::logic_error("split_mask: unreachable");
}

// Per-feature scores over the original feature universe; inactive entries
// hold the not-scored sentinel (NaN).
struct ImportanceReport {
  Metric metric = Metric::NPT;
  int k_shuffles = 0;
  EvalSplit eval_split = EvalSplit::Val;
  std::vector<double> scores;
  std::vector<std::uint8_t> active;

  static constexpr double kNotScored = std::numeric_limits<double>::quiet_NaN();
};

// Everything scoring needs. `round` tags the scoring round so permutation
// sub-streams differ across checkpoints but not across scheduling.
struct ScoreContext {
  const ModelSpec* spec = nullptr;
  const ModelParams* params = nullptr;
  const Graph* graph = nullptr;
  const GraphOps* ops = nullptr;
  const FeatureMask* mask = nullptr;
  EvalSplit eval = EvalSplit::Val;
  int mi_bins = 16;
  int tfi_passes = 2;
  std::uint64_t seed = 0;
  std::uint64_t round = 0;
};

namespace detail {

inline void check_scorable(const ScoreContext& ctx, int m) {
  if (m < 0 || m >= ctx.mask->size())
    throw std::invalid_argument("score: feature index out of range");
  if (!ctx.mask->is_active(m))
    throw std::invalid_argument("score: feature " + std::to_string(m) + " is inactive");
}

inline double eval_accuracy(const ScoreContext& ctx, const Tensor& x_active) {
  const Tensor logits = forward_eval(*ctx.spec, *ctx.params, *ctx.ops, x_active);
  return accuracy(logits, ctx.graph->labels, split_mask(*ctx.graph, ctx.eval));
}

// Average accuracy drop over K fresh uniform permutations of one active
// column of the pruned matrix. x_active is restored before returning.
inline double npt_drop(const ScoreContext& ctx, Tensor& x_active, int local_col,
                       std::uint64_t original_m, int K, double baseline) {
  double acc_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    Rng rng = substream(ctx.seed, Stream::Score, ctx.round, original_m,
                        static_cast<std::uint64_t>(k));
    const Permutation perm = sample_permutation(x_active.rows, rng);
    const std::vector<double> saved = permute_feature_inplace(x_active, local_col, perm);
    acc_sum += eval_accuracy(ctx, x_active);
    restore_column(x_active, local_col, saved);
  }
  return baseline - acc_sum / K;
}

}  // namespace detail

// Permutation-test importance of feature m: mean drop in eval-split accuracy
// over K uniform column permutations.
inline double npt_score(const ScoreContext& ctx, int m, int K) {
  if (K < 1) throw std::invalid_argument("npt_score: K must be >= 1");
  detail::check_scorable(ctx, m);
  const std::vector<int> active = ctx.mask->active_indices();
  Tensor x_active = select_columns(ctx.graph->features, active);
  const double baseline = detail::eval_accuracy(ctx, x_active);
  const int local = static_cast<int>(std::lower_bound(active.begin(), active.end(), m) -
                                     active.begin());
  return detail::npt_drop(ctx, x_active, local, static_cast<std::uint64_t>(m), K, baseline);
}

// Masking variant: the perturbation zeroes the column; deterministic.
inline double npt_mask_score(const ScoreContext& ctx, int m) {
  detail::check_scorable(ctx, m);
  const std::vector<int> active = ctx.mask->active_indices();
  Tensor x_active = select_columns(ctx.graph->features, active);
  const double baseline = detail::eval_accuracy(ctx, x_active);
  const int local = static_cast<int>(std::lower_bound(active.begin(), active.end(), m) -
                                     active.begin());
  std::vector<double> saved(x_active.rows);
  for (int i = 0; i < x_active.rows; ++i) {
    saved[i] = x_active(i, local);
    x_active(i, local) = 0.0;
  }
  const double dropped = detail::eval_accuracy(ctx, x_active);
  restore_column(x_active, local, saved);
  return baseline - dropped;
}

// Plug-in mutual information (nats) between a quantile-binned column and the
// labels, over masked rows. Degenerate quantile edges are merged, so a
// constant column lands in one bin and scores 0.
inline double mi_score(const std::vector<double>& column, const std::vector<int>& labels,
                       const std::vector<std::uint8_t>& mask, int n_bins) {
  if (n_bins < 2) throw std::invalid_argument("mi_score: n_bins must be >= 2");
  if (column.size() != labels.size() || column.size() != mask.size())
    throw std::invalid_argument("mi_score: length mismatch");
  std::vector<double> vals;
  std::vector<int> ys;
  for (size_t i = 0; i < column.size(); ++i) {
    if (!mask[i]) continue;
    vals.push_back(column[i]);
    ys.push_back(labels[i]);
  }
  if (vals.empty()) throw std::invalid_argument("mi_score: empty mask");
  const int n = static_cast<int>(vals.size());

  std::vector<double> sorted = vals;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> edges;
  for (int k = 1; k < n_bins; ++k) {
    const int pos = static_cast<int>(static_cast<std::int64_t>(k) * n / n_bins);
    edges.push_back(sorted[std::min(pos, n - 1)]);
  }
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  const int bins = static_cast<int>(edges.size()) + 1;

  const int n_classes = 1 + *std::max_element(ys.begin(), ys.end());
  std::vector<std::vector<int>> joint(bins, std::vector<int>(n_classes, 0));
  std::vector<int> bin_count(bins, 0), class_count(n_classes, 0);
  for (int i = 0; i < n; ++i) {
    const int b = static_cast<int>(std::lower_bound(edges.begin(), edges.end(), vals[i]) -
                                   edges.begin());
    ++joint[b][ys[i]];
    ++bin_count[b];
    ++class_count[ys[i]];
  }
  double mi = 0.0;
  for (int b = 0; b < bins; ++b) {
    for (int c = 0; c < n_classes; ++c) {
      if (joint[b][c] == 0) continue;
      const double pbc = static_cast<double>(joint[b][c]) / n;
      const double pb = static_cast<double>(bin_count[b]) / n;
      const double pc = static_cast<double>(class_count[c]) / n;
      mi += pbc * std::log(pbc / (pb * pc));
    }
  }
  return mi;
}

// MI after a low-pass random-walk filter: F = rw^passes X, one MI per column.
inline std::vector<double> tfi_score(const Tensor& x, const CsrMatrix& rw,
                                     const std::vector<int>& labels,
                                     const std::vector<std::uint8_t>& mask, int n_bins,
                                     int passes) {
  Tensor f = x;
  for (int p = 0; p < passes; ++p) f = spmm(rw, f);
  std::vector<double> out(x.cols);
  std::vector<double> col(x.rows);
  for (int m = 0; m < x.cols; ++m) {
    for (int i = 0; i < x.rows; ++i) col[i] = f(i, m);
    out[m] = mi_score(col, labels, mask, n_bins);
  }
  return out;
}

enum class Homophily { Attr, Euc, GE };

// Edge-smoothness scores; one value per column of x. The Euc variant needs a
// degree-preserving random pairing for its null denominator and draws it
// from `rng` (one pairing shared across columns).
inline std::vector<double> homophily_scores(const Tensor& x, const Graph& g, Homophily variant,
                                            Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  std::vector<double> weights;
  for (int i = 0; i < g.n_nodes; ++i) {
    for (int k = g.adjacency.row_ptr[i]; k < g.adjacency.row_ptr[i + 1]; ++k) {
      const int j = g.adjacency.col_idx[k];
      if (j > i && g.adjacency.vals[k] != 0.0) {
        edges.emplace_back(i, j);
        weights.push_back(g.adjacency.vals[k]);
      }
    }
  }
  if (edges.empty()) throw std::runtime_error("homophily undefined: graph has no edges");
  const double n_edges = static_cast<double>(edges.size());

  Permutation pairing;
  if (variant == Homophily::Euc)
    pairing = sample_permutation(static_cast<int>(edges.size()), rng);

  std::vector<double> out(x.cols, 0.0);
  for (int m = 0; m < x.cols; ++m) {
    switch (variant) {
      case Homophily::Attr: {
        std::vector<double> col(x.rows);
        for (int i = 0; i < x.rows; ++i) col[i] = x(i, m);
        std::vector<double> s = col;
        std::sort(s.begin(), s.end());
        const int n = static_cast<int>(s.size());
        const double med = n % 2 == 1 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
        auto sgn = [](double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); };
        int agree = 0;
        for (const auto& [i, j] : edges)
          if (sgn(col[i] - med) == sgn(col[j] - med)) ++agree;
        out[m] = agree / n_edges;
        break;
      }
      case Homophily::Euc: {
        double num = 0.0, den = 0.0;
        for (size_t e = 0; e < edges.size(); ++e) {
          const double d = x(edges[e].first, m) - x(edges[e].second, m);
          num += d * d;
          const double dr = x(edges[e].first, m) -
                            x(edges[static_cast<size_t>(pairing.map[e])].second, m);
          den += dr * dr;
        }
        out[m] = den == 0.0 ? 0.0 : std::clamp(1.0 - num / den, -1.0, 1.0);
        break;
      }
      case Homophily::GE: {
        double quad = 0.0;
        for (size_t e = 0; e < edges.size(); ++e) {
          const double d = x(edges[e].first, m) - x(edges[e].second, m);
          quad += weights[e] * d * d;
        }
        double mean = 0.0;
        for (int i = 0; i < x.rows; ++i) mean += x(i, m);
        mean /= x.rows;
        double var = 0.0;
        for (int i = 0; i < x.rows; ++i) {
          const double d = x(i, m) - mean;
          var += d * d;
        }
        var /= x.rows;  // population variance
        out[m] = var == 0.0 ? 0.0 : 1.0 - quad / (n_edges * var);
        break;
      }
    }
  }
  return out;
}

inline std::vector<double> random_score(int m, Rng& rng) {
  std::vector<double> out(m);
  for (double& v : out) v = rng.uniform();
  return out;
}

// Keeps the ceil(r * |active|) highest-scoring active features; ties at the
// cut keep the lower feature index. Never returns an empty mask.
inline FeatureMask select_top_ratio(const std::vector<double>& scores,
                                    const FeatureMask& active, double r) {
  if (r <= 0.0 || r > 1.0)
    throw std::invalid_argument("select_top_ratio: ratio must be in (0, 1]");
  const std::vector<int> idx = active.active_indices();
  if (idx.empty()) throw std::invalid_argument("select_top_ratio: no active features");
  const int keep = std::max<int>(1, static_cast<int>(std::ceil(r * idx.size())));
  std::vector<int> order = idx;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  std::vector<std::uint8_t> bits(active.size(), 0);
  for (int i = 0; i < keep && i < static_cast<int>(order.size()); ++i) bits[order[i]] = 1;
  return FeatureMask(std::move(bits));
}

// Scores every active feature under one metric. The NPT baseline accuracy is
// evaluated once per call and shared across features (permutation
// independent, identical results).
inline ImportanceReport score_features(Metric metric, const ScoreContext& ctx, int K) {
  const Graph& g = *ctx.graph;
  ImportanceReport rep;
  rep.metric = metric;
  rep.k_shuffles = metric == Metric::NPT ? K : 0;
  rep.eval_split = ctx.eval;
  rep.active = ctx.mask->bits;
  rep.scores.assign(g.n_feats, ImportanceReport::kNotScored);
  const std::vector<int> active = ctx.mask->active_indices();
  if (active.empty()) throw std::invalid_argument("score_features: no active features");

  switch (metric) {
    case Metric::NPT: {
      if (K < 1) throw std::invalid_argument("score_features: K must be >= 1");
      Tensor x_active = select_columns(g.features, active);
      const double baseline = detail::eval_accuracy(ctx, x_active);
      for (size_t a = 0; a < active.size(); ++a)
        rep.scores[active[a]] = detail::npt_drop(ctx, x_active, static_cast<int>(a),
                                                 static_cast<std::uint64_t>(active[a]), K,
                                                 baseline);
      break;
    }
    case Metric::NPTMask: {
      Tensor x_active = select_columns(g.features, active);
      const double baseline = detail::eval_accuracy(ctx, x_active);
      for (size_t a = 0; a < active.size(); ++a) {
        std::vector<double> saved(x_active.rows);
        for (int i = 0; i < x_active.rows; ++i) {
          saved[i] = x_active(i, static_cast<int>(a));
          x_active(i, static_cast<int>(a)) = 0.0;
        }
        rep.scores[active[a]] = baseline - detail::eval_accuracy(ctx, x_active);
        restore_column(x_active, static_cast<int>(a), saved);
      }
      break;
    }
    case Metric::MI: {
      const auto& mask = split_mask(g, ctx.eval);
      std::vector<double> col(g.n_nodes);
      for (int m : active) {
        for (int i = 0; i < g.n_nodes; ++i) col[i] = g.features(i, m);
        rep.scores[m] = mi_score(col, g.labels, mask, ctx.mi_bins);
      }
      break;
    }
    case Metric::TFI: {
      const Tensor x_active = select_columns(g.features, active);
      const std::vector<double> s = tfi_score(x_active, ctx.ops->rw, g.labels,
                                              split_mask(g, ctx.eval), ctx.mi_bins,
                                              ctx.tfi_passes);
      for (size_t a = 0; a < active.size(); ++a) rep.scores[active[a]] = s[a];
      break;
    }
    case Metric::HAttr:
    case Metric::HEuc:
    case Metric::HGE: {
      const Homophily v = metric == Metric::HAttr   ? Homophily::Attr
                          : metric == Metric::HEuc ? Homophily::Euc
                                                    : Homophily::GE;
      Rng rng = substream(ctx.seed, Stream::Pairing, ctx.round);
      const Tensor x_active = select_columns(g.features, active);
      const std::vector<double> s = homophily_scores(x_active, g, v, rng);
      for (size_t a = 0; a < active.size(); ++a) rep.scores[active[a]] = s[a];
      break;
    }
    case Metric::Random: {
      Rng rng = substream(ctx.seed, Stream::RandomScore, ctx.round);
      const std::vector<double> s = random_score(static_cast<int>(active.size()), rng);
      for (size_t a = 0; a < active.size(); ++a) rep.scores[active[a]] = s[a];
      break;
    }
  }
  return rep;
}

}  // namespace npt
