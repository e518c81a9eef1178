#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "npt/tensor.hpp"

namespace npt {

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;  // classic coupled L2: added to the gradient
};

struct AdamState {
  AdamConfig cfg;
  long step = 0;
  std::vector<Tensor> m;  // first moments, shaped like the parameters
  std::vector<Tensor> v;  // second moments

  static AdamState for_params(const std::vector<Tensor>& params, AdamConfig cfg) {
    AdamState s;
    s.cfg = cfg;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const auto& p : params) {
      s.m.emplace_back(p.rows, p.cols);
      s.v.emplace_back(p.rows, p.cols);
    }
    return s;
  }

  // Drops rows of the moment buffers for parameter `idx`, mirroring column
  // removal on the parameter itself.
  void prune_rows(size_t idx, const std::vector<int>& keep_rows) {
    for (auto* buf : {&m[idx], &v[idx]}) {
      Tensor next(static_cast<int>(keep_rows.size()), buf->cols);
      for (size_t r = 0; r < keep_rows.size(); ++r)
        for (int c = 0; c < buf->cols; ++c) next(static_cast<int>(r), c) = (*buf)(keep_rows[r], c);
      *buf = std::move(next);
    }
  }
};

inline void adam_step(AdamState& s, std::vector<Tensor>& params,
                      const std::vector<Tensor>& grads) {
  if (params.size() != grads.size() || params.size() != s.m.size())
    throw std::invalid_argument("adam_step: parameter/gradient count mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]))
      throw std::invalid_argument("adam_step: shape mismatch (" + params[i].shape_str() +
                                  " vs " + grads[i].shape_str() + ")");
    if (!grads[i].all_finite()) throw std::runtime_error("adam_step: non-finite gradient");
  }
  s.step += 1;
  const double bc1 = 1.0 - std::pow(s.cfg.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.cfg.beta2, static_cast<double>(s.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    Tensor& m = s.m[i];
    Tensor& v = s.v[i];
    const Tensor& g = grads[i];
    for (size_t k = 0; k < p.data.size(); ++k) {
      const double gk = g.data[k] + s.cfg.weight_decay * p.data[k];
      m.data[k] = s.cfg.beta1 * m.data[k] + (1.0 - s.cfg.beta1) * gk;
      v.data[k] = s.cfg.beta2 * v.data[k] + (1.0 - s.cfg.beta2) * gk * gk;
      const double mhat = m.data[k] / bc1;
      const double vhat = v.data[k] / bc2;
      p.data[k] -= s.cfg.lr * mhat / (std::sqrt(vhat) + s.cfg.eps);
    }
  }
}

}  // namespace npt
