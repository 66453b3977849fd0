#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "stegnet/errors.hpp"
#include "stegnet/model.hpp"

namespace stegnet {

// Adam with bias correction. Moment buffers mirror the canonical parameter
// block order of param_blocks().
template <typename T>
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step_count = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  static AdamState like(const ModelParams<T>& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const auto& block : param_blocks(params)) {
      s.m.emplace_back(block.values.size(), T(0));
      s.v.emplace_back(block.values.size(), T(0));
    }
    return s;
  }
};

// m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2;
// p -= lr * mhat / (sqrt(vhat) + eps).  Rejects non-finite gradients before
// touching any state so a diverged step cannot corrupt the model.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelGrads<T>& grads,
               AdamState<T>& state) {
  auto p = param_blocks(params);
  auto g = grad_blocks(grads);
  if (p.size() != g.size() || p.size() != state.m.size() ||
      p.size() != state.v.size()) {
    throw std::invalid_argument("adam_step: state does not match parameters");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].values.size() != g[i].values.size() ||
        p[i].values.size() != state.m[i].size()) {
      throw std::invalid_argument("adam_step: block size mismatch");
    }
    for (const T gv : g[i].values) {
      if (!std::isfinite(static_cast<double>(gv))) {
        throw NumericError("adam_step: non-finite gradient, step rejected");
      }
    }
  }

  state.step_count += 1;
  const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
  const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
  for (std::size_t i = 0; i < p.size(); ++i) {
    std::vector<T>& m = state.m[i];
    std::vector<T>& v = state.v[i];
    for (std::size_t j = 0; j < p[i].values.size(); ++j) {
      const double gv = static_cast<double>(g[i].values[j]);
      const double mj = state.beta1 * static_cast<double>(m[j]) + (1.0 - state.beta1) * gv;
      const double vj = state.beta2 * static_cast<double>(v[j]) + (1.0 - state.beta2) * gv * gv;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double mhat = mj / corr1;
      const double vhat = vj / corr2;
      p[i].values[j] -= static_cast<T>(state.lr * mhat / (std::sqrt(vhat) + state.epsilon));
    }
  }
}

}  // namespace stegnet
