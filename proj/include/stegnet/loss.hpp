#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>

#include "stegnet/model.hpp"
#include "stegnet/tensor.hpp"

namespace stegnet {

struct LossWeights {
  double alpha = 1.0;   // encoder reconstruction weight
  double beta = 1.0;    // decoder reconstruction weight
  double lambda = 1e-4; // L2 weight regularization

  void validate() const {
    if (alpha < 0 || beta < 0 || lambda < 0) {
      throw ConfigError("loss weights must be non-negative");
    }
  }
};

struct LossBreakdown {
  double encoder_term = 0;      // alpha * mean((host - hybrid)^2)
  double decoder_term = 0;      // beta * mean((guest - recovered)^2)
  double regularizer_term = 0;  // lambda * (sum W_e^2 + sum W_d^2), biases excluded
  double total() const { return encoder_term + decoder_term + regularizer_term; }
};

template <typename T>
double mean_squared_error(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("mse: shape mismatch " + shape_string(a) +
                                " vs " + shape_string(b));
  }
  double acc = 0;
  const auto& ad = a.data();
  const auto& bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    const double d = static_cast<double>(ad[i]) - static_cast<double>(bd[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(ad.size());
}

template <typename T>
double squared_weight_norm(const ModelParams<T>& params) {
  double acc = 0;
  for (const auto& block : param_blocks(params)) {
    if (block.is_bias) continue;
    for (const T v : block.values) acc += static_cast<double>(v) * v;
  }
  return acc;
}

// Joint reconstruction loss: the reconstruction norms are per-element means
// so alpha/beta/lambda keep their meaning across image sizes; the weight
// penalty is a plain sum of squares over both networks' conv weights.
template <typename T>
LossBreakdown joint_loss(const Tensor<T>& host, const Tensor<T>& guest,
                         const Tensor<T>& hybrid, const Tensor<T>& recovered,
                         const ModelParams<T>& params, const LossWeights& w) {
  LossBreakdown b;
  b.encoder_term = w.alpha * mean_squared_error(host, hybrid);
  b.decoder_term = w.beta * mean_squared_error(guest, recovered);
  b.regularizer_term = w.lambda * squared_weight_norm(params);
  return b;
}

// d(loss)/d(hybrid) and d(loss)/d(recovered) for the reconstruction terms.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> reconstruction_grads(const Tensor<T>& host,
                                                     const Tensor<T>& guest,
                                                     const Tensor<T>& hybrid,
                                                     const Tensor<T>& recovered,
                                                     const LossWeights& w) {
  if (!host.same_shape(hybrid) || !guest.same_shape(recovered)) {
    throw std::invalid_argument("reconstruction_grads: shape mismatch");
  }
  Tensor<T> ge = hybrid;
  Tensor<T> gd = recovered;
  const double se = 2.0 * w.alpha / static_cast<double>(ge.size());
  const double sd = 2.0 * w.beta / static_cast<double>(gd.size());
  for (std::size_t i = 0; i < ge.size(); ++i) {
    ge.data()[i] = static_cast<T>(se * (static_cast<double>(hybrid.data()[i]) -
                                        static_cast<double>(host.data()[i])));
  }
  for (std::size_t i = 0; i < gd.size(); ++i) {
    gd.data()[i] = static_cast<T>(sd * (static_cast<double>(recovered.data()[i]) -
                                        static_cast<double>(guest.data()[i])));
  }
  return {std::move(ge), std::move(gd)};
}

// Folds the analytic gradient of lambda * ||W||^2 into the weight gradients.
// Biases are not regularized.
template <typename T>
void add_weight_decay(ModelGrads<T>& grads, const ModelParams<T>& params,
                      double lambda) {
  if (lambda == 0) return;
  auto g = grad_blocks(grads);
  auto p = param_blocks(params);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i].is_bias) continue;
    for (std::size_t j = 0; j < g[i].values.size(); ++j) {
      g[i].values[j] += static_cast<T>(2.0 * lambda) * p[i].values[j];
    }
  }
}

}  // namespace stegnet
