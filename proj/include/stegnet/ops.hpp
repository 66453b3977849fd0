#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stegnet/tensor.hpp"

namespace stegnet {

// 2D convolution filter bank. Kernel dims must be odd so same padding at
// stride 1 preserves the spatial size exactly.
template <typename T>
struct ConvKernel {
  int out_channels = 1;
  int in_channels = 1;
  int kh = 1;
  int kw = 1;
  std::vector<T> weights;  // [out][in][kh][kw] row-major
  std::vector<T> bias;     // [out]

  ConvKernel() : weights(1, T(0)), bias(1, T(0)) {}

  ConvKernel(int out, int in, int kernel_h, int kernel_w)
      : out_channels(out), in_channels(in), kh(kernel_h), kw(kernel_w) {
    if (out < 1 || in < 1 || kernel_h < 1 || kernel_w < 1) {
      throw std::invalid_argument("conv kernel dimensions must all be >= 1");
    }
    if (kernel_h % 2 == 0 || kernel_w % 2 == 0) {
      throw std::invalid_argument(
          "conv kernel spatial dims must be odd for same padding, got " +
          std::to_string(kernel_h) + "x" + std::to_string(kernel_w));
    }
    weights.assign(weight_count(), T(0));
    bias.assign(static_cast<std::size_t>(out), T(0));
  }

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kh * kw;
  }

  bool operator==(const ConvKernel&) const = default;

  T& w(int o, int c, int ky, int kx) {
    return weights[((static_cast<std::size_t>(o) * in_channels + c) * kh + ky) * kw + kx];
  }
  const T& w(int o, int c, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_channels + c) * kh + ky) * kw + kx];
  }
};

// Same padding, stride 1, zero-filled borders:
//   out[n,o,y,x] = bias[o] + sum_{c,ky,kx} in[n,c,y+ky-kh/2,x+kx-kw/2] * w[o,c,ky,kx]
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvKernel<T>& kernel) {
  if (input.channels() != kernel.in_channels) {
    throw std::invalid_argument(
        "conv2d: input has " + std::to_string(input.channels()) +
        " channels, kernel expects " + std::to_string(kernel.in_channels));
  }
  const int N = input.batch(), H = input.height(), W = input.width();
  const int ph = kernel.kh / 2, pw = kernel.kw / 2;
  Tensor<T> out(N, kernel.out_channels, H, W);
  for (int n = 0; n < N; ++n) {
    for (int o = 0; o < kernel.out_channels; ++o) {
      T* plane = &out.at(n, o, 0, 0);
      std::fill(plane, plane + static_cast<std::size_t>(H) * W, kernel.bias[o]);
      for (int c = 0; c < kernel.in_channels; ++c) {
        for (int ky = 0; ky < kernel.kh; ++ky) {
          const int y_lo = std::max(0, ph - ky);
          const int y_hi = std::min(H, H + ph - ky);
          for (int kx = 0; kx < kernel.kw; ++kx) {
            const T wv = kernel.w(o, c, ky, kx);
            const int x_lo = std::max(0, pw - kx);
            const int x_hi = std::min(W, W + pw - kx);
            for (int y = y_lo; y < y_hi; ++y) {
              const T* in_row = &input.at(n, c, y + ky - ph, x_lo + kx - pw);
              T* out_row = &out.at(n, o, y, x_lo);
              for (int x = 0; x < x_hi - x_lo; ++x) out_row[x] += wv * in_row[x];
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename T>
struct ConvGrads {
  Tensor<T> input;         // same shape as the forward input
  std::vector<T> weights;  // same layout as kernel.weights
  std::vector<T> bias;     // same length as kernel.bias
};

// Exact analytic gradients of sum(grad_out * conv2d_forward(input, kernel)).
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& input,
                             const ConvKernel<T>& kernel) {
  if (input.channels() != kernel.in_channels) {
    throw std::invalid_argument("conv2d_backward: input/kernel channel mismatch");
  }
  if (grad_out.batch() != input.batch() ||
      grad_out.channels() != kernel.out_channels ||
      grad_out.height() != input.height() ||
      grad_out.width() != input.width()) {
    throw std::invalid_argument("conv2d_backward: grad_out shape " +
                                shape_string(grad_out) +
                                " does not match forward output");
  }
  const int N = input.batch(), H = input.height(), W = input.width();
  const int ph = kernel.kh / 2, pw = kernel.kw / 2;
  ConvGrads<T> g;
  g.input = Tensor<T>(N, input.channels(), H, W);
  g.weights.assign(kernel.weight_count(), T(0));
  g.bias.assign(kernel.bias.size(), T(0));

  for (int n = 0; n < N; ++n) {
    for (int o = 0; o < kernel.out_channels; ++o) {
      const T* go_plane = &grad_out.at(n, o, 0, 0);
      T bias_acc = T(0);
      for (std::size_t i = 0; i < static_cast<std::size_t>(H) * W; ++i) {
        bias_acc += go_plane[i];
      }
      g.bias[static_cast<std::size_t>(o)] += bias_acc;
      for (int c = 0; c < kernel.in_channels; ++c) {
        for (int ky = 0; ky < kernel.kh; ++ky) {
          const int y_lo = std::max(0, ph - ky);
          const int y_hi = std::min(H, H + ph - ky);
          for (int kx = 0; kx < kernel.kw; ++kx) {
            const T wv = kernel.w(o, c, ky, kx);
            const int x_lo = std::max(0, pw - kx);
            const int x_hi = std::min(W, W + pw - kx);
            T w_acc = T(0);
            for (int y = y_lo; y < y_hi; ++y) {
              const T* in_row = &input.at(n, c, y + ky - ph, x_lo + kx - pw);
              T* gin_row = &g.input.at(n, c, y + ky - ph, x_lo + kx - pw);
              const T* go_row = &grad_out.at(n, o, y, x_lo);
              for (int x = 0; x < x_hi - x_lo; ++x) {
                w_acc += in_row[x] * go_row[x];
                gin_row[x] += wv * go_row[x];
              }
            }
            g.weights[((static_cast<std::size_t>(o) * kernel.in_channels + c) *
                           kernel.kh + ky) * kernel.kw + kx] += w_acc;
          }
        }
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.data()) v = std::max(v, T(0));
  return out;
}

// Mask by (input > 0); the subgradient at exactly 0 is 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& input) {
  if (!grad_out.same_shape(input)) {
    throw std::invalid_argument("relu_backward: shape mismatch " +
                                shape_string(grad_out) + " vs " +
                                shape_string(input));
  }
  Tensor<T> g = grad_out;
  const std::vector<T>& in = input.data();
  std::vector<T>& gd = g.data();
  for (std::size_t i = 0; i < gd.size(); ++i) {
    if (!(in[i] > T(0))) gd[i] = T(0);
  }
  return g;
}

// Stack b's channels after a's. Gradient counterpart is split_channels.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.batch() != b.batch() || a.height() != b.height() ||
      a.width() != b.width()) {
    throw std::invalid_argument("concat_channels: batch/spatial mismatch " +
                                shape_string(a) + " vs " + shape_string(b));
  }
  Tensor<T> out(a.batch(), a.channels() + b.channels(), a.height(), a.width());
  const std::size_t plane = static_cast<std::size_t>(a.height()) * a.width();
  for (int n = 0; n < a.batch(); ++n) {
    std::copy_n(&a.at(n, 0, 0, 0), plane * a.channels(), &out.at(n, 0, 0, 0));
    std::copy_n(&b.at(n, 0, 0, 0), plane * b.channels(),
                &out.at(n, a.channels(), 0, 0));
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> split_channels(const Tensor<T>& t,
                                               int front_channels) {
  if (front_channels < 1 || front_channels >= t.channels()) {
    throw std::invalid_argument("split_channels: split point " +
                                std::to_string(front_channels) +
                                " out of range for " + shape_string(t));
  }
  Tensor<T> a(t.batch(), front_channels, t.height(), t.width());
  Tensor<T> b(t.batch(), t.channels() - front_channels, t.height(), t.width());
  const std::size_t plane = static_cast<std::size_t>(t.height()) * t.width();
  for (int n = 0; n < t.batch(); ++n) {
    std::copy_n(&t.at(n, 0, 0, 0), plane * a.channels(), &a.at(n, 0, 0, 0));
    std::copy_n(&t.at(n, front_channels, 0, 0), plane * b.channels(),
                &b.at(n, 0, 0, 0));
  }
  return {std::move(a), std::move(b)};
}

}  // namespace stegnet
