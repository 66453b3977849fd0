#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "stegnet/rng.hpp"

namespace stegnet {

// Glorot/Xavier uniform: samples in [-a, a] with a = sqrt(6 / (fan_in + fan_out)).
// For conv kernels fan_in = in_channels*kh*kw and fan_out = out_channels*kh*kw.
template <typename T>
std::vector<T> xavier_init(int fan_in, int fan_out, std::size_t count, Rng& rng) {
  if (fan_in < 1 || fan_out < 1) {
    throw std::invalid_argument("xavier_init: fan_in and fan_out must be >= 1");
  }
  const double a = std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
  std::vector<T> out(count);
  for (T& v : out) v = static_cast<T>(rng.uniform(-a, a));
  return out;
}

inline double xavier_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
}

}  // namespace stegnet
