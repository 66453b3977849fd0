#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stegnet {

// Dense N x C x H x W array, row-major with W innermost. All dimensions are
// at least 1. T is float in production and double in gradient-check tests.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  Tensor(int n, int c, int h, int w) : n_(n), c_(c), h_(h), w_(w) {
    check_dims(n, c, h, w);
    data_.assign(static_cast<std::size_t>(n) * c * h * w, T(0));
  }

  Tensor(int n, int c, int h, int w, std::vector<T> data)
      : n_(n), c_(c), h_(h), w_(w), data_(std::move(data)) {
    check_dims(n, c, h, w);
    if (data_.size() != static_cast<std::size_t>(n) * c * h * w) {
      throw std::invalid_argument("tensor data length " +
                                  std::to_string(data_.size()) +
                                  " does not match shape");
    }
  }

  int batch() const { return n_; }
  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  std::array<int, 4> shape() const { return {n_, c_, h_, w_}; }
  std::size_t size() const { return data_.size(); }

  T& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  const T& at(int n, int c, int y, int x) const {
    return data_[index(n, c, y, x)];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Tensor& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  bool all_finite() const {
    for (const T v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

 private:
  static void check_dims(int n, int c, int h, int w) {
    if (n < 1 || c < 1 || h < 1 || w < 1) {
      throw std::invalid_argument("tensor dimensions must all be >= 1, got " +
                                  shape_string(n, c, h, w));
    }
  }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x;
  }

  static std::string shape_string(int n, int c, int h, int w) {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
  }

  int n_ = 1, c_ = 1, h_ = 1, w_ = 1;
  std::vector<T> data_{T(0)};
};

template <typename T>
std::string shape_string(const Tensor<T>& t) {
  return std::to_string(t.batch()) + "x" + std::to_string(t.channels()) + "x" +
         std::to_string(t.height()) + "x" + std::to_string(t.width());
}

}  // namespace stegnet
