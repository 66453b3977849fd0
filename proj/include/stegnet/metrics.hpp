#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stegnet/errors.hpp"
#include "stegnet/image.hpp"

namespace stegnet {

struct QualityReport {
  double psnr_db = 0;
  double ssim = 0;
  double bpp = 0;
  double payload_percent = 0;
};

// 10*log10(255^2 / MSE) over all pixels and channels in 8-bit space.
// Identical images report +infinity.
inline double psnr(const ImageSample& a, const ImageSample& b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
    throw std::invalid_argument("psnr: image dimensions differ");
  }
  double se = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    se += d * d;
  }
  if (se == 0) return std::numeric_limits<double>::infinity();
  const double mse = se / static_cast<double>(a.pixels.size());
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace detail {

inline const std::vector<double>& ssim_window() {
  // 11x11 Gaussian, sigma 1.5, normalized to sum 1.
  static const std::vector<double> w = [] {
    std::vector<double> g(11 * 11);
    double sum = 0;
    for (int y = 0; y < 11; ++y) {
      for (int x = 0; x < 11; ++x) {
        const double dy = y - 5, dx = x - 5;
        g[y * 11 + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
        sum += g[y * 11 + x];
      }
    }
    for (double& v : g) v /= sum;
    return g;
  }();
  return w;
}

// Separable Gaussian filter over the valid region (no padding); output is
// (H-10) x (W-10).
inline std::vector<double> gaussian_valid(const std::vector<double>& img, int h,
                                          int w) {
  static const std::vector<double> k1d = [] {
    std::vector<double> k(11);
    double sum = 0;
    for (int i = 0; i < 11; ++i) {
      const double d = i - 5;
      k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      sum += k[i];
    }
    for (double& v : k) v /= sum;
    return k;
  }();

  const int wo = w - 10;
  std::vector<double> horiz(static_cast<std::size_t>(h) * wo, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wo; ++x) {
      double acc = 0;
      for (int i = 0; i < 11; ++i) acc += k1d[i] * img[y * w + x + i];
      horiz[y * wo + x] = acc;
    }
  }
  const int ho = h - 10;
  std::vector<double> out(static_cast<std::size_t>(ho) * wo, 0.0);
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) {
      double acc = 0;
      for (int i = 0; i < 11; ++i) acc += k1d[i] * horiz[(y + i) * wo + x];
      out[y * wo + x] = acc;
    }
  }
  return out;
}

inline double ssim_channel(const std::vector<double>& x,
                           const std::vector<double>& y, int h, int w) {
  constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
  constexpr double kC2 = (0.03 * 255) * (0.03 * 255);

  const std::size_t n = x.size();
  std::vector<double> xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const std::vector<double> mu_x = gaussian_valid(x, h, w);
  const std::vector<double> mu_y = gaussian_valid(y, h, w);
  const std::vector<double> e_xx = gaussian_valid(xx, h, w);
  const std::vector<double> e_yy = gaussian_valid(yy, h, w);
  const std::vector<double> e_xy = gaussian_valid(xy, h, w);

  double total = 0;
  for (std::size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x[i], my = mu_y[i];
    const double var_x = e_xx[i] - mx * mx;
    const double var_y = e_yy[i] - my * my;
    const double cov = e_xy[i] - mx * my;
    total += ((2 * mx * my + kC1) * (2 * cov + kC2)) /
             ((mx * mx + my * my + kC1) * (var_x + var_y + kC2));
  }
  return total / static_cast<double>(mu_x.size());
}

}  // namespace detail

// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// L=255, valid window positions only. Multi-channel images average the
// per-channel scores.
inline double ssim(const ImageSample& a, const ImageSample& b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
    throw std::invalid_argument("ssim: image dimensions differ");
  }
  if (a.height < 11 || a.width < 11) {
    throw std::invalid_argument(
        "ssim: images must be at least 11x11 for the sliding window, got " +
        std::to_string(a.height) + "x" + std::to_string(a.width));
  }
  const std::size_t plane = static_cast<std::size_t>(a.height) * a.width;
  double total = 0;
  std::vector<double> x(plane), y(plane);
  for (int c = 0; c < a.channels; ++c) {
    for (std::size_t i = 0; i < plane; ++i) {
      x[i] = a.pixels[i * a.channels + c];
      y[i] = b.pixels[i * b.channels + c];
    }
    total += detail::ssim_channel(x, y, a.height, a.width);
  }
  return total / a.channels;
}

struct Capacity {
  double bpp = 0;              // payload bits per cover pixel
  double payload_percent = 0;  // payload bits / cover bits (24 per RGB pixel)
};

// A full-byte payload pixel per cover pixel gives 8 bpp = 33.3%.
inline Capacity capacity(int cover_h, int cover_w, int payload_h, int payload_w) {
  if (cover_h < 1 || cover_w < 1 || payload_h < 1 || payload_w < 1) {
    throw std::invalid_argument("capacity: dims must be positive");
  }
  if (payload_h > cover_h || payload_w > cover_w) {
    throw std::invalid_argument("capacity: payload exceeds cover spatially");
  }
  const double payload_bits = static_cast<double>(payload_h) * payload_w * 8.0;
  const double cover_pixels = static_cast<double>(cover_h) * cover_w;
  Capacity c;
  c.bpp = payload_bits / cover_pixels;
  c.payload_percent = payload_bits / (cover_pixels * 24.0) * 100.0;
  return c;
}

inline std::string format_metric(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace stegnet
