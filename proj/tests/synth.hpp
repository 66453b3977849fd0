#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stegnet/image.hpp"
#include "stegnet/rng.hpp"

namespace testutil {

// Smooth synthetic RGB images: a bilinear gradient between four random corner
// colors plus one soft radial blob. Low-frequency content a small network can
// actually learn to reconstruct in a short run.
inline stegnet::ImageSample synth_image(stegnet::Rng& rng, int h, int w,
                                        const std::string& id) {
  double corner[4][3];
  for (auto& c : corner) {
    for (double& v : c) v = rng.uniform(0.0, 255.0);
  }
  const double cy = rng.uniform(0.2, 0.8) * h;
  const double cx = rng.uniform(0.2, 0.8) * w;
  const double radius = rng.uniform(0.15, 0.4) * std::min(h, w);
  double blob[3];
  for (double& v : blob) v = rng.uniform(0.0, 255.0);

  stegnet::ImageSample img(h, w, 3, id);
  for (int y = 0; y < h; ++y) {
    const double fy = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
    for (int x = 0; x < w; ++x) {
      const double fx = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
      const double dy = y - cy, dx = x - cx;
      const double wb = std::exp(-(dx * dx + dy * dy) / (2 * radius * radius));
      for (int c = 0; c < 3; ++c) {
        const double grad = (1 - fy) * ((1 - fx) * corner[0][c] + fx * corner[1][c]) +
                            fy * ((1 - fx) * corner[2][c] + fx * corner[3][c]);
        const double v = (1 - wb) * grad + wb * blob[c];
        img.at(y, x, c) = static_cast<std::uint8_t>(
            std::clamp(std::lround(v), 0l, 255l));
      }
    }
  }
  return img;
}

inline std::vector<stegnet::ImageSample> synth_dataset(std::uint64_t seed, int count,
                                                       int h, int w) {
  stegnet::Rng rng(seed);
  std::vector<stegnet::ImageSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back(synth_image(rng, h, w, "synth#" + std::to_string(i)));
  }
  return out;
}

}  // namespace testutil
