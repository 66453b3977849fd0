#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stegnet/errors.hpp"
#include "stegnet/tensor.hpp"

namespace stegnet {

// 8-bit image, H x W x C interleaved, C is 1 (gray) or 3 (RGB).
struct ImageSample {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
  std::string id;

  ImageSample() = default;
  ImageSample(int h, int w, int c, std::string sample_id = "")
      : height(h), width(w), channels(c),
        pixels(static_cast<std::size_t>(h) * w * c, 0), id(std::move(sample_id)) {
    if (h < 1 || w < 1 || (c != 1 && c != 3)) {
      throw DataError("image dims must be positive with 1 or 3 channels");
    }
  }

  std::uint8_t& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

enum class GrayscaleMode { luma, channel };

// Rec. 601 luma or plain channel selection; input must be RGB.
inline ImageSample to_grayscale(const ImageSample& s,
                                GrayscaleMode mode = GrayscaleMode::luma,
                                int channel_index = 0) {
  if (s.channels != 3) throw DataError("to_grayscale: input must have 3 channels");
  if (mode == GrayscaleMode::channel && (channel_index < 0 || channel_index > 2)) {
    throw DataError("to_grayscale: channel index must be 0, 1 or 2");
  }
  ImageSample out(s.height, s.width, 1, s.id);
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      if (mode == GrayscaleMode::luma) {
        const double l = 0.299 * s.at(y, x, 0) + 0.587 * s.at(y, x, 1) +
                         0.114 * s.at(y, x, 2);
        out.at(y, x, 0) = static_cast<std::uint8_t>(std::lround(l));
      } else {
        out.at(y, x, 0) = s.at(y, x, channel_index);
      }
    }
  }
  return out;
}

// Zero-pads (black border) to target dims, image centered. Used when the
// payload is smaller than the cover.
inline ImageSample pad_to_center(const ImageSample& s, int height, int width) {
  if (s.height > height || s.width > width) {
    throw DataError("pad_to_center: image " + std::to_string(s.height) + "x" +
                    std::to_string(s.width) + " exceeds target " +
                    std::to_string(height) + "x" + std::to_string(width));
  }
  ImageSample out(height, width, s.channels, s.id);
  const int oy = (height - s.height) / 2;
  const int ox = (width - s.width) / 2;
  for (int y = 0; y < s.height; ++y) {
    for (int x = 0; x < s.width; ++x) {
      for (int c = 0; c < s.channels; ++c) {
        out.at(oy + y, ox + x, c) = s.at(y, x, c);
      }
    }
  }
  return out;
}

// Corner-aligned bilinear resize; a length-1 output axis samples the input
// center. Deterministic, rounds half away from zero.
inline ImageSample resize_bilinear(const ImageSample& s, int height, int width) {
  if (height < 1 || width < 1) throw DataError("resize: target dims must be >= 1");
  if (height == s.height && width == s.width) return s;
  ImageSample out(height, width, s.channels, s.id);
  const auto src_pos = [](int i, int out_dim, int in_dim) {
    if (out_dim == 1) return (in_dim - 1) / 2.0;
    return static_cast<double>(i) * (in_dim - 1) / (out_dim - 1);
  };
  for (int y = 0; y < height; ++y) {
    const double sy = src_pos(y, height, s.height);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, s.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      const double sx = src_pos(x, width, s.width);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, s.width - 1);
      const double fx = sx - x0;
      for (int c = 0; c < s.channels; ++c) {
        const double top = (1 - fx) * s.at(y0, x0, c) + fx * s.at(y0, x1, c);
        const double bot = (1 - fx) * s.at(y1, x0, c) + fx * s.at(y1, x1, c);
        const double v = (1 - fy) * top + fy * bot;
        out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  return out;
}

// Zero-centering: p -> p/255 - 0.5, so pixels land in [-0.5, 0.5].
template <typename T = float>
Tensor<T> normalize(const ImageSample& s) {
  Tensor<T> t(1, s.channels, s.height, s.width);
  for (int c = 0; c < s.channels; ++c) {
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        t.at(0, c, y, x) = static_cast<T>(s.at(y, x, c) / 255.0 - 0.5);
      }
    }
  }
  return t;
}

// Inverse map x -> round(clamp(x + 0.5, 0, 1) * 255). Exact inverse of
// normalize on all 8-bit values.
template <typename T>
ImageSample denormalize(const Tensor<T>& t, int batch_index = 0) {
  if (batch_index < 0 || batch_index >= t.batch()) {
    throw std::invalid_argument("denormalize: batch index out of range");
  }
  if (t.channels() != 1 && t.channels() != 3) {
    throw std::invalid_argument("denormalize: tensor must have 1 or 3 channels");
  }
  ImageSample s(t.height(), t.width(), t.channels());
  for (int c = 0; c < t.channels(); ++c) {
    for (int y = 0; y < t.height(); ++y) {
      for (int x = 0; x < t.width(); ++x) {
        const double v =
            std::clamp(static_cast<double>(t.at(batch_index, c, y, x)) + 0.5, 0.0, 1.0);
        s.at(y, x, c) = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return s;
}

// Stacks same-shaped single images into one N x C x H x W batch.
template <typename T>
Tensor<T> stack_batch(const std::vector<Tensor<T>>& singles) {
  if (singles.empty()) throw std::invalid_argument("stack_batch: empty batch");
  const Tensor<T>& first = singles.front();
  Tensor<T> out(static_cast<int>(singles.size()), first.channels(),
                first.height(), first.width());
  const std::size_t stride = first.size();
  for (std::size_t i = 0; i < singles.size(); ++i) {
    if (!singles[i].same_shape(first) || singles[i].batch() != 1) {
      throw std::invalid_argument("stack_batch: mismatched shapes");
    }
    std::copy_n(singles[i].data().begin(), stride,
                out.data().begin() + i * stride);
  }
  return out;
}

}  // namespace stegnet
