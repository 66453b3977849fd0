#pragma once

#include <cstdint>
#include <string>

#include "stegnet/errors.hpp"
#include "stegnet/image.hpp"

namespace stegnet {

// How the 8 payload bits per pixel are spread over the RGB channels,
// MSB-first. The default (3,3,2) matches the learned system's 8 bpp.
struct BitAllocation {
  int r = 3;
  int g = 3;
  int b = 2;

  void validate() const {
    if (r < 0 || r > 8 || g < 0 || g > 8 || b < 0 || b > 8) {
      throw DataError("bit allocation entries must be in 0..8");
    }
    if (r + g + b != 8) {
      throw DataError("bit allocation must sum to 8 bits per pixel, got " +
                      std::to_string(r + g + b));
    }
  }
};

namespace detail {

inline std::uint32_t low_mask(int bits) { return (1u << bits) - 1u; }

}  // namespace detail

// Classical k-LSB substitution: each payload byte is split MSB-first into
// (r,g,b) groups that replace the low bits of the cover channels. All other
// cover bits are untouched.
inline ImageSample lsb_embed(const ImageSample& cover, const ImageSample& payload,
                             const BitAllocation& alloc = {}) {
  alloc.validate();
  if (cover.channels != 3) throw DataError("lsb_embed: cover must be RGB");
  if (payload.channels != 1) {
    throw DataError("lsb_embed: payload must be single-channel");
  }
  if (cover.height != payload.height || cover.width != payload.width) {
    throw DataError("lsb_embed: payload dims must equal cover dims");
  }
  ImageSample stego = cover;
  const int shifts[3] = {8 - alloc.r, 8 - alloc.r - alloc.g, 0};
  const int bits[3] = {alloc.r, alloc.g, alloc.b};
  for (int y = 0; y < cover.height; ++y) {
    for (int x = 0; x < cover.width; ++x) {
      const std::uint32_t byte = payload.at(y, x, 0);
      for (int c = 0; c < 3; ++c) {
        const std::uint32_t part = (byte >> shifts[c]) & detail::low_mask(bits[c]);
        const std::uint32_t keep = cover.at(y, x, c) & ~detail::low_mask(bits[c]);
        stego.at(y, x, c) = static_cast<std::uint8_t>(keep | part);
      }
    }
  }
  return stego;
}

inline ImageSample lsb_extract(const ImageSample& stego,
                               const BitAllocation& alloc = {}) {
  alloc.validate();
  if (stego.channels != 3) throw DataError("lsb_extract: stego must be RGB");
  ImageSample payload(stego.height, stego.width, 1, stego.id);
  const int shifts[3] = {8 - alloc.r, 8 - alloc.r - alloc.g, 0};
  const int bits[3] = {alloc.r, alloc.g, alloc.b};
  for (int y = 0; y < stego.height; ++y) {
    for (int x = 0; x < stego.width; ++x) {
      std::uint32_t byte = 0;
      for (int c = 0; c < 3; ++c) {
        byte |= (stego.at(y, x, c) & detail::low_mask(bits[c])) << shifts[c];
      }
      payload.at(y, x, 0) = static_cast<std::uint8_t>(byte);
    }
  }
  return payload;
}

}  // namespace stegnet
