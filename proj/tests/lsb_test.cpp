#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "stegnet/image.hpp"
#include "stegnet/lsb.hpp"
#include "stegnet/metrics.hpp"
#include "stegnet/rng.hpp"

using stegnet::BitAllocation;
using stegnet::ImageSample;
using stegnet::lsb_embed;
using stegnet::lsb_extract;
using stegnet::Rng;

namespace {

ImageSample random_rgb(Rng& rng, int h, int w) {
  ImageSample s(h, w, 3, "c");
  for (auto& p : s.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return s;
}

ImageSample random_gray(Rng& rng, int h, int w) {
  ImageSample s(h, w, 1, "p");
  for (auto& p : s.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return s;
}

std::vector<BitAllocation> all_allocations() {
  std::vector<BitAllocation> out;
  for (int r = 0; r <= 8; ++r) {
    for (int g = 0; g + r <= 8; ++g) {
      out.push_back({r, g, 8 - r - g});
    }
  }
  return out;
}

}  // namespace

TEST(Lsb, HandSlicedExample) {
  // payload byte 0b10110100 with alloc (3,3,2): groups 101 | 101 | 00
  ImageSample cover(1, 1, 3, "c");
  ImageSample payload(1, 1, 1, "p");
  payload.at(0, 0, 0) = 0b10110100;
  const auto stego = lsb_embed(cover, payload, {3, 3, 2});
  EXPECT_EQ(stego.at(0, 0, 0), 5);
  EXPECT_EQ(stego.at(0, 0, 1), 5);
  EXPECT_EQ(stego.at(0, 0, 2), 0);

  const auto back = lsb_extract(stego, {3, 3, 2});
  EXPECT_EQ(back.at(0, 0, 0), 0b10110100);
}

TEST(Lsb, ZeroPayloadClearsLowBitsOnly) {
  Rng rng(60);
  const auto cover = random_rgb(rng, 4, 4);
  const ImageSample payload(4, 4, 1, "z");
  const BitAllocation alloc{3, 3, 2};
  const auto stego = lsb_embed(cover, payload, alloc);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      EXPECT_EQ(stego.at(y, x, 0), cover.at(y, x, 0) & ~0x7);
      EXPECT_EQ(stego.at(y, x, 1), cover.at(y, x, 1) & ~0x7);
      EXPECT_EQ(stego.at(y, x, 2), cover.at(y, x, 2) & ~0x3);
    }
  }
}

TEST(Lsb, AllZeroStegoExtractsAllZeroPayload) {
  const ImageSample stego(3, 3, 3, "z");
  const auto payload = lsb_extract(stego, {3, 3, 2});
  for (auto p : payload.pixels) EXPECT_EQ(p, 0);
}

TEST(Lsb, RoundTripExactForEveryAllocation) {
  // 1000 random images spread across every allocation summing to 8
  Rng rng(61);
  const auto allocs = all_allocations();
  ASSERT_EQ(allocs.size(), 45u);
  int images = 0;
  while (images < 1000) {
    for (const auto& alloc : allocs) {
      const auto cover = random_rgb(rng, 8, 8);
      const auto payload = random_gray(rng, 8, 8);
      const auto stego = lsb_embed(cover, payload, alloc);
      const auto back = lsb_extract(stego, alloc);
      ASSERT_EQ(back.pixels, payload.pixels)
          << "alloc (" << alloc.r << "," << alloc.g << "," << alloc.b << ")";
      if (++images >= 1000) break;
    }
  }
}

TEST(Lsb, DistortionBoundedByAllocatedBits) {
  Rng rng(62);
  const auto allocs = all_allocations();
  for (const auto& alloc : allocs) {
    const auto cover = random_rgb(rng, 8, 8);
    const auto payload = random_gray(rng, 8, 8);
    const auto stego = lsb_embed(cover, payload, alloc);
    const int bound[3] = {1 << alloc.r, 1 << alloc.g, 1 << alloc.b};
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        for (int c = 0; c < 3; ++c) {
          ASSERT_LT(std::abs(static_cast<int>(stego.at(y, x, c)) -
                             static_cast<int>(cover.at(y, x, c))),
                    bound[c]);
        }
      }
    }
  }
}

TEST(Lsb, DefaultAllocationAveragesAbove37Db) {
  Rng rng(63);
  double total = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const auto cover = random_rgb(rng, 32, 32);
    const auto payload = random_gray(rng, 32, 32);
    const auto stego = lsb_embed(cover, payload, {3, 3, 2});
    total += stegnet::psnr(cover, stego);
  }
  EXPECT_GT(total / trials, 37.0);
}

TEST(Lsb, RejectsBadAllocationAndDims) {
  Rng rng(64);
  const auto cover = random_rgb(rng, 4, 4);
  const auto payload = random_gray(rng, 4, 4);
  EXPECT_THROW(lsb_embed(cover, payload, {3, 3, 3}), stegnet::DataError);
  EXPECT_THROW(lsb_embed(cover, payload, {9, 0, -1}), stegnet::DataError);
  const auto small = random_gray(rng, 2, 2);
  EXPECT_THROW(lsb_embed(cover, small, {3, 3, 2}), stegnet::DataError);
  EXPECT_THROW(lsb_embed(payload, payload, {3, 3, 2}), stegnet::DataError);
  EXPECT_THROW(lsb_extract(payload, {3, 3, 2}), stegnet::DataError);
}
