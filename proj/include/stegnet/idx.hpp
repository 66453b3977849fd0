#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "stegnet/errors.hpp"
#include "stegnet/image.hpp"

namespace stegnet {

// IDX binary format (MNIST): big-endian u32 magic, dimension sizes, raw
// unsigned bytes. Images use magic 0x00000803 (count, rows, cols), labels
// 0x00000801 (count). Parse errors carry the failing byte offset.
namespace detail {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

class IdxReader {
 public:
  explicit IdxReader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open IDX file " + path_);
    bytes_.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
  }

  std::uint32_t be_u32() {
    if (pos_ + 4 > bytes_.size()) {
      throw DataError(path_ + ": IDX parse error at offset " +
                      std::to_string(pos_) + ": truncated header");
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v = (v << 8) | static_cast<std::uint8_t>(bytes_[pos_ + i]);
    }
    pos_ += 4;
    return v;
  }

  const std::uint8_t* payload(std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw DataError(path_ + ": IDX parse error at offset " +
                      std::to_string(bytes_.size()) + ": truncated payload (" +
                      std::to_string(n - (bytes_.size() - pos_)) +
                      " bytes missing)");
    }
    const auto* p = reinterpret_cast<const std::uint8_t*>(bytes_.data()) + pos_;
    pos_ += n;
    return p;
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw DataError(path_ + ": IDX parse error at offset " +
                      std::to_string(pos_) + ": trailing bytes");
    }
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  detail::IdxReader r(path);
  const std::uint32_t magic = r.be_u32();
  if (magic != detail::kIdxLabelsMagic) {
    char hex[16];
    std::snprintf(hex, sizeof hex, "0x%08x", magic);
    throw DataError(r.path() + ": IDX parse error at offset 0: bad magic " +
                    hex + " (expected 0x00000801)");
  }
  const std::uint32_t count = r.be_u32();
  const std::uint8_t* p = r.payload(count);
  std::vector<std::uint8_t> labels(p, p + count);
  r.expect_end();
  return labels;
}

// Parses an IDX image file into H x W x 1 samples. When a labels path is
// given, the labels file is parsed and validated against the image count.
inline std::vector<ImageSample> load_idx(
    const std::filesystem::path& images_path,
    const std::optional<std::filesystem::path>& labels_path = std::nullopt) {
  detail::IdxReader r(images_path);
  const std::uint32_t magic = r.be_u32();
  if (magic != detail::kIdxImagesMagic) {
    char hex[16];
    std::snprintf(hex, sizeof hex, "0x%08x", magic);
    throw DataError(r.path() + ": IDX parse error at offset 0: bad magic " +
                    hex + " (expected 0x00000803)");
  }
  const std::uint32_t count = r.be_u32();
  const std::uint32_t rows = r.be_u32();
  const std::uint32_t cols = r.be_u32();
  if (rows == 0 || cols == 0) {
    throw DataError(r.path() + ": IDX parse error at offset 8: zero image dims");
  }

  std::vector<std::uint8_t> labels;
  if (labels_path) {
    labels = load_idx_labels(*labels_path);
    if (labels.size() != count) {
      throw DataError(labels_path->string() + ": label count " +
                      std::to_string(labels.size()) + " does not match " +
                      std::to_string(count) + " images");
    }
  }

  const std::string stem = images_path.stem().string();
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;
  std::vector<ImageSample> samples;
  samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint8_t* p = r.payload(pixels);
    ImageSample s(static_cast<int>(rows), static_cast<int>(cols), 1,
                  stem + "#" + std::to_string(i));
    std::copy(p, p + pixels, s.pixels.begin());
    if (!labels.empty()) s.id += ":l" + std::to_string(labels[i]);
    samples.push_back(std::move(s));
  }
  r.expect_end();
  return samples;
}

}  // namespace stegnet
