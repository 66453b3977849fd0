#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stegnet/errors.hpp"
#include "stegnet/image.hpp"
#include "stegnet/image_io.hpp"
#include "stegnet/rng.hpp"

namespace stegnet {

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
};

// Deterministic shuffled partition. Val/test sizes are floor-allocated; the
// remainder goes to train.
inline DatasetSplit split_dataset(const std::vector<std::string>& ids,
                                  const std::array<double, 3>& fractions,
                                  std::uint64_t seed) {
  if (ids.empty()) throw DataError("split_dataset: empty dataset");
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DataError("split_dataset: fractions must sum to 1, got " +
                    std::to_string(sum));
  }
  for (double f : fractions) {
    if (f < 0) throw DataError("split_dataset: negative fraction");
  }

  std::vector<std::string> shuffled = ids;
  Rng rng(seed);
  rng.shuffle(shuffled);

  const std::size_t n = shuffled.size();
  const std::size_t n_val = static_cast<std::size_t>(n * fractions[1]);
  const std::size_t n_test = static_cast<std::size_t>(n * fractions[2]);
  const std::size_t n_train = n - n_val - n_test;

  DatasetSplit split;
  split.seed = seed;
  split.train.assign(shuffled.begin(), shuffled.begin() + n_train);
  split.val.assign(shuffled.begin() + n_train, shuffled.begin() + n_train + n_val);
  split.test.assign(shuffled.begin() + n_train + n_val, shuffled.end());
  return split;
}

// 2*batch_size distinct indices drawn without replacement; the first half
// serve as covers, the second half as payloads. No image plays both roles
// within a batch.
inline std::vector<std::pair<std::size_t, std::size_t>> sample_pair_indices(
    std::size_t n, int batch_size, Rng& rng) {
  if (batch_size < 1) throw DataError("sample_pairs: batch_size must be >= 1");
  const std::size_t need = 2 * static_cast<std::size_t>(batch_size);
  if (n < need) {
    throw DataError("sample_pairs: need " + std::to_string(need) +
                    " distinct images, dataset has " + std::to_string(n));
  }
  const std::vector<std::size_t> draw = rng.sample_indices(n, need);
  std::vector<std::pair<std::size_t, std::size_t>> pairs(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    pairs[i] = {draw[i], draw[batch_size + i]};
  }
  return pairs;
}

inline std::vector<std::pair<std::string, std::string>> sample_pairs(
    const std::vector<std::string>& train_ids, int batch_size, Rng& rng) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [c, p] : sample_pair_indices(train_ids.size(), batch_size, rng)) {
    out.emplace_back(train_ids[c], train_ids[p]);
  }
  return out;
}

struct DirectoryLoad {
  std::vector<ImageSample> samples;
  int skipped = 0;
};

// Loads every supported raster file in a directory, RGB 8-bit, ordered by
// filename. Grayscale sources are replicated to RGB. Undecodable files are
// skipped with a warning on stderr.
inline DirectoryLoad load_image_dir(
    const std::filesystem::path& dir,
    std::optional<std::pair<int, int>> resize_to = std::nullopt) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError(dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_supported_image(entry.path())) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });

  DirectoryLoad out;
  for (const auto& file : files) {
    ImageSample s;
    try {
      s = read_image(file);
    } catch (const DataError& e) {
      std::cerr << "warning: skipping undecodable file: " << e.what() << "\n";
      ++out.skipped;
      continue;
    }
    if (s.channels == 1) {
      ImageSample rgb(s.height, s.width, 3, s.id);
      for (int y = 0; y < s.height; ++y) {
        for (int x = 0; x < s.width; ++x) {
          for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = s.at(y, x, 0);
        }
      }
      s = std::move(rgb);
    }
    if (resize_to) s = resize_bilinear(s, resize_to->first, resize_to->second);
    out.samples.push_back(std::move(s));
  }
  if (out.samples.empty()) {
    throw DataError(dir.string() + ": no loadable images found");
  }
  return out;
}

}  // namespace stegnet
