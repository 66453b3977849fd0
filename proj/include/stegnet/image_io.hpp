#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stegnet/errors.hpp"
#include "stegnet/image.hpp"

namespace stegnet {

// Lossless raster I/O only: PNG (via libpng) and binary PPM/PGM. The hybrid
// lives in continuous space; a lossy format would destroy the payload.
namespace detail {

inline std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

struct PngReadCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngReadCtx() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (fp) std::fclose(fp);
  }
};

struct PngWriteCtx {
  png_structp png = nullptr;
  png_infop info = nullptr;
  FILE* fp = nullptr;
  ~PngWriteCtx() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    if (fp) std::fclose(fp);
  }
};

inline ImageSample read_png(const std::filesystem::path& path) {
  PngReadCtx ctx;
  ctx.fp = std::fopen(path.string().c_str(), "rb");
  if (!ctx.fp) throw DataError("cannot open " + path.string());

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, ctx.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError(path.string() + ": not a PNG file");
  }
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw DataError("libpng: read struct allocation failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw DataError("libpng: info struct allocation failed");
  if (setjmp(png_jmpbuf(ctx.png))) {
    throw DataError(path.string() + ": PNG decode failed");
  }
  png_init_io(ctx.png, ctx.fp);
  png_set_sig_bytes(ctx.png, 8);
  png_read_info(ctx.png, ctx.info);

  const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
  const int color = png_get_color_type(ctx.png, ctx.info);
  const int depth = png_get_bit_depth(ctx.png, ctx.info);

  // Normalize every variant to 8-bit gray or RGB.
  if (depth == 16) png_set_strip_16(ctx.png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_set_interlace_handling(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const int channels = png_get_channels(ctx.png, ctx.info);
  if (channels != 1 && channels != 3) {
    throw DataError(path.string() + ": unsupported PNG channel count " +
                    std::to_string(channels));
  }
  ImageSample s(static_cast<int>(h), static_cast<int>(w), channels,
                path.filename().string());
  std::vector<png_bytep> row_ptrs(h);
  for (png_uint_32 y = 0; y < h; ++y) {
    row_ptrs[y] = s.pixels.data() + static_cast<std::size_t>(y) * w * channels;
  }
  png_read_image(ctx.png, row_ptrs.data());
  png_read_end(ctx.png, nullptr);
  return s;
}

inline void write_png(const ImageSample& s, const std::filesystem::path& path) {
  PngWriteCtx ctx;
  ctx.fp = std::fopen(path.string().c_str(), "wb");
  if (!ctx.fp) throw DataError("cannot open " + path.string() + " for writing");
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!ctx.png) throw DataError("libpng: write struct allocation failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw DataError("libpng: info struct allocation failed");
  if (setjmp(png_jmpbuf(ctx.png))) {
    throw DataError(path.string() + ": PNG encode failed");
  }
  png_init_io(ctx.png, ctx.fp);
  png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(s.width),
               static_cast<png_uint_32>(s.height), 8,
               s.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);
  std::vector<png_bytep> row_ptrs(s.height);
  for (int y = 0; y < s.height; ++y) {
    row_ptrs[y] = const_cast<png_bytep>(
        s.pixels.data() + static_cast<std::size_t>(y) * s.width * s.channels);
  }
  png_write_image(ctx.png, row_ptrs.data());
  png_write_end(ctx.png, nullptr);
}

// Binary PPM (P6) / PGM (P5), maxval 255, '#' comments allowed in the header.
inline ImageSample read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") {
    throw DataError(path.string() + ": expected binary PGM/PPM (P5/P6), got '" +
                    magic + "'");
  }
  const auto next_int = [&]() {
    int v;
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      if (!(in >> v)) throw DataError(path.string() + ": malformed PNM header");
      return v;
    }
  };
  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (w < 1 || h < 1) throw DataError(path.string() + ": bad PNM dims");
  if (maxval != 255) {
    throw DataError(path.string() + ": only maxval 255 supported, got " +
                    std::to_string(maxval));
  }
  in.get();  // single whitespace after maxval
  const int channels = magic == "P6" ? 3 : 1;
  ImageSample s(h, w, channels, path.filename().string());
  in.read(reinterpret_cast<char*>(s.pixels.data()),
          static_cast<std::streamsize>(s.pixels.size()));
  if (static_cast<std::size_t>(in.gcount()) != s.pixels.size()) {
    throw DataError(path.string() + ": truncated PNM pixel data");
  }
  return s;
}

inline void write_pnm(const ImageSample& s, const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".ppm" && s.channels != 3) {
    throw DataError("use .pgm for single-channel images: " + path.string());
  }
  if (ext == ".pgm" && s.channels != 1) {
    throw DataError("use .ppm for RGB images: " + path.string());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << (s.channels == 3 ? "P6" : "P5") << "\n"
      << s.width << " " << s.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(s.pixels.data()),
            static_cast<std::streamsize>(s.pixels.size()));
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace detail

inline bool is_supported_image(const std::filesystem::path& path) {
  const std::string ext = detail::lower_ext(path);
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

inline ImageSample read_image(const std::filesystem::path& path) {
  const std::string ext = detail::lower_ext(path);
  if (ext == ".png") return detail::read_png(path);
  if (ext == ".ppm" || ext == ".pgm") return detail::read_pnm(path);
  throw DataError(path.string() + ": unsupported image format '" + ext +
                  "' (png/ppm/pgm)");
}

inline void write_image(const ImageSample& s, const std::filesystem::path& path) {
  const std::string ext = detail::lower_ext(path);
  if (ext == ".png") return detail::write_png(s, path);
  if (ext == ".ppm" || ext == ".pgm") return detail::write_pnm(s, path);
  throw DataError(path.string() + ": unsupported image format '" + ext +
                  "' (png/ppm/pgm)");
}

}  // namespace stegnet
