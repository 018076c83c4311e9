#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "endoqa/error.hpp"
#include "endoqa/raster.hpp"

namespace endoqa::io {

namespace detail {
struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;
}  // namespace detail

/// Reads an 8- or 16-bit PNG. Palette and low-bit gray are expanded, alpha is
/// dropped; gray becomes 1 channel, colour 3.
inline Frame read_png(const std::string& path, std::int64_t index = 0) {
  detail::FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw Error(ErrorKind::Io, "cannot open " + path);
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw Error(ErrorKind::Io, path + ": not a PNG file");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Io, "libpng initialisation failed");
  }
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::Io, path + ": corrupt PNG data");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // host little-endian words
  png_read_update_info(png, info);

  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) throw Error(ErrorKind::Io, path + ": unsupported channel layout");
  Frame f(width, height, channels);
  f.bit_depth_source = bit_depth == 16 ? 16 : 8;
  f.index = index;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels; ++c) {
        const std::size_t k = static_cast<std::size_t>(x) * channels + c;
        double v;
        if (bit_depth == 16) {
          std::uint16_t word;
          std::memcpy(&word, rows[y] + 2 * k, 2);
          v = word / 65535.0;
        } else {
          v = rows[y][k] / 255.0;
        }
        f.at(x, y, c) = v;
      }
  return f;
}

/// Writes `f` as PNG at its source bit depth (8 or 16).
inline void write_png(const std::string& path, const Frame& f) {
  const int depth = f.bit_depth_source == 16 ? 16 : 8;
  detail::FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(ErrorKind::Io, "cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "libpng initialisation failed");
  }
  const int channels = f.channels();
  const std::size_t rowbytes = static_cast<std::size_t>(f.width()) * channels * (depth / 8);
  std::vector<png_byte> buffer(rowbytes * f.height());
  std::vector<png_bytep> rows(f.height());
  const double scale = depth == 16 ? 65535.0 : 255.0;
  for (int y = 0; y < f.height(); ++y) {
    rows[y] = buffer.data() + rowbytes * y;
    for (int x = 0; x < f.width(); ++x)
      for (int c = 0; c < channels; ++c) {
        const auto q = static_cast<unsigned>(std::lround(std::clamp(f.at(x, y, c), 0.0, 1.0) * scale));
        const std::size_t k = static_cast<std::size_t>(x) * channels + c;
        if (depth == 16) {
          rows[y][2 * k] = static_cast<png_byte>(q >> 8);
          rows[y][2 * k + 1] = static_cast<png_byte>(q & 0xff);
        } else {
          rows[y][k] = static_cast<png_byte>(q);
        }
      }
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::Io, "failed writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, f.width(), f.height(), depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// PNG files of a directory, sorted by file name.
inline std::vector<std::filesystem::path> list_png_files(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::Io, dir + ": not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (e.is_regular_file() && ext == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace endoqa::io
