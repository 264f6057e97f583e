// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace dcaug {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open " + path.string());
  return f;
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& img) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: cannot create write struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: write failed for " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto px = img.pixels();
  const std::size_t stride = static_cast<std::size_t>(img.width()) * Image::kChannels;
  for (int y = 0; y < img.height(); ++y)
    png_write_row(png, const_cast<png_bytep>(px.data() + y * stride));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: cannot create read struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: decode failed for " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);
  const auto w = static_cast<int>(png_get_image_width(png, info));
  const auto h = static_cast<int>(png_get_image_height(png, info));
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h * Image::kChannels);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[y] = px.data() + static_cast<std::size_t>(y) * w * Image::kChannels;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  return Image(w, h, std::move(px));
}

Image contact_sheet(std::span<const Image> tiles, int columns, int gap, std::uint8_t background) {
  if (tiles.empty() || columns < 1) throw std::invalid_argument("contact_sheet: nothing to tile");
  const int tw = tiles[0].width(), th = tiles[0].height();
  const int n = static_cast<int>(tiles.size());
  const int rows = (n + columns - 1) / columns;
  Image sheet(columns * tw + (columns + 1) * gap, rows * th + (rows + 1) * gap, background);
  for (int i = 0; i < n; ++i) {
    if (tiles[i].width() != tw || tiles[i].height() != th)
      throw std::invalid_argument("contact_sheet: tiles must share dimensions");
    const int ox = gap + (i % columns) * (tw + gap), oy = gap + (i / columns) * (th + gap);
    for (int y = 0; y < th; ++y)
      for (int x = 0; x < tw; ++x)
        for (int c = 0; c < Image::kChannels; ++c) sheet.at(ox + x, oy + y, c) = tiles[i].at(x, y, c);
  }
  return sheet;
}

}  // namespace dcaug
