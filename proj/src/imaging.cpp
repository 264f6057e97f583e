// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dcaug {

Image::Image(int width, int height, std::uint8_t fill)
    : width_(width), height_(height),
      pixels_(static_cast<std::size_t>(width) * height * kChannels, fill) {
  if (width < 1 || height < 1) throw std::invalid_argument("Image: dimensions must be >= 1");
}

Image::Image(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) throw std::invalid_argument("Image: dimensions must be >= 1");
  if (pixels_.size() != static_cast<std::size_t>(width) * height * kChannels)
    throw std::invalid_argument("Image: pixel buffer size does not match dimensions");
}

Eigen::ArrayXf Image::to_float() const {
  Eigen::ArrayXf out(static_cast<Eigen::Index>(pixels_.size()));
  for (std::size_t i = 0; i < pixels_.size(); ++i) out[static_cast<Eigen::Index>(i)] = pixels_[i] / 255.0f;
  return out;
}

Image Image::from_float(int width, int height, const Eigen::Ref<const Eigen::ArrayXf>& samples) {
  std::vector<std::uint8_t> px(static_cast<std::size_t>(samples.size()));
  for (Eigen::Index i = 0; i < samples.size(); ++i) px[static_cast<std::size_t>(i)] = quantize(samples[i]);
  return Image(width, height, std::move(px));
}

AffineMatrix AffineMatrix::rotate(double degrees) {
  double c = 0, s = 0;
  // Quarter turns are snapped so they stay exact permutations.
  const double quarter = degrees / 90.0;
  if (quarter == std::round(quarter)) {
    static constexpr std::array<std::array<double, 2>, 4> kQuarter{{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
    const auto k = static_cast<std::size_t>(((static_cast<long long>(quarter) % 4) + 4) % 4);
    c = kQuarter[k][0];
    s = kQuarter[k][1];
  } else {
    const double rad = degrees * std::numbers::pi / 180.0;
    c = std::cos(rad);
    s = std::sin(rad);
  }
  return {c, -s, 0, s, c, 0};
}

Image affine_warp(const Image& img, const AffineMatrix& m, std::uint8_t fill) {
  if (m.is_identity()) return img;
  const int w = img.width(), h = img.height();
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  Image out(w, h, fill);
  const float fillf = fill;
  auto read = [&](int x, int y, int c) -> float {
    if (x < 0 || y < 0 || x >= w || y >= h) return fillf;
    return img.at(x, y, c);
  };
  for (int y = 0; y < h; ++y) {
    const double py = y - cy;
    for (int x = 0; x < w; ++x) {
      const double px = x - cx;
      const double u = m.a * px + m.b * py + m.c + cx;
      const double v = m.d * px + m.e * py + m.f + cy;
      const double fu = std::floor(u), fv = std::floor(v);
      if (fu < -1 || fv < -1 || fu > w || fv > h) continue;  // fully out of frame: fill
      const int x0 = static_cast<int>(fu), y0 = static_cast<int>(fv);
      const float ax = static_cast<float>(u - fu), ay = static_cast<float>(v - fv);
      for (int c = 0; c < Image::kChannels; ++c) {
        const float top = read(x0, y0, c) * (1 - ax) + read(x0 + 1, y0, c) * ax;
        const float bot = read(x0, y0 + 1, c) * (1 - ax) + read(x0 + 1, y0 + 1, c) * ax;
        out.at(x, y, c) = clamp_u8(top * (1 - ay) + bot * ay);
      }
    }
  }
  return out;
}

Image blend(const Image& degenerate, const Image& original, double factor) {
  if (!degenerate.same_shape(original)) throw std::invalid_argument("blend: dimension mismatch");
  const auto f = static_cast<float>(factor);
  const Eigen::ArrayXf d = degenerate.to_float();
  const Eigen::ArrayXf o = original.to_float();
  const Eigen::ArrayXf mixed = ((1.0f - f) * d + f * o).cwiseMax(0.0f).cwiseMin(1.0f);
  return Image::from_float(original.width(), original.height(), mixed);
}

Image posterize(const Image& img, int bits) {
  if (bits < 0 || bits > 8) throw std::invalid_argument("posterize: bits must be in [0, 8], got " + std::to_string(bits));
  const auto mask = static_cast<std::uint8_t>((0xFF << (8 - bits)) & 0xFF);
  Image out = img;
  for (auto& v : out.pixels()) v &= mask;
  return out;
}

Image solarize(const Image& img, int threshold) {
  if (threshold < 0 || threshold > 255)
    throw std::invalid_argument("solarize: threshold must be in [0, 255], got " + std::to_string(threshold));
  Image out = img;
  for (auto& v : out.pixels())
    if (v >= threshold) v = static_cast<std::uint8_t>(255 - v);
  return out;
}

namespace {

template <typename Fn>
Image map_channels(const Image& img, Fn&& build_lut) {
  Image out = img;
  auto px = out.pixels();
  for (int c = 0; c < Image::kChannels; ++c) {
    std::array<std::size_t, 256> hist{};
    for (std::size_t i = c; i < px.size(); i += Image::kChannels) ++hist[px[i]];
    const std::array<std::uint8_t, 256> lut = build_lut(hist);
    for (std::size_t i = c; i < px.size(); i += Image::kChannels) px[i] = lut[px[i]];
  }
  return out;
}

std::array<std::uint8_t, 256> identity_lut() {
  std::array<std::uint8_t, 256> lut{};
  for (int i = 0; i < 256; ++i) lut[i] = static_cast<std::uint8_t>(i);
  return lut;
}

}  // namespace

Image autocontrast(const Image& img) {
  return map_channels(img, [](const std::array<std::size_t, 256>& hist) {
    int lo = 0, hi = 255;
    while (lo < 255 && hist[lo] == 0) ++lo;
    while (hi > 0 && hist[hi] == 0) --hi;
    auto lut = identity_lut();
    if (hi <= lo) return lut;
    const double scale = 255.0 / (hi - lo);
    for (int i = 0; i < 256; ++i)
      lut[i] = clamp_u8(static_cast<float>((i - lo) * scale));
    return lut;
  });
}

Image equalize(const Image& img) {
  return map_channels(img, [](const std::array<std::size_t, 256>& hist) {
    std::array<std::size_t, 256> cdf{};
    std::size_t run = 0;
    for (int i = 0; i < 256; ++i) cdf[i] = run += hist[i];
    const std::size_t total = run;
    std::size_t cdf_min = 0;
    for (int i = 0; i < 256; ++i)
      if (hist[i] != 0) {
        cdf_min = cdf[i];
        break;
      }
    auto lut = identity_lut();
    if (total == cdf_min) return lut;  // constant channel
    for (int i = 0; i < 256; ++i) {
      const double num = cdf[i] > cdf_min ? static_cast<double>(cdf[i] - cdf_min) : 0.0;
      lut[i] = clamp_u8(static_cast<float>(num * 255.0 / static_cast<double>(total - cdf_min)));
    }
    return lut;
  });
}

Image greyscale(const Image& img) {
  Image out = img;
  auto px = out.pixels();
  for (std::size_t i = 0; i < px.size(); i += Image::kChannels) {
    const float l = 0.299f * px[i] + 0.587f * px[i + 1] + 0.114f * px[i + 2];
    px[i] = px[i + 1] = px[i + 2] = clamp_u8(l);
  }
  return out;
}

Image uniform_like(const Image& img, std::uint8_t value) { return Image(img.width(), img.height(), value); }

std::uint8_t mean_luminance(const Image& img) {
  const Image grey = greyscale(img);
  const auto px = grey.pixels();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < px.size(); i += Image::kChannels) sum += px[i];
  const double n = static_cast<double>(px.size() / Image::kChannels);
  return clamp_u8(static_cast<float>(static_cast<double>(sum) / n));
}

Image smooth(const Image& img) {
  const int w = img.width(), h = img.height();
  Image out = img;
  for (int y = 1; y + 1 < h; ++y)
    for (int x = 1; x + 1 < w; ++x)
      for (int c = 0; c < Image::kChannels; ++c) {
        int acc = 4 * img.at(x, y, c);
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) acc += img.at(x + dx, y + dy, c);
        out.at(x, y, c) = clamp_u8(acc / 13.0f);
      }
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out = img;
  const int w = img.width();
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < Image::kChannels; ++c) out.at(x, y, c) = img.at(w - 1 - x, y, c);
  return out;
}

Image resized_crop(const Image& img, double x0, double y0, double crop_w, double crop_h, int out_w, int out_h) {
  if (crop_w <= 0 || crop_h <= 0) throw std::invalid_argument("resized_crop: crop must be non-empty");
  const int w = img.width(), h = img.height();
  if (x0 == 0 && y0 == 0 && crop_w == w && crop_h == h && out_w == w && out_h == h) return img;
  Image out(out_w, out_h);
  const double sx = crop_w / out_w, sy = crop_h / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double v = std::clamp(y0 + (y + 0.5) * sy - 0.5, 0.0, h - 1.0);
    const int vy = std::min(static_cast<int>(v), h - 1);
    const int vy1 = std::min(vy + 1, h - 1);
    const auto ay = static_cast<float>(v - vy);
    for (int x = 0; x < out_w; ++x) {
      const double u = std::clamp(x0 + (x + 0.5) * sx - 0.5, 0.0, w - 1.0);
      const int ux = std::min(static_cast<int>(u), w - 1);
      const int ux1 = std::min(ux + 1, w - 1);
      const auto ax = static_cast<float>(u - ux);
      for (int c = 0; c < Image::kChannels; ++c) {
        const float top = img.at(ux, vy, c) * (1 - ax) + img.at(ux1, vy, c) * ax;
        const float bot = img.at(ux, vy1, c) * (1 - ax) + img.at(ux1, vy1, c) * ax;
        out.at(x, y, c) = clamp_u8(top * (1 - ay) + bot * ay);
      }
    }
  }
  return out;
}

}  // namespace dcaug
