// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "dcaug/image.hpp"

namespace dcaug {

/// Inverse map from output pixel coordinates to source coordinates,
/// both measured in pixels from the image center:
///   u = a*x + b*y + c,  v = d*x + e*y + f.
struct AffineMatrix {
  double a = 1, b = 0, c = 0;
  double d = 0, e = 1, f = 0;

  static AffineMatrix identity() { return {}; }
  /// Content moves by (dx, dy) pixels.
  static AffineMatrix translate(double dx, double dy) { return {1, 0, -dx, 0, 1, -dy}; }
  /// Content rotates counter-clockwise (on screen) by `degrees` about the center.
  static AffineMatrix rotate(double degrees);
  static AffineMatrix shear_x(double m) { return {1, m, 0, 0, 1, 0}; }
  static AffineMatrix shear_y(double m) { return {1, 0, 0, m, 1, 0}; }

  bool is_identity() const { return a == 1 && b == 0 && c == 0 && d == 0 && e == 1 && f == 0; }
};

inline constexpr std::uint8_t kDefaultFill = 128;

/// Bilinear inverse warp; reads outside the source rectangle return `fill`.
Image affine_warp(const Image& img, const AffineMatrix& m, std::uint8_t fill = kDefaultFill);

/// out = degenerate + factor * (original - degenerate) in float form, clamped.
/// Throws std::invalid_argument on a dimension mismatch.
Image blend(const Image& degenerate, const Image& original, double factor);

/// Keeps the top `bits` bits of every sample. bits in [0, 8].
Image posterize(const Image& img, int bits);

/// Samples >= threshold become 255 - v. threshold in [0, 255].
Image solarize(const Image& img, int threshold);

Image autocontrast(const Image& img);
Image equalize(const Image& img);

/// ITU-R 601 luminance replicated across the three channels.
Image greyscale(const Image& img);

// Degenerate references for the enhancement ops.
Image uniform_like(const Image& img, std::uint8_t value);
/// Mean of the greyscale image, rounded to 8 bits.
std::uint8_t mean_luminance(const Image& img);
/// 3x3 smoothing kernel (1 1 1 / 1 5 1 / 1 1 1) / 13; the one-pixel border is copied.
Image smooth(const Image& img);

Image flip_horizontal(const Image& img);

/// Crops [x0, x0+crop_w) x [y0, y0+crop_h) and resizes it bilinearly to
/// out_w x out_h. A full-frame crop at the original size is the identity.
Image resized_crop(const Image& img, double x0, double y0, double crop_w, double crop_h, int out_w, int out_h);

}  // namespace dcaug
