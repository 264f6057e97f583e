// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "dcaug/image.hpp"
#include "dcaug/rng.hpp"

namespace dcaug {

enum class TransformOp {
  ShearX,
  ShearY,
  TranslateX,
  TranslateY,
  Rotate,
  Posterize,
  Solarize,
  Contrast,
  Color,
  Brightness,
  Sharpness,
  AutoContrast,
  Equalize,
  Grey,
};

inline constexpr int kNumOps = 14;

inline constexpr std::array<TransformOp, kNumOps> kAllOps{
    TransformOp::ShearX,     TransformOp::ShearY,    TransformOp::TranslateX, TransformOp::TranslateY,
    TransformOp::Rotate,     TransformOp::Posterize, TransformOp::Solarize,   TransformOp::Contrast,
    TransformOp::Color,      TransformOp::Brightness, TransformOp::Sharpness, TransformOp::AutoContrast,
    TransformOp::Equalize,   TransformOp::Grey,
};

std::string_view op_name(TransformOp op);
std::optional<TransformOp> parse_op(std::string_view name);

bool is_parameterless(TransformOp op);
/// Posterize and Solarize take integer magnitudes.
bool is_integer_op(TransformOp op);

enum class SpaceVariant { Default, Wide, Wider };

std::string_view variant_name(SpaceVariant v);
/// "default" | "wide" | "wider"; throws std::invalid_argument otherwise.
SpaceVariant parse_space_variant(std::string_view name);

struct MagnitudeRange {
  double lo = 0;
  double hi = 0;
  friend bool operator==(const MagnitudeRange&, const MagnitudeRange&) = default;
};

/// Magnitude ranges per op. Translate ranges are expressed in pixels and
/// scale with the image side; at side 224 every constant is the reference table.
class SearchSpace {
 public:
  static constexpr int kReferenceSide = 224;

  explicit SearchSpace(SpaceVariant variant, int image_side = kReferenceSide);

  SpaceVariant variant() const { return variant_; }
  int image_side() const { return side_; }

  /// std::nullopt for the parameterless ops.
  std::optional<MagnitudeRange> range(TransformOp op) const;

 private:
  SpaceVariant variant_;
  int side_;
};

inline std::optional<MagnitudeRange> get_range(const SearchSpace& space, TransformOp op) { return space.range(op); }

/// Where a sampled transform came from.
struct Provenance {
  std::uint64_t seed = 0;
  std::int64_t step = -1;
  std::int64_t index = -1;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct AppliedTransform {
  TransformOp op = TransformOp::Grey;
  std::optional<double> magnitude;  // integral value for Posterize/Solarize
  Provenance provenance;
  friend bool operator==(const AppliedTransform&, const AppliedTransform&) = default;
};

/// One op drawn uniformly from the 14, then a magnitude uniform over its range
/// (integer lattice for integer ops).
AppliedTransform sample(const SearchSpace& space, Rng& rng, Provenance provenance = {});

/// Dispatches to the imaging kernels. Throws std::invalid_argument if the
/// magnitude is missing, unexpected, non-integral for an integer op, or outside
/// the kernel's domain. When `space` is given the magnitude must lie in its range.
Image apply(const AppliedTransform& t, const Image& img, const SearchSpace* space = nullptr);

struct WeakConfig {
  double flip = 0.5;
  std::pair<double, double> scale{0.7, 1.0};
  double brightness = 0.3;
  double contrast = 0.3;
  double saturation = 0.3;

  /// Throws std::invalid_argument when a field is out of its domain.
  void validate() const;
  friend bool operator==(const WeakConfig&, const WeakConfig&) = default;
};

/// Flip, square random-resized crop, then brightness/contrast/saturation jitter.
Image weak_augment(const Image& img, const WeakConfig& cfg, Rng& rng);

/// One transform from `space` applied on top of the weak output.
std::pair<Image, AppliedTransform> wider_augment(const Image& weak_img, const SearchSpace& space, Rng& rng,
                                                 Provenance provenance = {});

}  // namespace dcaug
