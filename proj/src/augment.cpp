// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/augment.hpp"

#include <cmath>
#include <stdexcept>

#include "dcaug/imaging.hpp"

namespace dcaug {

namespace {

constexpr std::array<std::string_view, kNumOps> kOpNames{
    "ShearX",   "ShearY", "TranslateX", "TranslateY", "Rotate",       "Posterize", "Solarize",
    "Contrast", "Color",  "Brightness", "Sharpness",  "AutoContrast", "Equalize",  "Grey",
};

}  // namespace

std::string_view op_name(TransformOp op) { return kOpNames[static_cast<std::size_t>(op)]; }

std::optional<TransformOp> parse_op(std::string_view name) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i)
    if (kOpNames[i] == name) return kAllOps[i];
  return std::nullopt;
}

bool is_parameterless(TransformOp op) {
  return op == TransformOp::AutoContrast || op == TransformOp::Equalize || op == TransformOp::Grey;
}

bool is_integer_op(TransformOp op) { return op == TransformOp::Posterize || op == TransformOp::Solarize; }

std::string_view variant_name(SpaceVariant v) {
  switch (v) {
    case SpaceVariant::Default: return "default";
    case SpaceVariant::Wide: return "wide";
    case SpaceVariant::Wider: return "wider";
  }
  return "?";
}

SpaceVariant parse_space_variant(std::string_view name) {
  if (name == "default") return SpaceVariant::Default;
  if (name == "wide") return SpaceVariant::Wide;
  if (name == "wider") return SpaceVariant::Wider;
  throw std::invalid_argument("unknown search space '" + std::string(name) + "' (expected default|wide|wider)");
}

SearchSpace::SearchSpace(SpaceVariant variant, int image_side) : variant_(variant), side_(image_side) {
  if (image_side < 1) throw std::invalid_argument("SearchSpace: image side must be >= 1");
}

std::optional<MagnitudeRange> SearchSpace::range(TransformOp op) const {
  const bool wider = variant_ == SpaceVariant::Wider;
  switch (op) {
    case TransformOp::ShearX:
    case TransformOp::ShearY:
      return variant_ == SpaceVariant::Default ? MagnitudeRange{-0.3, 0.3} : MagnitudeRange{-1.0, 1.0};
    case TransformOp::TranslateX:
    case TransformOp::TranslateY: {
      if (side_ == kReferenceSide) return wider ? MagnitudeRange{-224.0, 224.0} : MagnitudeRange{-32.0, 32.0};
      const double t = wider ? side_ : std::round(32.0 / kReferenceSide * side_);
      return MagnitudeRange{-t, t};
    }
    case TransformOp::Rotate:
      return variant_ == SpaceVariant::Default ? MagnitudeRange{-30.0, 30.0} : MagnitudeRange{-135.0, 135.0};
    case TransformOp::Posterize:
      switch (variant_) {
        case SpaceVariant::Default: return MagnitudeRange{4, 8};
        case SpaceVariant::Wide: return MagnitudeRange{2, 8};
        case SpaceVariant::Wider: return MagnitudeRange{0, 8};
      }
      break;
    case TransformOp::Solarize: return MagnitudeRange{0, 255};
    case TransformOp::Contrast:
    case TransformOp::Color:
    case TransformOp::Sharpness: return wider ? MagnitudeRange{-10.0, 10.0} : MagnitudeRange{-1.0, 1.0};
    case TransformOp::Brightness: return wider ? MagnitudeRange{-1.0, 10.0} : MagnitudeRange{-1.0, 1.0};
    case TransformOp::AutoContrast:
    case TransformOp::Equalize:
    case TransformOp::Grey: return std::nullopt;
  }
  return std::nullopt;
}

AppliedTransform sample(const SearchSpace& space, Rng& rng, Provenance provenance) {
  AppliedTransform t;
  t.op = kAllOps[static_cast<std::size_t>(rng.uniform_int(0, kNumOps - 1))];
  t.provenance = provenance;
  if (const auto r = space.range(t.op)) {
    if (is_integer_op(t.op))
      t.magnitude = static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(r->lo), static_cast<std::int64_t>(r->hi)));
    else
      t.magnitude = rng.uniform(r->lo, r->hi);
  }
  return t;
}

Image apply(const AppliedTransform& t, const Image& img, const SearchSpace* space) {
  const std::string name(op_name(t.op));
  if (is_parameterless(t.op)) {
    if (t.magnitude) throw std::invalid_argument(name + " takes no magnitude");
  } else {
    if (!t.magnitude) throw std::invalid_argument(name + " requires a magnitude");
    if (!std::isfinite(*t.magnitude)) throw std::invalid_argument(name + ": magnitude must be finite");
    if (is_integer_op(t.op) && *t.magnitude != std::round(*t.magnitude))
      throw std::invalid_argument(name + ": magnitude must be an integer");
    if (space) {
      const auto r = space->range(t.op);
      if (*t.magnitude < r->lo || *t.magnitude > r->hi)
        throw std::invalid_argument(name + ": magnitude " + std::to_string(*t.magnitude) + " outside [" +
                                    std::to_string(r->lo) + ", " + std::to_string(r->hi) + "]");
    }
  }
  const double m = t.magnitude.value_or(0.0);
  switch (t.op) {
    case TransformOp::ShearX: return affine_warp(img, AffineMatrix::shear_x(m));
    case TransformOp::ShearY: return affine_warp(img, AffineMatrix::shear_y(m));
    case TransformOp::TranslateX: return affine_warp(img, AffineMatrix::translate(m, 0));
    case TransformOp::TranslateY: return affine_warp(img, AffineMatrix::translate(0, m));
    case TransformOp::Rotate: return affine_warp(img, AffineMatrix::rotate(m));
    case TransformOp::Posterize: return posterize(img, static_cast<int>(m));
    case TransformOp::Solarize: return solarize(img, static_cast<int>(m));
    case TransformOp::Contrast: return blend(uniform_like(img, mean_luminance(img)), img, 1.0 + m);
    case TransformOp::Color: return blend(greyscale(img), img, 1.0 + m);
    case TransformOp::Brightness: return blend(uniform_like(img, 0), img, 1.0 + m);
    case TransformOp::Sharpness: return blend(smooth(img), img, 1.0 + m);
    case TransformOp::AutoContrast: return autocontrast(img);
    case TransformOp::Equalize: return equalize(img);
    case TransformOp::Grey: return greyscale(img);
  }
  throw std::invalid_argument("apply: unknown op");
}

void WeakConfig::validate() const {
  if (!(flip >= 0 && flip <= 1)) throw std::invalid_argument("weak.flip must be in [0, 1]");
  if (!(scale.first > 0 && scale.first <= scale.second && scale.second <= 1))
    throw std::invalid_argument("weak.scale must satisfy 0 < lo <= hi <= 1");
  if (!(brightness >= 0 && contrast >= 0 && saturation >= 0))
    throw std::invalid_argument("weak jitter strengths must be >= 0");
}

Image weak_augment(const Image& img, const WeakConfig& cfg, Rng& rng) {
  // Every draw happens unconditionally so the stream position after this call
  // does not depend on the configuration.
  const bool flip = rng.uniform() < cfg.flip;
  const double area = rng.uniform(cfg.scale.first, cfg.scale.second);
  const double ox = rng.uniform(), oy = rng.uniform();
  const double b = rng.uniform(1 - cfg.brightness, 1 + cfg.brightness);
  const double c = rng.uniform(1 - cfg.contrast, 1 + cfg.contrast);
  const double s = rng.uniform(1 - cfg.saturation, 1 + cfg.saturation);

  Image out = flip ? flip_horizontal(img) : img;
  const int w = out.width(), h = out.height();
  // Aspect ratio of the crop matches the image.
  const double k = std::sqrt(area);
  if (k < 1.0) out = resized_crop(out, ox * w * (1 - k), oy * h * (1 - k), k * w, k * h, w, h);
  if (cfg.brightness > 0) out = blend(uniform_like(out, 0), out, b);
  if (cfg.contrast > 0) out = blend(uniform_like(out, mean_luminance(out)), out, c);
  if (cfg.saturation > 0) out = blend(greyscale(out), out, s);
  return out;
}

std::pair<Image, AppliedTransform> wider_augment(const Image& weak_img, const SearchSpace& space, Rng& rng,
                                                 Provenance provenance) {
  AppliedTransform t = sample(space, rng, provenance);
  Image out = apply(t, weak_img);
  return {std::move(out), std::move(t)};
}

}  // namespace dcaug
