// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dcaug/image.hpp"

namespace dcaug {

struct Sample {
  Image image;
  int label = 0;
  int domain = 0;
  std::uint64_t id = 0;  // unique within a dataset
};

struct DomainDataset {
  int num_domains = 0;
  int num_classes = 0;
  std::vector<std::string> domain_names;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t count_domain(int d) const;
  /// Throws std::invalid_argument if labels, domains or image sizes are inconsistent.
  void validate() const;
};

enum class Texture { Solid, Stripes, Noise };

std::string_view texture_name(Texture t);

/// Rendering style of one domain.
struct DomainStyle {
  std::string name;
  std::array<std::uint8_t, 3> background{};  // base palette colour
  std::array<std::uint8_t, 3> background_alt{};  // second stripe colour / noise centre
  double hue_shift = 0;                        // foreground hue, degrees
  double saturation = 0.8;
  double value = 0.8;
  Texture texture = Texture::Solid;
  int stroke = 2;  // cross bar and ring width in pixels
  bool outline = false;  // draw filled shapes as outlines of `stroke` width
};

enum class ShapeClass { Circle, Square, Triangle, Cross, Ring };

inline constexpr std::array<ShapeClass, 5> kDefaultShapes{ShapeClass::Circle, ShapeClass::Square, ShapeClass::Triangle,
                                                           ShapeClass::Cross, ShapeClass::Ring};

std::string_view shape_name(ShapeClass s);

struct SyntheticDomainSpec {
  std::vector<DomainStyle> styles;
  std::vector<ShapeClass> shapes{kDefaultShapes.begin(), kDefaultShapes.end()};
  int side = 32;
  int samples_per_domain = 200;

  /// Four pairwise-distinct styles.
  static SyntheticDomainSpec desk_default();
  void validate() const;
};

/// Deterministic in (spec, seed). Classes are balanced per domain (the
/// remainder, if any, goes to the lowest class indices).
DomainDataset generate_dataset(const SyntheticDomainSpec& spec, std::uint64_t seed);

/// Renders one shape in a style; exposed for previews and tests.
Image render_sample(const DomainStyle& style, ShapeClass shape, int side, std::uint64_t seed);

// Binary container (little-endian):
//   "DCDS" | u32 version=1 | u32 domains | u32 classes | u32 width | u32 height | u64 count
//   | domains x (u32 len, name bytes) | count x (u16 domain, u16 label, w*h*3 bytes)
void write_dataset(std::ostream& out, const DomainDataset& ds);
DomainDataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const DomainDataset& ds);
DomainDataset load_dataset(const std::filesystem::path& path);

/// FNV-1a 64 of the binary container.
std::uint64_t dataset_digest(const DomainDataset& ds);

}  // namespace dcaug
