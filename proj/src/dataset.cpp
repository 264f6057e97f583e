// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dcaug/rng.hpp"

namespace dcaug {

std::size_t DomainDataset::count_domain(int d) const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [d](const Sample& s) { return s.domain == d; }));
}

void DomainDataset::validate() const {
  if (num_domains < 1) throw std::invalid_argument("dataset: no domains");
  if (num_classes < 1) throw std::invalid_argument("dataset: no classes");
  if (samples.empty()) throw std::invalid_argument("dataset: no samples");
  if (!domain_names.empty() && static_cast<int>(domain_names.size()) != num_domains)
    throw std::invalid_argument("dataset: domain name count does not match domain count");
  const Image& first = samples.front().image;
  for (const auto& s : samples) {
    if (s.domain < 0 || s.domain >= num_domains) throw std::invalid_argument("dataset: domain index out of range");
    if (s.label < 0 || s.label >= num_classes) throw std::invalid_argument("dataset: label out of range");
    if (!s.image.same_shape(first)) throw std::invalid_argument("dataset: images differ in size");
  }
}

std::string_view texture_name(Texture t) {
  switch (t) {
    case Texture::Solid: return "solid";
    case Texture::Stripes: return "stripes";
    case Texture::Noise: return "noise";
  }
  return "?";
}

std::string_view shape_name(ShapeClass s) {
  switch (s) {
    case ShapeClass::Circle: return "circle";
    case ShapeClass::Square: return "square";
    case ShapeClass::Triangle: return "triangle";
    case ShapeClass::Cross: return "cross";
    case ShapeClass::Ring: return "ring";
  }
  return "?";
}

SyntheticDomainSpec SyntheticDomainSpec::desk_default() {
  SyntheticDomainSpec spec;
  spec.styles = {
      {"photo", {200, 190, 170}, {200, 190, 170}, 215, 0.6, 0.45, Texture::Solid, 2, false},
      {"cartoon", {250, 225, 70}, {250, 225, 70}, 0, 0.9, 0.9, Texture::Solid, 3, false},
      {"stripes", {40, 115, 60}, {95, 170, 105}, 300, 0.6, 0.95, Texture::Stripes, 2, false},
      {"sketch", {245, 245, 245}, {200, 200, 200}, 0, 0.0, 0.1, Texture::Noise, 2, true},
  };
  return spec;
}

void SyntheticDomainSpec::validate() const {
  if (styles.empty()) throw std::invalid_argument("spec: at least one domain style required");
  if (shapes.empty()) throw std::invalid_argument("spec: zero classes");
  if (samples_per_domain < 1) throw std::invalid_argument("spec: zero samples per domain");
  if (side < 8) throw std::invalid_argument("spec: image side must be >= 8");
  std::set<std::string> names;
  for (std::size_t i = 0; i < styles.size(); ++i) {
    if (!names.insert(styles[i].name).second) throw std::invalid_argument("spec: duplicate domain name " + styles[i].name);
    for (std::size_t j = 0; j < i; ++j) {
      const auto& a = styles[i];
      const auto& b = styles[j];
      if (a.background == b.background && a.background_alt == b.background_alt && a.hue_shift == b.hue_shift &&
          a.saturation == b.saturation && a.value == b.value && a.texture == b.texture && a.stroke == b.stroke &&
          a.outline == b.outline)
        throw std::invalid_argument("spec: styles " + a.name + " and " + b.name + " are identical");
    }
  }
}

namespace {

std::array<float, 3> hsv_to_rgb(double h, double s, double v) {
  h = std::fmod(std::fmod(h, 360.0) + 360.0, 360.0) / 60.0;
  const double c = v * s;
  const double x = c * (1 - std::abs(std::fmod(h, 2.0) - 1));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c, g = x; break;
    case 1: r = x, g = c; break;
    case 2: g = c, b = x; break;
    case 3: g = x, b = c; break;
    case 4: r = x, b = c; break;
    default: r = c, b = x; break;
  }
  return {static_cast<float>((r + m) * 255), static_cast<float>((g + m) * 255), static_cast<float>((b + m) * 255)};
}

struct Geometry {
  double cx, cy, r, cos_t, sin_t;
  double stroke;
  bool outline;
};

// Signed-ish inside test at a point in pixel units.
bool inside(ShapeClass shape, const Geometry& g, double px, double py) {
  const double dx = px - g.cx, dy = py - g.cy;
  const double x = g.cos_t * dx + g.sin_t * dy;
  const double y = -g.sin_t * dx + g.cos_t * dy;
  const double dist = std::hypot(dx, dy);
  switch (shape) {
    case ShapeClass::Circle: return dist <= g.r;
    case ShapeClass::Ring: return dist <= g.r && dist > g.r - (g.stroke + 1.5);
    case ShapeClass::Square: {
      const double half = g.r * 0.82;
      const double m = std::max(std::abs(x), std::abs(y));
      return m <= half && (!g.outline || m > half - g.stroke);
    }
    case ShapeClass::Triangle: {
      // Equilateral, apex up, circumradius r: three half-planes at distance r/2 from the centre.
      double edge = -1e9;
      for (int k = 0; k < 3; ++k) {
        const double a = std::numbers::pi / 2 + k * 2 * std::numbers::pi / 3;  // outward normals point down/left/right
        const double nx = -std::cos(a), ny = std::sin(a);
        edge = std::max(edge, nx * x + ny * y);
      }
      const double limit = g.r * 0.5;
      return edge <= limit && (!g.outline || edge > limit - g.stroke);
    }
    case ShapeClass::Cross: {
      const double half_w = g.stroke + 1.0;
      return (std::abs(x) <= half_w && std::abs(y) <= g.r) || (std::abs(y) <= half_w && std::abs(x) <= g.r);
    }
  }
  return false;
}

}  // namespace

Image render_sample(const DomainStyle& style, ShapeClass shape, int side, std::uint64_t seed) {
  Rng rng(seed);
  Image img(side, side);

  // Background.
  const double jitter = rng.uniform(-15, 15);
  const double stripe_angle = rng.uniform(0, std::numbers::pi);
  const double stripe_period = rng.uniform(4, 8);
  const double stripe_phase = rng.uniform(0, stripe_period);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      double t = 0;
      switch (style.texture) {
        case Texture::Solid: break;
        case Texture::Stripes: {
          const double s = x * std::cos(stripe_angle) + y * std::sin(stripe_angle) + stripe_phase;
          t = std::fmod(s, stripe_period) < stripe_period / 2 ? 0.0 : 1.0;
          break;
        }
        case Texture::Noise: t = rng.uniform(); break;
      }
      for (int c = 0; c < 3; ++c) {
        const double base = (1 - t) * style.background[c] + t * style.background_alt[c];
        img.at(x, y, c) = clamp_u8(static_cast<float>(base + jitter));
      }
    }

  // Foreground.
  const auto fg = hsv_to_rgb(style.hue_shift + rng.uniform(-20, 20), style.saturation,
                             std::clamp(style.value + rng.uniform(-0.08, 0.08), 0.0, 1.0));
  const double theta = rng.uniform(-15, 15) * std::numbers::pi / 180;
  const Geometry g{side / 2.0 + rng.uniform(-0.1, 0.1) * side, side / 2.0 + rng.uniform(-0.1, 0.1) * side,
                   side * rng.uniform(0.26, 0.36),       std::cos(theta),
                   std::sin(theta),                      static_cast<double>(style.stroke),
                   style.outline};
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      int hits = 0;
      for (int sy = 0; sy < 2; ++sy)
        for (int sx = 0; sx < 2; ++sx) hits += inside(shape, g, x + 0.25 + 0.5 * sx, y + 0.25 + 0.5 * sy) ? 1 : 0;
      if (hits == 0) continue;
      const float alpha = hits / 4.0f;
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = clamp_u8((1 - alpha) * img.at(x, y, c) + alpha * fg[static_cast<std::size_t>(c)]);
    }

  // Sensor noise.
  for (auto& v : img.pixels()) v = clamp_u8(static_cast<float>(v + rng.uniform(-4, 4)));
  return img;
}

DomainDataset generate_dataset(const SyntheticDomainSpec& spec, std::uint64_t seed) {
  spec.validate();
  DomainDataset ds;
  ds.num_domains = static_cast<int>(spec.styles.size());
  ds.num_classes = static_cast<int>(spec.shapes.size());
  for (const auto& s : spec.styles) ds.domain_names.push_back(s.name);
  ds.samples.reserve(static_cast<std::size_t>(ds.num_domains) * spec.samples_per_domain);
  for (int d = 0; d < ds.num_domains; ++d)
    for (int i = 0; i < spec.samples_per_domain; ++i) {
      const int label = i % ds.num_classes;
      const auto s = derive_seed(seed, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(i)});
      ds.samples.push_back({render_sample(spec.styles[static_cast<std::size_t>(d)], spec.shapes[static_cast<std::size_t>(label)],
                                          spec.side, s),
                            label, d, static_cast<std::uint64_t>(d) * spec.samples_per_domain + i});
    }
  return ds;
}

namespace {

constexpr std::array<char, 4> kMagic{'D', 'C', 'D', 'S'};

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) throw std::runtime_error("dataset: truncated stream");
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(value);
}

}  // namespace

void write_dataset(std::ostream& out, const DomainDataset& ds) {
  ds.validate();
  const Image& first = ds.samples.front().image;
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.num_domains));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.num_classes));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(first.width()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(first.height()));
  put_le<std::uint64_t>(out, ds.samples.size());
  for (int d = 0; d < ds.num_domains; ++d) {
    const std::string name = ds.domain_names.empty() ? "domain" + std::to_string(d) : ds.domain_names[static_cast<std::size_t>(d)];
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (const auto& s : ds.samples) {
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.domain));
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.label));
    const auto px = s.image.pixels();
    out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  }
  if (!out) throw std::runtime_error("dataset: write failed");
}

DomainDataset read_dataset(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw std::runtime_error("dataset: bad magic");
  if (get_le<std::uint32_t>(in) != 1) throw std::runtime_error("dataset: unsupported version");
  DomainDataset ds;
  ds.num_domains = static_cast<int>(get_le<std::uint32_t>(in));
  ds.num_classes = static_cast<int>(get_le<std::uint32_t>(in));
  const auto w = static_cast<int>(get_le<std::uint32_t>(in));
  const auto h = static_cast<int>(get_le<std::uint32_t>(in));
  const auto count = get_le<std::uint64_t>(in);
  if (w < 1 || h < 1 || w > 4096 || h > 4096) throw std::runtime_error("dataset: implausible image size");
  for (int d = 0; d < ds.num_domains; ++d) {
    const auto len = get_le<std::uint32_t>(in);
    if (len > 4096) throw std::runtime_error("dataset: implausible domain name length");
    std::string name(len, '\0');
    if (!in.read(name.data(), len)) throw std::runtime_error("dataset: truncated stream");
    ds.domain_names.push_back(std::move(name));
  }
  const std::size_t bytes = static_cast<std::size_t>(w) * h * Image::kChannels;
  std::vector<std::uint64_t> per_domain(static_cast<std::size_t>(ds.num_domains), 0);
  for (std::uint64_t i = 0; i < count; ++i) {
    Sample s;
    s.domain = get_le<std::uint16_t>(in);
    s.label = get_le<std::uint16_t>(in);
    std::vector<std::uint8_t> px(bytes);
    if (!in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(bytes)))
      throw std::runtime_error("dataset: truncated stream");
    s.image = Image(w, h, std::move(px));
    s.id = i;
    ds.samples.push_back(std::move(s));
  }
  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(e.what());
  }
  return ds;
}

void save_dataset(const std::filesystem::path& path, const DomainDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_dataset(out, ds);
}

DomainDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_dataset(in);
}

std::uint64_t dataset_digest(const DomainDataset& ds) {
  std::ostringstream buf(std::ios::binary);
  write_dataset(buf, ds);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : buf.str()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace dcaug
