// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dcaug {
namespace {

constexpr std::array<char, 4> kMagic{'D', 'C', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) throw std::runtime_error("checkpoint: truncated stream");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(buf[i]) << (8 * i);
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Classifier& p) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.shape().inputs));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.shape().hidden));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.shape().classes));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(p.flat().size()));
  for (Eigen::Index i = 0; i < p.flat().size(); ++i) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(p.flat()[i]));
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Classifier read_checkpoint(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw std::runtime_error("checkpoint: bad magic");
  if (get_le<std::uint32_t>(in) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  ClassifierShape shape;
  shape.inputs = static_cast<int>(get_le<std::uint32_t>(in));
  shape.hidden = static_cast<int>(get_le<std::uint32_t>(in));
  shape.classes = static_cast<int>(get_le<std::uint32_t>(in));
  const auto count = get_le<std::uint64_t>(in);
  shape.validate();
  if (count != static_cast<std::uint64_t>(shape.param_count()))
    throw std::runtime_error("checkpoint: parameter count does not match shape header");
  Classifier p(shape);
  for (Eigen::Index i = 0; i < p.flat().size(); ++i) p.flat()[i] = std::bit_cast<float>(get_le<std::uint32_t>(in));
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const Classifier& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_checkpoint(out, p);
}

Classifier load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace dcaug
