// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>

#include "dcaug/image.hpp"

namespace dcaug {

/// 8-bit RGB PNG. Throws std::runtime_error on I/O or decode failure.
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

/// Tiles equally sized images into a grid with a `gap`-pixel separator.
Image contact_sheet(std::span<const Image> tiles, int columns, int gap = 2, std::uint8_t background = 255);

}  // namespace dcaug
