// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>

#include "dcaug/model.hpp"

namespace dcaug {

// Layout (little-endian):
//   "DCCK" | u32 version=1 | u32 inputs | u32 hidden | u32 classes | u64 count | count x f32
void write_checkpoint(std::ostream& out, const Classifier& p);
Classifier read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Classifier& p);
Classifier load_checkpoint(const std::filesystem::path& path);

}  // namespace dcaug
