// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <filesystem>

#include "dexteach/mlp.hpp"

namespace dexteach {

// Flat little-endian file; layout in docs/encoder_format.md.
void save_net(const std::filesystem::path& path, const Net& net);

/// Throws IoError if the file cannot be read, BadConfig if it is not a valid
/// network file (bad magic, inconsistent shapes, truncation, non-finite values).
Net load_net(const std::filesystem::path& path);

}  // namespace dexteach
