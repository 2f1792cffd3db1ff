// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <filesystem>
#include <string>

#include "dexteach/kinematics.hpp"
#include "dexteach/retarget.hpp"
#include "dexteach/simhand.hpp"

namespace dexteach {

/// Everything the shared configuration file can set. Defaults are compiled in;
/// a file only needs the keys it overrides. Schema: docs/config.md.
struct AppConfig {
  HandModel model = default_hand_model();
  RetargetConfig retarget{};
  DynParams dynamics{};
  RenderConfig render{};
};

/// Defaults overlaid with the file's keys. Throws IoError if unreadable,
/// BadConfig on unknown keys, unparsable values or violated invariants.
AppConfig load_config(const std::filesystem::path& path);
AppConfig parse_config(const std::string& text);

/// Full INI rendering with every key; parse_config(to_ini(c)) reproduces c.
std::string to_ini(const AppConfig& cfg);

/// Rotation Rz(yaw) Ry(pitch) Rx(roll).
Mat3 rotation_from_rpy(const Vec3& rpy);

/// Short hex digests of the canonical INI text (whole file / hand model only).
std::string config_hash(const AppConfig& cfg);
std::string model_hash(const HandModel& model);

}  // namespace dexteach
