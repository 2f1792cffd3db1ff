// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <utility>
#include <vector>

#include "dexteach/hand_pose.hpp"
#include "dexteach/kinematics.hpp"

namespace dexteach {

struct RetargetConfig {
  Vec3 thumb_scale = Vec3::Ones();
  Vec3 thumb_offset = Vec3::Zero();
  IkConfig ik{};
  double angle_gain = 1.0;
};

/// Throws BadConfig if a scale leaves (0.1, 10), the gain is not positive or
/// any field is non-finite.
void validate(const RetargetConfig& cfg);

/// Index, middle and ring copy the human (abduction, MCP, PIP, DIP) angles,
/// scaled by angle_gain and clamped; the thumb follows the mapped human
/// fingertip through IK warm-started from q_prev.
JointVector retarget(const HumanJointAngles& angles, const JointVector& q_prev,
                     const HandModel& model, const RetargetConfig& cfg);

/// Fingertip target the thumb IK is asked to reach.
Vec3 thumb_target(const HumanJointAngles& angles, const RetargetConfig& cfg);

struct ThumbMap {
  Vec3 thumb_scale = Vec3::Ones();
  Vec3 thumb_offset = Vec3::Zero();
};

/// Per-axis least-squares fit of robot = scale * human + offset. Needs at
/// least four samples; throws DegenerateSamples when an axis of the human
/// samples has variance below 1e-12.
ThumbMap calibrate_thumb(const std::vector<std::pair<Vec3, Vec3>>& samples);

}  // namespace dexteach
