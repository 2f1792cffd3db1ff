// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dexteach/demo_store.hpp"
#include "dexteach/hand_pose.hpp"
#include "dexteach/retarget.hpp"
#include "dexteach/simhand.hpp"

namespace dexteach::testing {

/// Renders `count` poses of a grasp_close clip sampled at 5 Hz, retargeted
/// onto the default hand and imaged directly (no dynamics).
inline std::vector<Observation> grasp_observations(int count, std::uint64_t seed) {
  const HandModel model = default_hand_model();
  const auto frames = synth_trajectory(Gesture::GraspClose, count / 5.0, 5.0, seed);
  std::vector<Observation> out;
  JointVector q = JointVector::Zero();
  for (const auto& f : frames) {
    q = retarget(extract_joint_angles(f), q, model, {});
    RobotState s;
    s.q = q;
    out.push_back(render_observation(model, s));
  }
  return out;
}

}  // namespace dexteach::testing
