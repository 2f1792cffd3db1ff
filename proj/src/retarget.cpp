// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/retarget.hpp"

#include <string>

#include "dexteach/error.hpp"

namespace dexteach {

void validate(const RetargetConfig& cfg) {
  for (int i = 0; i < 3; ++i) {
    if (!(cfg.thumb_scale[i] > 0.1 && cfg.thumb_scale[i] < 10.0)) {
      fail(ErrorCode::BadConfig, "thumb_scale components must lie in (0.1, 10)");
    }
  }
  if (!cfg.thumb_offset.allFinite()) fail(ErrorCode::BadConfig, "thumb_offset must be finite");
  if (!(cfg.angle_gain > 0.0) || !std::isfinite(cfg.angle_gain)) {
    fail(ErrorCode::BadConfig, "angle_gain must be positive");
  }
  if (!(cfg.ik.lambda >= 0.0) || cfg.ik.max_iters < 0 || !(cfg.ik.tol_m > 0.0)) {
    fail(ErrorCode::BadConfig, "ik settings out of range");
  }
}

Vec3 thumb_target(const HumanJointAngles& angles, const RetargetConfig& cfg) {
  return cfg.thumb_scale.cwiseProduct(angles.thumb_tip) + cfg.thumb_offset;
}

JointVector retarget(const HumanJointAngles& angles, const JointVector& q_prev,
                     const HandModel& model, const RetargetConfig& cfg) {
  JointVector q = q_prev;
  constexpr std::array<std::pair<FingerId, HumanFinger>, 3> kDirect = {{
      {FingerId::Index, HumanFinger::Index},
      {FingerId::Middle, HumanFinger::Middle},
      {FingerId::Ring, HumanFinger::Ring},
  }};
  for (const auto& [robot, human] : kDirect) {
    const FingerAngles& a = angles.finger(human);
    const FingerJoints copied(cfg.angle_gain * a.abduction, cfg.angle_gain * a.flexion[0],
                              cfg.angle_gain * a.flexion[1], cfg.angle_gain * a.flexion[2]);
    set_finger_joints(q, robot, clamp_limits(model, robot, copied));
  }

  const IkResult thumb = solve_ik(model, FingerId::Thumb, thumb_target(angles, cfg),
                                  finger_joints(q_prev, FingerId::Thumb), cfg.ik);
  set_finger_joints(q, FingerId::Thumb, thumb.q);
  return q;
}

ThumbMap calibrate_thumb(const std::vector<std::pair<Vec3, Vec3>>& samples) {
  if (samples.size() < 4) {
    fail(ErrorCode::DegenerateSamples,
         "need at least 4 samples, got " + std::to_string(samples.size()));
  }
  const double n = static_cast<double>(samples.size());
  Vec3 mean_h = Vec3::Zero();
  Vec3 mean_r = Vec3::Zero();
  for (const auto& [h, r] : samples) {
    mean_h += h;
    mean_r += r;
  }
  mean_h /= n;
  mean_r /= n;

  Vec3 var_h = Vec3::Zero();
  Vec3 cov_hr = Vec3::Zero();
  for (const auto& [h, r] : samples) {
    const Vec3 dh = h - mean_h;
    var_h += dh.cwiseProduct(dh);
    cov_hr += dh.cwiseProduct(r - mean_r);
  }
  var_h /= n;
  cov_hr /= n;

  ThumbMap map;
  for (int axis = 0; axis < 3; ++axis) {
    if (var_h[axis] < 1e-12) {
      fail(ErrorCode::DegenerateSamples,
           "human thumb samples do not vary along axis " + std::to_string(axis));
    }
    map.thumb_scale[axis] = cov_hr[axis] / var_h[axis];
    map.thumb_offset[axis] = mean_r[axis] - map.thumb_scale[axis] * mean_h[axis];
  }
  return map;
}

}  // namespace dexteach
