// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <array>

#include "dexteach/types.hpp"

namespace dexteach {

struct JointSpec {
  Vec3 axis = Vec3::UnitY();  // unit, in the parent link frame
  double length = 0.0;        // link following this joint, along its local x
  double mass = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct FingerSpec {
  Vec3 base_position = Vec3::Zero();
  Mat3 base_rotation = Mat3::Identity();
  double base_offset = 0.0;  // distance from the base to the first joint, local x
  std::array<JointSpec, kJointsPerFinger> joints{};
};

/// Four-finger, sixteen-joint hand expressed in the palm frame (x toward the
/// fingers, y toward the thumb, z dorsal). Immutable once validated.
struct HandModel {
  std::array<FingerSpec, kNumFingers> fingers{};

  const FingerSpec& finger(FingerId f) const { return fingers.at(static_cast<std::size_t>(f)); }
  FingerSpec& finger(FingerId f) { return fingers.at(static_cast<std::size_t>(f)); }
  const JointSpec& joint(int i) const {
    return fingers.at(static_cast<std::size_t>(i / kJointsPerFinger))
        .joints.at(static_cast<std::size_t>(i % kJointsPerFinger));
  }

  JointVector lower() const;
  JointVector upper() const;
  double reach(FingerId f) const;  // sum of link lengths after the first joint
};

/// Throws BadConfig when an axis is not unit length, a limit range is empty or
/// a length/mass is not positive.
void validate(const HandModel& model);

/// The compiled-in default geometry.
HandModel default_hand_model();

struct FingerKinematics {
  std::array<Vec3, kJointsPerFinger> origins{};  // joint origins, palm frame
  std::array<Vec3, kJointsPerFinger> axes{};     // joint axes, palm frame
  Vec3 tip = Vec3::Zero();

  /// Midpoint of the link that follows joint j.
  Vec3 link_center(int j) const;
};

struct HandKinematics {
  std::array<FingerKinematics, kNumFingers> fingers{};
  const FingerKinematics& finger(FingerId f) const {
    return fingers.at(static_cast<std::size_t>(f));
  }
};

FingerKinematics finger_forward(const HandModel& model, FingerId finger, const FingerJoints& q);
HandKinematics forward_kinematics(const HandModel& model, const JointVector& q);

using FingerJacobian = Eigen::Matrix<double, 3, kJointsPerFinger>;

/// Positional Jacobian of the fingertip; column j = a_j x (p_tip - o_j).
FingerJacobian jacobian(const HandModel& model, FingerId finger, const JointVector& q);
FingerJacobian jacobian(const HandModel& model, FingerId finger, const FingerJoints& q);

JointVector clamp_limits(const HandModel& model, const JointVector& q);
FingerJoints clamp_limits(const HandModel& model, FingerId finger, const FingerJoints& q);

struct IkConfig {
  double lambda = 0.05;
  int max_iters = 100;
  double tol_m = 1e-4;
};

struct IkResult {
  FingerJoints q = FingerJoints::Zero();
  double residual_m = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Damped least squares, dq = J^T (J J^T + lambda^2 I)^-1 e, projected onto
/// the joint limits after every step. Throws NonFiniteTarget.
IkResult solve_ik(const HandModel& model, FingerId finger, const Vec3& target,
                  const FingerJoints& q0, const IkConfig& cfg = {});

}  // namespace dexteach
