// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <array>

#include "dexteach/kinematics.hpp"

namespace dexteach {

struct RobotState {
  JointVector q = JointVector::Zero();
  JointVector qdot = JointVector::Zero();
  double t_sim = 0.0;
};

struct DynParams {
  double inertia = 1e-3;  // kg m^2, every joint
  double damping = 0.01;  // viscous, N m s / rad
  Vec3 gravity{0.0, 0.0, -9.81};
  double kp = 0.8;
  double kd = 0.05;
  double dt = 1.0 / 300.0;
};

/// Throws BadConfig unless inertia, kp > 0, kd, damping >= 0 and dt in (0, 0.01].
void validate(const DynParams& params);

inline constexpr int kImageSide = 32;
inline constexpr int kImagePixels = kImageSide * kImageSide;

/// 32x32 grayscale, row-major, values in [0, 1].
using Observation = std::array<double, kImagePixels>;

struct RenderConfig {
  double center_x = 0.10;  // palm-frame point imaged at the image centre
  double center_y = 0.07;
  double pixel_pitch = 0.0085;  // metres per pixel
  double sigma_joint = 1.2;     // px
  double sigma_tip = 2.0;       // px
};

void validate(const RenderConfig& cfg);

/// Generalized gravity force on each joint, i.e. -dU/dq for
/// U = sum m g z(link centre). Each link's mass sits at its midpoint.
JointVector gravity_torque(const HandModel& model, const JointVector& q, const Vec3& gravity);

/// tau = Kp (q_des - q) - Kd qdot + compensation.
JointVector pd_torque(const RobotState& state, const JointVector& q_des, const DynParams& params,
                      const JointVector& compensation);

/// One semi-implicit Euler step of the decoupled joint dynamics
/// I qdd = tau - b qdot + G(q), with the controller compensating exactly with
/// -G(q). Joints that hit a limit are clamped and stopped.
RobotState step(const RobotState& state, const JointVector& q_des, const HandModel& model,
                const DynParams& params);

Observation render_observation(const HandModel& model, const RobotState& state,
                               const RenderConfig& cfg = {});

}  // namespace dexteach
