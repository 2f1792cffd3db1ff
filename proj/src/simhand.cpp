// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/simhand.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "dexteach/error.hpp"

namespace dexteach {

void validate(const DynParams& p) {
  if (!(p.inertia > 0.0) || !(p.kp > 0.0)) fail(ErrorCode::BadConfig, "inertia and kp must be positive");
  if (!(p.kd >= 0.0) || !(p.damping >= 0.0)) fail(ErrorCode::BadConfig, "kd and damping must be non-negative");
  if (!(p.dt > 0.0 && p.dt <= 0.01)) fail(ErrorCode::BadConfig, "dt must lie in (0, 0.01]");
  if (!p.gravity.allFinite()) fail(ErrorCode::BadConfig, "gravity must be finite");
}

void validate(const RenderConfig& c) {
  if (!(c.pixel_pitch > 0.0) || !(c.sigma_joint > 0.0) || !(c.sigma_tip > 0.0) ||
      !std::isfinite(c.center_x) || !std::isfinite(c.center_y)) {
    fail(ErrorCode::BadConfig, "render settings out of range");
  }
}

JointVector gravity_torque(const HandModel& model, const JointVector& q, const Vec3& gravity) {
  JointVector tau = JointVector::Zero();
  if (gravity.isZero(0.0)) return tau;
  const HandKinematics fk = forward_kinematics(model, q);
  for (FingerId f : kAllFingers) {
    const FingerKinematics& chain = fk.finger(f);
    const FingerSpec& spec = model.finger(f);
    for (int i = 0; i < kJointsPerFinger; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      double t = 0.0;
      for (int j = i; j < kJointsPerFinger; ++j) {
        const Vec3 force = spec.joints[static_cast<std::size_t>(j)].mass * gravity;
        t += chain.axes[ii].dot((chain.link_center(j) - chain.origins[ii]).cross(force));
      }
      tau[first_joint(f) + i] = t;
    }
  }
  return tau;
}

JointVector pd_torque(const RobotState& state, const JointVector& q_des, const DynParams& params,
                      const JointVector& compensation) {
  return params.kp * (q_des - state.q) - params.kd * state.qdot + compensation;
}

RobotState step(const RobotState& state, const JointVector& q_des, const HandModel& model,
                const DynParams& params) {
  const JointVector gravity = gravity_torque(model, state.q, params.gravity);
  const JointVector tau = pd_torque(state, q_des, params, -gravity);
  const JointVector accel = (tau - params.damping * state.qdot + gravity) / params.inertia;

  RobotState next;
  next.qdot = state.qdot + accel * params.dt;
  const JointVector unclamped = state.q + next.qdot * params.dt;
  next.q = clamp_limits(model, unclamped);
  for (int i = 0; i < kNumJoints; ++i) {
    if (next.q[i] != unclamped[i]) next.qdot[i] = 0.0;
  }
  next.t_sim = state.t_sim + params.dt;
  return next;
}

namespace {

struct Splat {
  double col;
  double row;
  double sigma;
};

}  // namespace

Observation render_observation(const HandModel& model, const RobotState& state,
                               const RenderConfig& cfg) {
  const HandKinematics fk = forward_kinematics(model, state.q);
  const double half = 0.5 * (kImageSide - 1);
  auto project = [&](const Vec3& p, double sigma) {
    // Looking down the palm normal: image columns follow x, rows follow -y.
    return Splat{(p.x() - cfg.center_x) / cfg.pixel_pitch + half,
                 (cfg.center_y - p.y()) / cfg.pixel_pitch + half, sigma};
  };

  std::vector<Splat> splats;
  splats.reserve(kNumJoints + 2 * kNumFingers);
  for (const FingerKinematics& chain : fk.fingers) {
    for (const Vec3& o : chain.origins) splats.push_back(project(o, cfg.sigma_joint));
    splats.push_back(project(chain.tip, cfg.sigma_joint));
    splats.push_back(project(chain.tip, cfg.sigma_tip));
  }

  Observation image{};
  for (const Splat& s : splats) {
    const double inv = 1.0 / (2.0 * s.sigma * s.sigma);
    for (int r = 0; r < kImageSide; ++r) {
      const double dr = r - s.row;
      for (int c = 0; c < kImageSide; ++c) {
        const double dc = c - s.col;
        image[static_cast<std::size_t>(r * kImageSide + c)] += std::exp(-(dr * dr + dc * dc) * inv);
      }
    }
  }
  for (double& v : image) v = std::clamp(v, 0.0, 1.0);
  return image;
}

}  // namespace dexteach
