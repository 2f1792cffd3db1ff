// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/kinematics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <cmath>
#include <string>

#include "dexteach/error.hpp"
#include "dexteach/hand_pose.hpp"

namespace dexteach {

namespace {

constexpr double kIllConditioned = 1e12;

Mat3 axis_rotation(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

}  // namespace

JointVector HandModel::lower() const {
  JointVector v;
  for (int i = 0; i < kNumJoints; ++i) v[i] = joint(i).lower;
  return v;
}

JointVector HandModel::upper() const {
  JointVector v;
  for (int i = 0; i < kNumJoints; ++i) v[i] = joint(i).upper;
  return v;
}

double HandModel::reach(FingerId f) const {
  double total = 0.0;
  for (const auto& j : finger(f).joints) total += j.length;
  return total;
}

void validate(const HandModel& model) {
  for (int i = 0; i < kNumJoints; ++i) {
    const JointSpec& j = model.joint(i);
    const std::string where = "joint " + std::to_string(i);
    if (!j.axis.allFinite() || std::abs(j.axis.norm() - 1.0) >= 1e-12) {
      fail(ErrorCode::BadConfig, where + ": axis must have unit norm");
    }
    if (!(j.lower < j.upper)) fail(ErrorCode::BadConfig, where + ": lower limit must be below upper");
    if (!(j.length > 0.0)) fail(ErrorCode::BadConfig, where + ": link length must be positive");
    if (!(j.mass > 0.0)) fail(ErrorCode::BadConfig, where + ": link mass must be positive");
  }
  for (const auto& f : model.fingers) {
    if (!f.base_position.allFinite() || !f.base_rotation.allFinite() || !std::isfinite(f.base_offset)) {
      fail(ErrorCode::BadConfig, "finger base pose must be finite");
    }
    if (!(f.base_rotation.transpose() * f.base_rotation).isIdentity(1e-9)) {
      fail(ErrorCode::BadConfig, "finger base rotation must be orthonormal");
    }
  }
}

HandModel default_hand_model() {
  HandModel model;
  const std::array<double, 4> masses = {0.03, 0.02, 0.02, 0.01};
  for (FingerId id : kAllFingers) {
    FingerSpec& f = model.finger(id);
    const bool thumb = id == FingerId::Thumb;
    // FingerId and HumanFinger differ in order; map through the name.
    const HumanFinger human = thumb ? HumanFinger::Thumb
                                    : static_cast<HumanFinger>(finger_index(id) + 1);
    const double yaw = skeleton::kRayYaw[static_cast<std::size_t>(human)];
    f.base_rotation = axis_rotation(Vec3::UnitZ(), yaw);
    f.base_position = thumb ? skeleton::kThumbBase : skeleton::kBaseDistance * skeleton::ray(human);
    f.base_offset = skeleton::kBaseOffset;
    for (std::size_t j = 0; j < f.joints.size(); ++j) {
      JointSpec& joint = f.joints[j];
      joint.length = skeleton::kLinkLength[j];
      joint.mass = masses[j];
      if (j == 0) {
        // Thumb abduction turns toward the fingers for positive angles.
        joint.axis = thumb ? Vec3(0.0, 0.0, -1.0) : Vec3::UnitZ();
      } else {
        joint.axis = Vec3::UnitY();
      }
      if (thumb) {
        joint.lower = -0.3;
        joint.upper = 1.6;
      } else if (j == 0) {
        joint.lower = -0.6;
        joint.upper = 0.6;
      } else {
        joint.lower = -0.3;
        joint.upper = 1.7;
      }
    }
  }
  return model;
}

Vec3 FingerKinematics::link_center(int j) const {
  const Vec3& next = j + 1 < kJointsPerFinger ? origins[static_cast<std::size_t>(j + 1)] : tip;
  return 0.5 * (origins[static_cast<std::size_t>(j)] + next);
}

FingerKinematics finger_forward(const HandModel& model, FingerId finger, const FingerJoints& q) {
  const FingerSpec& spec = model.finger(finger);
  FingerKinematics out;
  Mat3 rotation = spec.base_rotation;
  Vec3 position = spec.base_position + rotation * Vec3(spec.base_offset, 0.0, 0.0);
  for (int j = 0; j < kJointsPerFinger; ++j) {
    const JointSpec& joint = spec.joints[static_cast<std::size_t>(j)];
    out.origins[static_cast<std::size_t>(j)] = position;
    out.axes[static_cast<std::size_t>(j)] = rotation * joint.axis;
    rotation = rotation * axis_rotation(joint.axis, q[j]);
    position += rotation * Vec3(joint.length, 0.0, 0.0);
  }
  out.tip = position;
  return out;
}

HandKinematics forward_kinematics(const HandModel& model, const JointVector& q) {
  HandKinematics out;
  for (FingerId f : kAllFingers) {
    out.fingers[static_cast<std::size_t>(finger_index(f))] =
        finger_forward(model, f, finger_joints(q, f));
  }
  return out;
}

FingerJacobian jacobian(const HandModel& model, FingerId finger, const FingerJoints& q) {
  const FingerKinematics fk = finger_forward(model, finger, q);
  FingerJacobian jac;
  for (int j = 0; j < kJointsPerFinger; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    jac.col(j) = fk.axes[idx].cross(fk.tip - fk.origins[idx]);
  }
  return jac;
}

FingerJacobian jacobian(const HandModel& model, FingerId finger, const JointVector& q) {
  return jacobian(model, finger, FingerJoints(finger_joints(q, finger)));
}

JointVector clamp_limits(const HandModel& model, const JointVector& q) {
  return q.cwiseMax(model.lower()).cwiseMin(model.upper());
}

FingerJoints clamp_limits(const HandModel& model, FingerId finger, const FingerJoints& q) {
  FingerJoints out = q;
  const FingerSpec& spec = model.finger(finger);
  for (int j = 0; j < kJointsPerFinger; ++j) {
    const JointSpec& joint = spec.joints[static_cast<std::size_t>(j)];
    out[j] = std::min(std::max(q[j], joint.lower), joint.upper);
  }
  return out;
}

IkResult solve_ik(const HandModel& model, FingerId finger, const Vec3& target,
                  const FingerJoints& q0, const IkConfig& cfg) {
  if (!target.allFinite()) fail(ErrorCode::NonFiniteTarget, "IK target is not finite");

  IkResult result;
  result.q = q0;
  Vec3 error = target - finger_forward(model, finger, result.q).tip;
  const double damping = cfg.lambda * cfg.lambda;

  while (error.norm() > cfg.tol_m && result.iterations < cfg.max_iters) {
    const FingerJacobian jac = jacobian(model, finger, result.q);
    const Mat3 normal = jac * jac.transpose() + damping * Mat3::Identity();

    // Solve through the eigendecomposition so a singular system never divides
    // by zero; ill-conditioned systems take a half step.
    Eigen::SelfAdjointEigenSolver<Mat3> eig(normal);
    const Vec3& w = eig.eigenvalues();
    const double w_max = w.maxCoeff();
    Vec3 inv_w;
    for (int i = 0; i < 3; ++i) inv_w[i] = w[i] > w_max / kIllConditioned ? 1.0 / w[i] : 0.0;
    const Vec3 y = eig.eigenvectors() * inv_w.asDiagonal() * eig.eigenvectors().transpose() * error;
    FingerJoints step = jac.transpose() * y;
    const double w_min = w.minCoeff();
    if (!(w_min > 0.0) || w_max / w_min > kIllConditioned) step *= 0.5;

    result.q = clamp_limits(model, finger, result.q + step);
    error = target - finger_forward(model, finger, result.q).tip;
    ++result.iterations;
  }
  result.residual_m = error.norm();
  result.converged = result.residual_m <= cfg.tol_m;
  return result;
}

}  // namespace dexteach
