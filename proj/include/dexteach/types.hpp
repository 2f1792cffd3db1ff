// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <array>
#include <cstdint>
#include <string_view>

namespace dexteach {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr int kNumFingers = 4;
inline constexpr int kJointsPerFinger = 4;
inline constexpr int kNumJoints = kNumFingers * kJointsPerFinger;

/// Joint angles of the robot hand, ordered index 0-3, middle 4-7, ring 8-11,
/// thumb 12-15. Within a finger: abduction, then proximal to distal flexion.
using JointVector = Eigen::Matrix<double, kNumJoints, 1>;
using FingerJoints = Eigen::Matrix<double, kJointsPerFinger, 1>;

/// Robot fingers, in joint-vector order.
enum class FingerId : int { Index = 0, Middle = 1, Ring = 2, Thumb = 3 };

inline constexpr std::array<FingerId, kNumFingers> kAllFingers = {
    FingerId::Index, FingerId::Middle, FingerId::Ring, FingerId::Thumb};

constexpr int finger_index(FingerId f) { return static_cast<int>(f); }
constexpr int first_joint(FingerId f) { return finger_index(f) * kJointsPerFinger; }

std::string_view finger_name(FingerId f);

inline FingerJoints finger_joints(const JointVector& q, FingerId f) {
  return q.segment<kJointsPerFinger>(first_joint(f));
}

inline void set_finger_joints(JointVector& q, FingerId f, const FingerJoints& v) {
  q.segment<kJointsPerFinger>(first_joint(f)) = v;
}

bool all_finite(const JointVector& q);

}  // namespace dexteach
