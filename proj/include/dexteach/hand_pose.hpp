// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "dexteach/types.hpp"

namespace dexteach {

inline constexpr int kNumKeypoints = 21;
inline constexpr int kNumHumanFingers = 5;

/// Human fingers in keypoint order. Keypoint 0 is the wrist; finger f owns
/// keypoints 1 + 4f .. 4 + 4f (MCP, PIP, DIP, TIP).
enum class HumanFinger : int { Thumb = 0, Index = 1, Middle = 2, Ring = 3, Pinky = 4 };

enum class Joint : int { Mcp = 0, Pip = 1, Dip = 2, Tip = 3 };

constexpr int keypoint_index(HumanFinger f, Joint j) {
  return 1 + 4 * static_cast<int>(f) + static_cast<int>(j);
}

struct HandFrame {
  std::int64_t timestamp_us = 0;
  std::array<Vec3, kNumKeypoints> keypoints{};
};

struct FingerAngles {
  double abduction = 0.0;
  std::array<double, 3> flexion{};  // MCP, PIP, DIP
};

/// Angles for the four fingers the robot has; the pinky is never represented.
struct HumanJointAngles {
  std::array<FingerAngles, 4> fingers{};  // thumb, index, middle, ring
  Vec3 thumb_tip = Vec3::Zero();

  FingerAngles& finger(HumanFinger f) { return fingers.at(static_cast<std::size_t>(f)); }
  const FingerAngles& finger(HumanFinger f) const {
    return fingers.at(static_cast<std::size_t>(f));
  }
};

/// Canonical flat right hand in the wrist frame: x toward the fingers, y toward
/// the thumb, z out of the back of the hand (the palm faces -z). The robot's
/// default kinematic model is laid out on the same rays so that a flat human
/// hand maps onto the robot's zero pose.
namespace skeleton {

/// Yaw of each finger's ray in the palm plane, radians.
inline constexpr std::array<double, kNumHumanFingers> kRayYaw = {1.5707963267948966, 0.25, 0.0,
                                                                 -0.25, -0.5};
/// Distance from the wrist to the robot finger base along the ray.
inline constexpr double kBaseDistance = 0.03;
/// Offset of the abduction joint from the finger base.
inline constexpr double kBaseOffset = 0.01;
/// Robot link lengths, proximal to tip. Link 0 spans abduction joint to MCP.
inline constexpr std::array<double, 4> kLinkLength = {0.054, 0.038, 0.044, 0.027};
inline constexpr std::array<double, 3> kPinkyBone = {0.030, 0.030, 0.022};
inline constexpr double kPinkyMcpDistance = 0.085;
/// The thumb base sits below the palm, off the wrist-centred fan.
inline const Vec3 kThumbBase{0.03, 0.02, -0.015};

/// Reference direction (unit, palm plane) of a finger's proximal bone in the flat pose.
Vec3 ray(HumanFinger f);
/// Keypoint position of the flat canonical hand.
Vec3 canonical_keypoint(HumanFinger f, Joint j);
/// Bone lengths MCP->PIP, PIP->DIP, DIP->TIP.
std::array<double, 3> bone_lengths(HumanFinger f);

}  // namespace skeleton

/// Articulation of a synthetic human hand: abduction about the palm normal at
/// the MCP keypoint, then three cumulative flexions toward the palm.
struct HumanPose {
  std::array<FingerAngles, kNumHumanFingers> fingers{};

  FingerAngles& finger(HumanFinger f) { return fingers.at(static_cast<std::size_t>(f)); }
  const FingerAngles& finger(HumanFinger f) const {
    return fingers.at(static_cast<std::size_t>(f));
  }
};

/// Keypoints of the canonical skeleton articulated by `pose`.
HandFrame synthesize_frame(const HumanPose& pose, std::int64_t timestamp_us);

/// Throws NonFinite / DegenerateHand. Flexion is the angle between the bone
/// entering and the bone leaving a keypoint, positive when curling toward the
/// palm; abduction is the signed palm-plane angle from the finger's reference
/// ray to its proximal bone. The palm frame is rebuilt from the wrist and the
/// index/middle/ring MCP keypoints, so the result does not depend on how the
/// hand is oriented and never reads pinky keypoints.
HumanJointAngles extract_joint_angles(const HandFrame& frame);

/// Throws NonFinite if the frame violates the coordinate bounds.
void validate_frame(const HandFrame& frame);

enum class Gesture { GraspClose, FingerWave, ThumbCircle };

std::string_view gesture_name(Gesture g);
Gesture parse_gesture(std::string_view name);

/// Timestamp of the k-th frame of a stream at `rate_hz`, starting at zero.
std::int64_t frame_timestamp_us(std::int64_t k, double rate_hz);

/// The pose a gesture prescribes at time `t_s` of a clip lasting `duration_s`.
HumanPose gesture_pose(Gesture kind, double t_s, double duration_s, std::uint64_t seed);

/// floor(duration_s * rate_hz) frames; deterministic for a fixed (kind, seed).
/// Throws BadRate unless rate_hz is in [1, 200] and duration_s > 0.
std::vector<HandFrame> synth_trajectory(Gesture kind, double duration_s, double rate_hz,
                                        std::uint64_t seed);

}  // namespace dexteach
