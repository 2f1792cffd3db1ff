// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/hand_pose.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dexteach/error.hpp"

namespace dexteach {

namespace skeleton {

Vec3 ray(HumanFinger f) {
  const double yaw = kRayYaw[static_cast<std::size_t>(f)];
  return {std::cos(yaw), std::sin(yaw), 0.0};
}

std::array<double, 3> bone_lengths(HumanFinger f) {
  if (f == HumanFinger::Pinky) return kPinkyBone;
  return {kLinkLength[1], kLinkLength[2], kLinkLength[3]};
}

Vec3 canonical_keypoint(HumanFinger f, Joint j) {
  Vec3 mcp;
  if (f == HumanFinger::Thumb) {
    mcp = kThumbBase + (kBaseOffset + kLinkLength[0]) * ray(f);
  } else if (f == HumanFinger::Pinky) {
    mcp = kPinkyMcpDistance * ray(f);
  } else {
    mcp = (kBaseDistance + kBaseOffset + kLinkLength[0]) * ray(f);
  }
  const auto bones = bone_lengths(f);
  double along = 0.0;
  for (int k = 0; k < static_cast<int>(j); ++k) along += bones[static_cast<std::size_t>(k)];
  return mcp + along * ray(f);
}

}  // namespace skeleton

namespace {

constexpr double kMinBone = 1e-6;
constexpr double kMaxCoordinate = 0.5;

const std::array<HumanFinger, 4> kTrackedFingers = {HumanFinger::Thumb, HumanFinger::Index,
                                                    HumanFinger::Middle, HumanFinger::Ring};

Vec3 bone(const HandFrame& frame, int from, int to) {
  Vec3 b = frame.keypoints[static_cast<std::size_t>(to)] -
           frame.keypoints[static_cast<std::size_t>(from)];
  if (b.norm() < kMinBone) {
    fail(ErrorCode::DegenerateHand,
         "bone " + std::to_string(from) + "->" + std::to_string(to) + " is shorter than 1e-6 m");
  }
  return b;
}

// Unsigned angle between two vectors; atan2 keeps full precision near 0 and pi.
double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

struct PalmFrame {
  Mat3 rotation;  // columns: forward, lateral, dorsal normal
  Vec3 normal() const { return rotation.col(2); }
};

PalmFrame palm_frame(const HandFrame& frame) {
  constexpr int kWrist = 0;
  const Vec3 index = bone(frame, kWrist, keypoint_index(HumanFinger::Index, Joint::Mcp));
  const Vec3 middle = bone(frame, kWrist, keypoint_index(HumanFinger::Middle, Joint::Mcp));
  const Vec3 ring = bone(frame, kWrist, keypoint_index(HumanFinger::Ring, Joint::Mcp));
  const Vec3 n_raw = ring.cross(index);
  if (n_raw.norm() < kMinBone * kMinBone) {
    fail(ErrorCode::DegenerateHand, "index and ring knuckles are collinear with the wrist");
  }
  const Vec3 n = n_raw.normalized();
  const Vec3 fwd_raw = middle - n * n.dot(middle);
  if (fwd_raw.norm() < kMinBone) {
    fail(ErrorCode::DegenerateHand, "middle knuckle lies on the palm normal");
  }
  PalmFrame palm;
  palm.rotation.col(0) = fwd_raw.normalized();
  palm.rotation.col(2) = n;
  palm.rotation.col(1) = n.cross(palm.rotation.col(0));
  return palm;
}

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

FingerAngles lerp(const FingerAngles& a, const FingerAngles& b, double s) {
  FingerAngles out;
  out.abduction = a.abduction + s * (b.abduction - a.abduction);
  for (std::size_t k = 0; k < 3; ++k) out.flexion[k] = a.flexion[k] + s * (b.flexion[k] - a.flexion[k]);
  return out;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

HumanPose grasp_close_pose(double t_s, double duration_s, std::mt19937_64& rng) {
  HumanPose open;
  HumanPose closed;
  for (int i = 1; i < kNumHumanFingers; ++i) {
    auto& o = open.fingers[static_cast<std::size_t>(i)];
    auto& c = closed.fingers[static_cast<std::size_t>(i)];
    o.abduction = uniform(rng, -0.12, 0.12);
    for (auto& v : o.flexion) v = uniform(rng, 0.0, 0.15);
    c.abduction = 0.5 * o.abduction;
    c.flexion = {uniform(rng, 0.9, 1.3), uniform(rng, 1.0, 1.4), uniform(rng, 0.5, 0.8)};
  }
  auto& ot = open.fingers[0];
  auto& ct = closed.fingers[0];
  ot.abduction = uniform(rng, -0.05, 0.05);
  for (auto& v : ot.flexion) v = uniform(rng, 0.0, 0.1);
  ct.abduction = uniform(rng, -0.45, -0.3);
  ct.flexion = {uniform(rng, 0.4, 0.6), uniform(rng, 0.4, 0.6), uniform(rng, 0.2, 0.4)};

  // Close over the first 80% of the clip, then hold closed. There is no
  // initial hold: a still stretch in a demo is a fixed point for retrieval.
  const double s = smoothstep(t_s / (0.8 * duration_s));
  HumanPose pose;
  for (std::size_t i = 0; i < pose.fingers.size(); ++i) {
    pose.fingers[i] = lerp(open.fingers[i], closed.fingers[i], s);
  }
  return pose;
}

HumanPose finger_wave_pose(double t_s, std::mt19937_64& rng) {
  const double period = uniform(rng, 1.8, 2.2);
  const double phase0 = uniform(rng, 0.0, 2.0 * M_PI);
  const double omega = 2.0 * M_PI / period;
  HumanPose pose;
  for (int i = 1; i < kNumHumanFingers; ++i) {
    const double phase = omega * t_s + phase0 + (i - 1) * M_PI / 2.0;
    const double curl = 0.5 * (1.0 - std::cos(phase));
    auto& f = pose.fingers[static_cast<std::size_t>(i)];
    f.abduction = 0.15 * std::sin(phase);
    f.flexion = {0.05 + 0.95 * curl, 0.05 + 0.95 * curl, 0.05 + 0.55 * curl};
  }
  const double thumb_phase = omega * t_s + phase0;
  auto& th = pose.fingers[0];
  th.abduction = -0.1 + 0.1 * std::sin(thumb_phase);
  th.flexion = {0.2 + 0.1 * std::cos(thumb_phase), 0.25, 0.15};
  return pose;
}

HumanPose thumb_circle_pose(double t_s, std::mt19937_64& rng) {
  const double period = uniform(rng, 1.8, 2.2);
  const double phase0 = uniform(rng, 0.0, 2.0 * M_PI);
  const double center = uniform(rng, -0.25, -0.15);
  HumanPose pose;
  for (int i = 1; i < kNumHumanFingers; ++i) {
    auto& f = pose.fingers[static_cast<std::size_t>(i)];
    f.abduction = uniform(rng, -0.08, 0.08);
    f.flexion = {0.2, 0.2, 0.1};
  }
  const double phase = 2.0 * M_PI * t_s / period + phase0;
  auto& th = pose.fingers[0];
  th.abduction = center + 0.2 * std::sin(phase);
  th.flexion = {0.45 + 0.25 * std::cos(phase), 0.4 + 0.1 * std::sin(phase), 0.3};
  return pose;
}

}  // namespace

void validate_frame(const HandFrame& frame) {
  for (std::size_t i = 0; i < frame.keypoints.size(); ++i) {
    const Vec3& p = frame.keypoints[i];
    if (!p.allFinite()) fail(ErrorCode::NonFinite, "keypoint " + std::to_string(i) + " is not finite");
    if (p.cwiseAbs().maxCoeff() >= kMaxCoordinate) {
      fail(ErrorCode::NonFinite, "keypoint " + std::to_string(i) + " lies outside the 0.5 m box");
    }
  }
}

HandFrame synthesize_frame(const HumanPose& pose, std::int64_t timestamp_us) {
  HandFrame frame;
  frame.timestamp_us = timestamp_us;
  frame.keypoints[0] = Vec3::Zero();
  const Vec3 n = Vec3::UnitZ();
  for (int fi = 0; fi < kNumHumanFingers; ++fi) {
    const auto f = static_cast<HumanFinger>(fi);
    const FingerAngles& a = pose.finger(f);
    const Mat3 abduct = Eigen::AngleAxisd(a.abduction, n).toRotationMatrix();
    const Vec3 r = skeleton::ray(f);
    const auto bones = skeleton::bone_lengths(f);
    Vec3 p = skeleton::canonical_keypoint(f, Joint::Mcp);
    frame.keypoints[static_cast<std::size_t>(keypoint_index(f, Joint::Mcp))] = p;
    double cumulative = 0.0;
    for (int k = 0; k < 3; ++k) {
      cumulative += a.flexion[static_cast<std::size_t>(k)];
      const Vec3 dir = abduct * (r * std::cos(cumulative) - n * std::sin(cumulative));
      p += bones[static_cast<std::size_t>(k)] * dir;
      frame.keypoints[static_cast<std::size_t>(keypoint_index(f, static_cast<Joint>(k + 1)))] = p;
    }
  }
  return frame;
}

HumanJointAngles extract_joint_angles(const HandFrame& frame) {
  for (std::size_t i = 0; i < frame.keypoints.size(); ++i) {
    if (!frame.keypoints[i].allFinite()) {
      fail(ErrorCode::NonFinite, "keypoint " + std::to_string(i) + " is not finite");
    }
  }
  const PalmFrame palm = palm_frame(frame);
  const Vec3 n = palm.normal();

  HumanJointAngles out;
  for (std::size_t slot = 0; slot < kTrackedFingers.size(); ++slot) {
    const HumanFinger f = kTrackedFingers[slot];
    const Vec3 ray = palm.rotation * skeleton::ray(f);
    const Vec3 lateral = n.cross(ray);

    const int mcp = keypoint_index(f, Joint::Mcp);
    const std::array<Vec3, 4> bones = {bone(frame, 0, mcp), bone(frame, mcp, mcp + 1),
                                       bone(frame, mcp + 1, mcp + 2),
                                       bone(frame, mcp + 2, mcp + 3)};
    FingerAngles& angles = out.fingers[slot];
    for (std::size_t j = 0; j < 3; ++j) {
      const Vec3& in = bones[j];
      const Vec3& leave = bones[j + 1];
      const double magnitude = angle_between(in, leave);
      angles.flexion[j] = in.cross(leave).dot(lateral) < 0.0 ? -magnitude : magnitude;
    }
    const Vec3 proximal = bones[1] - n * n.dot(bones[1]);
    angles.abduction = std::atan2(ray.cross(proximal).dot(n), ray.dot(proximal));
  }
  out.thumb_tip = frame.keypoints[static_cast<std::size_t>(keypoint_index(HumanFinger::Thumb, Joint::Tip))];
  return out;
}

std::string_view gesture_name(Gesture g) {
  switch (g) {
    case Gesture::GraspClose: return "grasp_close";
    case Gesture::FingerWave: return "finger_wave";
    case Gesture::ThumbCircle: return "thumb_circle";
  }
  return "unknown";
}

Gesture parse_gesture(std::string_view name) {
  if (name == "grasp_close") return Gesture::GraspClose;
  if (name == "finger_wave") return Gesture::FingerWave;
  if (name == "thumb_circle") return Gesture::ThumbCircle;
  fail(ErrorCode::BadConfig, "unknown gesture '" + std::string(name) + "'");
}

std::int64_t frame_timestamp_us(std::int64_t k, double rate_hz) {
  const double whole = std::floor(rate_hz);
  if (whole == rate_hz) {
    return (k * 1'000'000) / static_cast<std::int64_t>(whole);
  }
  return static_cast<std::int64_t>(std::floor(static_cast<double>(k) * 1e6 / rate_hz));
}

HumanPose gesture_pose(Gesture kind, double t_s, double duration_s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  switch (kind) {
    case Gesture::GraspClose: return grasp_close_pose(t_s, duration_s, rng);
    case Gesture::FingerWave: return finger_wave_pose(t_s, rng);
    case Gesture::ThumbCircle: return thumb_circle_pose(t_s, rng);
  }
  return {};
}

std::vector<HandFrame> synth_trajectory(Gesture kind, double duration_s, double rate_hz,
                                        std::uint64_t seed) {
  if (!(rate_hz >= 1.0 && rate_hz <= 200.0)) {
    fail(ErrorCode::BadRate, "rate " + std::to_string(rate_hz) + " Hz is outside [1, 200]");
  }
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    fail(ErrorCode::BadRate, "duration must be positive");
  }
  const auto count = static_cast<std::int64_t>(std::floor(duration_s * rate_hz));
  std::vector<HandFrame> frames;
  frames.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    const std::int64_t ts = frame_timestamp_us(k, rate_hz);
    frames.push_back(synthesize_frame(gesture_pose(kind, static_cast<double>(ts) * 1e-6, duration_s, seed), ts));
  }
  return frames;
}

}  // namespace dexteach
