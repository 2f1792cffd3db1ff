// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

#include "dexteach/error.hpp"
#include "dexteach/types.hpp"

namespace dexteach::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "dexteach") {
    std::random_device rd;
    const auto base = std::filesystem::temp_directory_path();
    do {
      path_ = base / (tag + "-" + std::to_string(rd()));
    } while (std::filesystem::exists(path_));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline JointVector random_joints(std::mt19937_64& rng, const JointVector& lo, const JointVector& hi) {
  JointVector q;
  for (int i = 0; i < kNumJoints; ++i) q[i] = uniform(rng, lo[i], hi[i]);
  return q;
}

/// Returns the code of the dexteach::Error thrown by `fn`, failing the test
/// if nothing (or something else) is thrown.
template <typename Fn>
::testing::AssertionResult throws_code(ErrorCode expected, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == expected) return ::testing::AssertionSuccess();
    return ::testing::AssertionFailure() << "threw " << e.what() << ", expected "
                                         << to_string(expected);
  } catch (const std::exception& e) {
    return ::testing::AssertionFailure() << "threw foreign exception: " << e.what();
  }
  return ::testing::AssertionFailure() << "nothing thrown, expected " << to_string(expected);
}

}  // namespace dexteach::testing
