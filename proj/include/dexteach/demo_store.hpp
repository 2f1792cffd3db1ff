// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "dexteach/simhand.hpp"

namespace dexteach {

struct DemoFrame {
  std::int64_t ts_us = 0;
  Observation observation{};
  JointVector state = JointVector::Zero();    // measured q
  JointVector command = JointVector::Zero();  // q_des at capture
};

struct DemoMeta {
  std::string model_hash;
  std::string config_hash;
  double control_hz = 300.0;
  double feedback_hz = 60.0;
  double record_hz = 5.0;
};

struct Demo {
  std::string name;
  std::vector<DemoFrame> frames;
  bool complete = false;
  DemoMeta meta;
};

/// Appends one demonstration to `dir/name/{header.json,frames.ndjson}`.
/// Every frame is flushed as it is written, so an interrupted recording stays
/// loadable; the header is marked complete only by stop().
class DemoWriter {
 public:
  /// Throws DuplicateName if `dir/name` exists, IoError if it cannot be created.
  static DemoWriter start(const std::filesystem::path& dir, const std::string& name,
                          const DemoMeta& meta = {});

  DemoWriter(DemoWriter&&) noexcept;
  DemoWriter& operator=(DemoWriter&&) noexcept;
  DemoWriter(const DemoWriter&) = delete;
  DemoWriter& operator=(const DemoWriter&) = delete;
  ~DemoWriter();

  /// Throws SessionClosed after stop()/abort(), IoError on write failure.
  void append(const DemoFrame& frame);
  /// Finalizes the header (complete = true) and returns the recorded demo.
  Demo stop();
  /// Closes the recording, leaving it marked incomplete.
  Demo abort();

  bool is_open() const { return open_; }
  std::size_t frame_count() const { return demo_.frames.size(); }
  const std::string& name() const { return demo_.name; }

 private:
  DemoWriter() = default;
  void write_header() const;
  Demo close(bool complete);

  std::filesystem::path root_;
  std::ofstream frames_;
  Demo demo_;
  bool open_ = false;
};

/// One NDJSON line (without the newline) for a frame, and its inverse.
std::string encode_frame(const DemoFrame& frame);
DemoFrame decode_frame(const std::string& line);

inline std::uint8_t quantize_pixel(double v) {
  const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(clamped * 255.0 + 0.5);
}

/// Loads `dir/name`. Throws IoError, or MalformedFrame naming the demo and line.
/// A final line that was cut short by an interrupted write is skipped and
/// reported through `warnings`.
Demo load_demo(const std::filesystem::path& demo_dir, std::vector<std::string>* warnings = nullptr);

/// Every demo under `dir`, ordered by name.
std::vector<Demo> load_dataset(const std::filesystem::path& dir,
                               std::vector<std::string>* warnings = nullptr);

}  // namespace dexteach
