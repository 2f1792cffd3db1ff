// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/demo_store.hpp"

#include <algorithm>
#include <boost/beast/core/detail/base64.hpp>
#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

#include "dexteach/error.hpp"

namespace dexteach {

namespace fs = std::filesystem;
using nlohmann::json;
namespace base64 = boost::beast::detail::base64;

namespace {

constexpr int kFormatVersion = 1;
constexpr const char* kHeaderFile = "header.json";
constexpr const char* kFramesFile = "frames.ndjson";

json header_json(const Demo& demo) {
  return json{{"format", kFormatVersion},
              {"name", demo.name},
              {"complete", demo.complete},
              {"frame_count", demo.frames.size()},
              {"meta",
               {{"model_hash", demo.meta.model_hash},
                {"config_hash", demo.meta.config_hash},
                {"rates",
                 {{"control_hz", demo.meta.control_hz},
                  {"feedback_hz", demo.meta.feedback_hz},
                  {"record_hz", demo.meta.record_hz}}}}}};
}

std::vector<double> to_list(const JointVector& q) { return {q.data(), q.data() + q.size()}; }

JointVector joint_vector_from(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) {
    throw std::invalid_argument(std::string("missing array '") + field + "'");
  }
  const json& arr = j[field];
  if (arr.size() != kNumJoints) {
    throw std::invalid_argument(std::string("'") + field + "' has " + std::to_string(arr.size()) +
                                " values, expected 16");
  }
  JointVector q;
  for (int i = 0; i < kNumJoints; ++i) {
    const json& v = arr[static_cast<std::size_t>(i)];
    if (!v.is_number()) throw std::invalid_argument(std::string("'") + field + "' holds a non-number");
    q[i] = v.get<double>();
  }
  if (!q.allFinite()) throw std::invalid_argument(std::string("'") + field + "' is not finite");
  return q;
}

void write_file_atomically(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << contents;
    out.flush();
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

}  // namespace

std::string encode_frame(const DemoFrame& frame) {
  std::array<std::uint8_t, kImagePixels> bytes{};
  std::transform(frame.observation.begin(), frame.observation.end(), bytes.begin(), quantize_pixel);
  std::string encoded(base64::encoded_size(bytes.size()), '\0');
  encoded.resize(base64::encode(encoded.data(), bytes.data(), bytes.size()));
  const json line{{"ts_us", frame.ts_us},
                  {"state", to_list(frame.state)},
                  {"command", to_list(frame.command)},
                  {"observation", encoded}};
  return line.dump();
}

DemoFrame decode_frame(const std::string& line) {
  const json j = json::parse(line);  // throws json::parse_error
  if (!j.is_object()) throw std::invalid_argument("frame is not a JSON object");
  DemoFrame frame;
  if (!j.contains("ts_us") || !j["ts_us"].is_number_integer()) {
    throw std::invalid_argument("missing integer 'ts_us'");
  }
  frame.ts_us = j["ts_us"].get<std::int64_t>();
  frame.state = joint_vector_from(j, "state");
  frame.command = joint_vector_from(j, "command");
  if (!j.contains("observation") || !j["observation"].is_string()) {
    throw std::invalid_argument("missing string 'observation'");
  }
  const auto& text = j["observation"].get_ref<const std::string&>();
  std::vector<std::uint8_t> bytes(base64::decoded_size(text.size()));
  const auto [written, read] = base64::decode(bytes.data(), text.data(), text.size());
  // The decoder stops at the first '='; only padding may follow it.
  const bool padding_only = text.find_first_not_of('=', read) == std::string::npos;
  if (!padding_only || text.size() - read > 2 || written != kImagePixels) {
    throw std::invalid_argument("observation must decode to 1024 bytes");
  }
  for (std::size_t i = 0; i < kImagePixels; ++i) frame.observation[i] = bytes[i] / 255.0;
  return frame;
}

DemoWriter DemoWriter::start(const fs::path& dir, const std::string& name, const DemoMeta& meta) {
  if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..") {
    fail(ErrorCode::IoError, "invalid demo name '" + name + "'");
  }
  DemoWriter writer;
  writer.root_ = dir / name;
  std::error_code ec;
  if (fs::exists(writer.root_, ec)) {
    fail(ErrorCode::DuplicateName, "demo '" + name + "' already exists in " + dir.string());
  }
  fs::create_directories(writer.root_, ec);
  if (ec) fail(ErrorCode::IoError, "cannot create " + writer.root_.string() + ": " + ec.message());
  writer.demo_.name = name;
  writer.demo_.meta = meta;
  writer.write_header();
  writer.frames_.open(writer.root_ / kFramesFile, std::ios::out | std::ios::trunc);
  if (!writer.frames_) fail(ErrorCode::IoError, "cannot open frames file in " + writer.root_.string());
  writer.open_ = true;
  return writer;
}

DemoWriter::DemoWriter(DemoWriter&& other) noexcept
    : root_(std::move(other.root_)),
      frames_(std::move(other.frames_)),
      demo_(std::move(other.demo_)),
      open_(std::exchange(other.open_, false)) {}

DemoWriter& DemoWriter::operator=(DemoWriter&& other) noexcept {
  if (this != &other) {
    if (open_) {
      try {
        close(false);
      } catch (...) {
      }
    }
    root_ = std::move(other.root_);
    frames_ = std::move(other.frames_);
    demo_ = std::move(other.demo_);
    open_ = std::exchange(other.open_, false);
  }
  return *this;
}

DemoWriter::~DemoWriter() {
  if (!open_) return;
  try {
    close(false);
  } catch (...) {
    // Nothing sensible to do from a destructor; frames already on disk stay loadable.
  }
}

void DemoWriter::write_header() const { write_file_atomically(root_ / kHeaderFile, header_json(demo_).dump(2) + "\n"); }

void DemoWriter::append(const DemoFrame& frame) {
  if (!open_) fail(ErrorCode::SessionClosed, "demo '" + demo_.name + "' is no longer recording");
  frames_ << encode_frame(frame) << '\n';
  frames_.flush();
  if (!frames_) fail(ErrorCode::IoError, "write failed for demo '" + demo_.name + "'");
  demo_.frames.push_back(frame);
}

Demo DemoWriter::close(bool complete) {
  open_ = false;
  frames_.close();
  demo_.complete = complete;
  write_header();
  return demo_;
}

Demo DemoWriter::stop() {
  if (!open_) fail(ErrorCode::SessionClosed, "demo '" + demo_.name + "' was already stopped");
  return close(true);
}

Demo DemoWriter::abort() {
  if (!open_) fail(ErrorCode::SessionClosed, "demo '" + demo_.name + "' was already stopped");
  return close(false);
}

Demo load_demo(const fs::path& demo_dir, std::vector<std::string>* warnings) {
  Demo demo;
  demo.name = demo_dir.filename().string();

  std::ifstream header_in(demo_dir / kHeaderFile);
  if (!header_in) fail(ErrorCode::IoError, "cannot read header of " + demo_dir.string());
  json header;
  try {
    header = json::parse(header_in);
    demo.complete = header.at("complete").get<bool>();
    const json& meta = header.at("meta");
    demo.meta.model_hash = meta.value("model_hash", "");
    demo.meta.config_hash = meta.value("config_hash", "");
    const json& rates = meta.at("rates");
    demo.meta.control_hz = rates.at("control_hz").get<double>();
    demo.meta.feedback_hz = rates.at("feedback_hz").get<double>();
    demo.meta.record_hz = rates.at("record_hz").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::IoError, "bad header in " + demo_dir.string() + ": " + e.what());
  }

  std::ifstream frames_in(demo_dir / kFramesFile, std::ios::binary);
  if (!frames_in) fail(ErrorCode::IoError, "cannot read frames of " + demo_dir.string());
  std::stringstream buffer;
  buffer << frames_in.rdbuf();
  const std::string text = buffer.str();

  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const bool terminated = end != std::string::npos;
    const std::string line = text.substr(pos, terminated ? end - pos : std::string::npos);
    pos = terminated ? end + 1 : text.size();
    ++line_no;
    if (line.empty()) continue;

    DemoFrame frame;
    try {
      frame = decode_frame(line);
    } catch (const json::parse_error& e) {
      // A torn final write is expected after a crash; anything else is corruption.
      if (pos >= text.size()) {
        if (warnings != nullptr) {
          warnings->push_back(demo.name + ": skipped truncated line " + std::to_string(line_no));
        }
        break;
      }
      fail(ErrorCode::MalformedFrame, demo.name + " line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      fail(ErrorCode::MalformedFrame, demo.name + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!demo.frames.empty() && frame.ts_us <= demo.frames.back().ts_us) {
      fail(ErrorCode::MalformedFrame,
           demo.name + " line " + std::to_string(line_no) + ": timestamps must increase");
    }
    demo.frames.push_back(std::move(frame));
  }

  if (demo.complete) {
    const auto count = header.value("frame_count", std::size_t{0});
    if (count != demo.frames.size()) {
      fail(ErrorCode::MalformedFrame, demo.name + ": header counts " + std::to_string(count) +
                                          " frames but " + std::to_string(demo.frames.size()) +
                                          " were read");
    }
    if (demo.frames.empty()) fail(ErrorCode::MalformedFrame, demo.name + ": complete demo has no frames");
  }
  return demo;
}

std::vector<Demo> load_dataset(const fs::path& dir, std::vector<std::string>* warnings) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) fail(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<fs::path> entries;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_directory() && fs::exists(entry.path() / kHeaderFile)) entries.push_back(entry.path());
  }
  if (ec) fail(ErrorCode::IoError, "cannot list " + dir.string() + ": " + ec.message());
  std::sort(entries.begin(), entries.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  std::vector<Demo> demos;
  demos.reserve(entries.size());
  for (const auto& path : entries) demos.push_back(load_demo(path, warnings));
  return demos;
}

}  // namespace dexteach
