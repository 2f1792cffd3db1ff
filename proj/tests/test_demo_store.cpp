// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "dexteach/demo_store.hpp"
#include "support.hpp"

namespace dexteach {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;
using testing::throws_code;
using testing::uniform;

DemoFrame random_frame(std::mt19937_64& rng, std::int64_t ts) {
  DemoFrame f;
  f.ts_us = ts;
  for (double& v : f.observation) v = uniform(rng, 0.0, 1.0);
  const HandModel model = default_hand_model();
  f.state = testing::random_joints(rng, model.lower(), model.upper());
  f.command = testing::random_joints(rng, model.lower(), model.upper());
  return f;
}

Demo record(const fs::path& dir, const std::string& name, int frames, std::mt19937_64& rng) {
  DemoWriter w = DemoWriter::start(dir, name);
  for (int i = 0; i < frames; ++i) w.append(random_frame(rng, 200000LL * i));
  return w.stop();
}

std::size_t line_count(const fs::path& file) {
  std::ifstream in(file);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

nlohmann::json read_json(const fs::path& file) {
  std::ifstream in(file);
  return nlohmann::json::parse(in);
}

TEST(DemoStore, TenFramesOnDisk) {
  TempDir tmp;
  std::mt19937_64 rng(1);
  const Demo demo = record(tmp.path(), "ten", 10, rng);
  EXPECT_TRUE(demo.complete);
  EXPECT_EQ(line_count(tmp / "ten/frames.ndjson"), 10u);
  const auto header = read_json(tmp / "ten/header.json");
  EXPECT_EQ(header["frame_count"], 10);
  EXPECT_EQ(header["complete"], true);
}

TEST(DemoStore, RoundTripOfRandomDemos) {
  TempDir tmp;
  std::mt19937_64 rng(2);
  std::vector<Demo> saved;
  for (int i = 0; i < 100; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "demo_%03d", i);
    saved.push_back(record(tmp.path(), name, 1 + static_cast<int>(rng() % 6), rng));
  }
  const std::vector<Demo> loaded = load_dataset(tmp.path());
  ASSERT_EQ(loaded.size(), saved.size());
  for (std::size_t d = 0; d < saved.size(); ++d) {
    ASSERT_EQ(loaded[d].name, saved[d].name);
    ASSERT_TRUE(loaded[d].complete);
    ASSERT_EQ(loaded[d].frames.size(), saved[d].frames.size());
    for (std::size_t k = 0; k < saved[d].frames.size(); ++k) {
      const DemoFrame& a = saved[d].frames[k];
      const DemoFrame& b = loaded[d].frames[k];
      ASSERT_EQ(a.ts_us, b.ts_us);
      ASSERT_EQ(std::memcmp(a.state.data(), b.state.data(), sizeof(double) * kNumJoints), 0);
      ASSERT_EQ(std::memcmp(a.command.data(), b.command.data(), sizeof(double) * kNumJoints), 0);
      for (int p = 0; p < kImagePixels; ++p) ASSERT_LE(std::abs(a.observation[p] - b.observation[p]), 1.0 / 255.0);
    }
  }
}

TEST(DemoStore, CrashBeforeStopKeepsWrittenFrames) {
  TempDir tmp;
  std::mt19937_64 rng(3);
  {
    DemoWriter w = DemoWriter::start(tmp.path(), "live");
    for (int i = 0; i < 5; ++i) w.append(random_frame(rng, 200000LL * i));
    // Snapshot the directory as a crash would leave it, with a torn last write.
    fs::copy(tmp / "live", tmp / "crashed", fs::copy_options::recursive);
    std::ofstream out(tmp / "crashed/frames.ndjson", std::ios::app);
    out << encode_frame(random_frame(rng, 1000000)).substr(0, 300);
  }
  std::vector<std::string> warnings;
  const Demo demo = load_demo(tmp / "crashed", &warnings);
  EXPECT_FALSE(demo.complete);
  EXPECT_EQ(demo.frames.size(), 5u);
  EXPECT_EQ(warnings.size(), 1u);
  // The abandoned writer closes its demo as incomplete.
  const Demo abandoned = load_demo(tmp / "live");
  EXPECT_FALSE(abandoned.complete);
  EXPECT_EQ(abandoned.frames.size(), 5u);
}

TEST(DemoStore, AbortMarksIncomplete) {
  TempDir tmp;
  std::mt19937_64 rng(4);
  DemoWriter w = DemoWriter::start(tmp.path(), "a");
  w.append(random_frame(rng, 0));
  const Demo d = w.abort();
  EXPECT_FALSE(d.complete);
  EXPECT_FALSE(load_demo(tmp / "a").complete);
}

TEST(DemoStore, DuplicateNameAndClosedWriter) {
  TempDir tmp;
  std::mt19937_64 rng(5);
  record(tmp.path(), "x", 2, rng);
  EXPECT_TRUE(throws_code(ErrorCode::DuplicateName, [&] { DemoWriter::start(tmp.path(), "x"); }));
  DemoWriter w = DemoWriter::start(tmp.path(), "y");
  w.append(random_frame(rng, 0));
  w.stop();
  EXPECT_TRUE(throws_code(ErrorCode::SessionClosed, [&] { w.append(random_frame(rng, 1)); }));
  EXPECT_TRUE(throws_code(ErrorCode::SessionClosed, [&] { w.stop(); }));
}

TEST(DemoStore, UnwritableDirectory) {
  TempDir tmp;
  std::ofstream(tmp / "file") << "x";
  EXPECT_TRUE(throws_code(ErrorCode::IoError, [&] { DemoWriter::start(tmp / "file", "d"); }));
  EXPECT_TRUE(throws_code(ErrorCode::IoError, [&] { DemoWriter::start(tmp.path(), "../escape"); }));
}

TEST(DemoStore, EmptyAndMissingDirectories) {
  TempDir tmp;
  EXPECT_TRUE(load_dataset(tmp.path()).empty());
  EXPECT_TRUE(throws_code(ErrorCode::IoError, [&] { load_dataset(tmp / "missing"); }));
}

TEST(DemoStore, ThirtyDemoDataset) {
  TempDir tmp;
  std::mt19937_64 rng(6);
  // Written in reverse so creation order differs from name order.
  for (int i = 29; i >= 0; --i) record(tmp.path(), "demo_" + std::to_string(100 + i), 1 + i % 4, rng);
  const auto demos = load_dataset(tmp.path());
  ASSERT_EQ(demos.size(), 30u);
  std::size_t header_total = 0;
  std::size_t loaded_total = 0;
  for (const auto& d : demos) {
    header_total += read_json(tmp / d.name / "header.json")["frame_count"].get<std::size_t>();
    loaded_total += d.frames.size();
  }
  EXPECT_EQ(loaded_total, header_total);
  for (std::size_t i = 1; i < demos.size(); ++i) EXPECT_LT(demos[i - 1].name, demos[i].name);
}

// Rewrites line `line` (1-based) of a recorded demo through `edit`.
void corrupt(const fs::path& demo, int line, const std::function<void(nlohmann::json&)>& edit) {
  std::ifstream in(demo / "frames.ndjson");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  in.close();
  auto j = nlohmann::json::parse(lines[static_cast<std::size_t>(line - 1)]);
  edit(j);
  lines[static_cast<std::size_t>(line - 1)] = j.dump();
  std::ofstream out(demo / "frames.ndjson", std::ios::trunc);
  for (const auto& l : lines) out << l << '\n';
}

::testing::AssertionResult malformed_at(const fs::path& demo, int line) {
  try {
    load_demo(demo);
  } catch (const Error& e) {
    const std::string what = e.what();
    if (e.code() == ErrorCode::MalformedFrame && what.find("line " + std::to_string(line)) != std::string::npos &&
        what.find(demo.filename().string()) != std::string::npos) {
      return ::testing::AssertionSuccess();
    }
    return ::testing::AssertionFailure() << what;
  }
  return ::testing::AssertionFailure() << "loaded without error";
}

class MalformedFrameTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(7);
    record(tmp.path(), "bad", 4, rng);
  }
  fs::path demo() const { return tmp / "bad"; }
  TempDir tmp;
};

TEST_F(MalformedFrameTest, FifteenStateValues) {
  corrupt(demo(), 2, [](auto& j) { j["state"].erase(j["state"].size() - 1); });
  EXPECT_TRUE(malformed_at(demo(), 2));
}

TEST_F(MalformedFrameTest, NonNumericCommand) {
  corrupt(demo(), 3, [](auto& j) { j["command"][4] = "x"; });
  EXPECT_TRUE(malformed_at(demo(), 3));
}

TEST_F(MalformedFrameTest, ShortObservation) {
  corrupt(demo(), 1, [](auto& j) { j["observation"] = "AAAA"; });
  EXPECT_TRUE(malformed_at(demo(), 1));
}

TEST_F(MalformedFrameTest, MissingTimestamp) {
  corrupt(demo(), 2, [](auto& j) { j.erase("ts_us"); });
  EXPECT_TRUE(malformed_at(demo(), 2));
}

TEST_F(MalformedFrameTest, TimestampsMustIncrease) {
  corrupt(demo(), 3, [](auto& j) { j["ts_us"] = 0; });
  EXPECT_TRUE(malformed_at(demo(), 3));
}

TEST_F(MalformedFrameTest, BrokenJsonMidFile) {
  std::ifstream in(demo() / "frames.ndjson");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  in.close();
  lines[1] = lines[1].substr(0, 40);
  std::ofstream out(demo() / "frames.ndjson", std::ios::trunc);
  for (const auto& l : lines) out << l << '\n';
  out.close();
  EXPECT_TRUE(malformed_at(demo(), 2));
}

TEST_F(MalformedFrameTest, HeaderCountMismatch) {
  auto header = read_json(demo() / "header.json");
  header["frame_count"] = 7;
  std::ofstream(demo() / "header.json", std::ios::trunc) << header.dump();
  EXPECT_TRUE(throws_code(ErrorCode::MalformedFrame, [&] { load_demo(demo()); }));
}

TEST(DemoStore, QuantizePixel) {
  EXPECT_EQ(quantize_pixel(0.0), 0);
  EXPECT_EQ(quantize_pixel(1.0), 255);
  EXPECT_EQ(quantize_pixel(-3.0), 0);
  EXPECT_EQ(quantize_pixel(7.0), 255);
  EXPECT_EQ(quantize_pixel(0.5), 128);
}

}  // namespace
}  // namespace dexteach
