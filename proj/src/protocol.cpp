// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/protocol.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "dexteach/error.hpp"

namespace dexteach {

using nlohmann::json;

namespace {

template <std::size_t N>
json number_array(const std::array<double, N>& values) {
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::MalformedMessage, "cannot encode a non-finite number");
  }
  return json(values);
}

[[noreturn]] void malformed(const std::string& what) { fail(ErrorCode::MalformedMessage, what); }

const json& field(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) malformed(std::string("missing field '") + name + "'");
  return *it;
}

std::int64_t int_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (v.is_number_integer()) {
    if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      malformed(std::string("'") + name + "' is out of range");
    }
    return v.get<std::int64_t>();
  }
  malformed(std::string("'") + name + "' must be an integer");
}

std::string string_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) malformed(std::string("'") + name + "' must be a string");
  return v.get<std::string>();
}

bool bool_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_boolean()) malformed(std::string("'") + name + "' must be a boolean");
  return v.get<bool>();
}

template <std::size_t N>
std::array<double, N> array_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_array()) malformed(std::string("'") + name + "' must be an array");
  if (v.size() != N) {
    malformed(std::string("'") + name + "' has " + std::to_string(v.size()) + " numbers, expected " +
              std::to_string(N));
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (!v[i].is_number()) malformed(std::string("'") + name + "' holds a non-number");
    out[i] = v[i].get<double>();
    if (!std::isfinite(out[i])) malformed(std::string("'") + name + "' holds a non-finite number");
  }
  return out;
}

struct Encoder {
  json operator()(const KeypointFrame& m) const {
    return {{"type", "keypoints"}, {"ts_us", m.ts_us}, {"points", number_array(m.points)}};
  }
  json operator()(const Feedback& m) const {
    return {{"type", "feedback"},
            {"ts_us", m.ts_us},
            {"echo_ts_us", m.echo_ts_us},
            {"q", number_array(m.q)},
            {"fingertips", number_array(m.fingertips)}};
  }
  json operator()(const RecordCmd& m) const {
    return {{"type", "record"},
            {"action", m.action == RecordCmd::Action::Start ? "start" : "stop"},
            {"demo_name", m.demo_name}};
  }
  json operator()(const Ack& m) const { return {{"type", "ack"}, {"of", m.of}, {"ok", m.ok}, {"msg", m.msg}}; }
  json operator()(const Ping& m) const { return {{"type", "ping"}, {"ts_us", m.ts_us}}; }
  json operator()(const Pong& m) const { return {{"type", "pong"}, {"echo_ts_us", m.echo_ts_us}}; }
};

}  // namespace

std::string_view message_type(const WireMessage& msg) {
  static constexpr std::string_view kNames[] = {"keypoints", "feedback", "record", "ack", "ping", "pong"};
  return kNames[msg.index()];
}

std::string encode(const WireMessage& msg) {
  // Invalid UTF-8 in free-text fields is replaced rather than aborting the send.
  return std::visit(Encoder{}, msg).dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
}

WireMessage decode(std::string_view line) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.find('\n') != std::string_view::npos) malformed("message spans more than one line");

  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    malformed(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) malformed("message must be a JSON object");
  const std::string type = string_field(j, "type");

  if (type == "keypoints") return KeypointFrame{int_field(j, "ts_us"), array_field<63>(j, "points")};
  if (type == "feedback") {
    return Feedback{int_field(j, "ts_us"), int_field(j, "echo_ts_us"), array_field<16>(j, "q"),
                    array_field<12>(j, "fingertips")};
  }
  if (type == "record") {
    const std::string action = string_field(j, "action");
    RecordCmd cmd;
    if (action == "start") {
      cmd.action = RecordCmd::Action::Start;
      cmd.demo_name = string_field(j, "demo_name");
    } else if (action == "stop") {
      cmd.action = RecordCmd::Action::Stop;
      if (j.contains("demo_name")) cmd.demo_name = string_field(j, "demo_name");
    } else {
      malformed("record action must be 'start' or 'stop'");
    }
    return cmd;
  }
  if (type == "ack") {
    Ack ack{string_field(j, "of"), bool_field(j, "ok"), ""};
    if (j.contains("msg")) ack.msg = string_field(j, "msg");
    return ack;
  }
  if (type == "ping") return Ping{int_field(j, "ts_us")};
  if (type == "pong") return Pong{int_field(j, "echo_ts_us")};
  fail(ErrorCode::UnknownType, "unknown message type '" + type + "'");
}

Ack rejection(std::string_view line, const std::exception& error) {
  Ack ack{"", false, error.what()};
  const json j = json::parse(line, nullptr, false);
  if (j.is_object() && j.contains("type") && j["type"].is_string()) ack.of = j["type"].get<std::string>();
  return ack;
}

}  // namespace dexteach
