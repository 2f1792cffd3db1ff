// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/config.hpp"

#include <Eigen/Geometry>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "dexteach/error.hpp"

namespace dexteach {

namespace pt = boost::property_tree;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const Vec3& v) { return fmt(v.x()) + " " + fmt(v.y()) + " " + fmt(v.z()); }

std::vector<double> parse_numbers(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size() || !std::isfinite(v)) {
      fail(ErrorCode::BadConfig, key + ": '" + token + "' is not a finite number");
    }
    out.push_back(v);
  }
  return out;
}

double parse_scalar(const std::string& key, const std::string& text) {
  const auto v = parse_numbers(key, text);
  if (v.size() != 1) fail(ErrorCode::BadConfig, key + ": expected one number");
  return v[0];
}

Vec3 parse_vec3(const std::string& key, const std::string& text) {
  const auto v = parse_numbers(key, text);
  if (v.size() != 3) fail(ErrorCode::BadConfig, key + ": expected three numbers");
  return {v[0], v[1], v[2]};
}

std::string section_of(FingerId f) { return "finger_" + std::string(finger_name(f)); }

/// Flattened view of the config as "section.key" -> text, in file order.
using Entries = std::vector<std::pair<std::string, std::string>>;

Entries model_entries(const HandModel& model) {
  Entries e;
  for (FingerId f : kAllFingers) {
    const FingerSpec& spec = model.finger(f);
    const std::string s = section_of(f) + ".";
    e.emplace_back(s + "base_position", fmt(spec.base_position));
    std::string rot;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) rot += (rot.empty() ? "" : " ") + fmt(spec.base_rotation(r, c));
    }
    e.emplace_back(s + "base_rotation", rot);
    e.emplace_back(s + "base_offset", fmt(spec.base_offset));
    for (std::size_t j = 0; j < spec.joints.size(); ++j) {
      const JointSpec& joint = spec.joints[j];
      const std::string p = s + "joint" + std::to_string(j) + "_";
      e.emplace_back(p + "axis", fmt(joint.axis));
      e.emplace_back(p + "length", fmt(joint.length));
      e.emplace_back(p + "mass", fmt(joint.mass));
      e.emplace_back(p + "lower", fmt(joint.lower));
      e.emplace_back(p + "upper", fmt(joint.upper));
    }
  }
  return e;
}

Entries all_entries(const AppConfig& cfg) {
  Entries e = model_entries(cfg.model);
  const RetargetConfig& r = cfg.retarget;
  e.emplace_back("retarget.thumb_scale", fmt(r.thumb_scale));
  e.emplace_back("retarget.thumb_offset", fmt(r.thumb_offset));
  e.emplace_back("retarget.angle_gain", fmt(r.angle_gain));
  e.emplace_back("retarget.ik_lambda", fmt(r.ik.lambda));
  e.emplace_back("retarget.ik_max_iters", std::to_string(r.ik.max_iters));
  e.emplace_back("retarget.ik_tol_m", fmt(r.ik.tol_m));
  const DynParams& d = cfg.dynamics;
  e.emplace_back("dynamics.inertia", fmt(d.inertia));
  e.emplace_back("dynamics.damping", fmt(d.damping));
  e.emplace_back("dynamics.gravity", fmt(d.gravity));
  e.emplace_back("dynamics.kp", fmt(d.kp));
  e.emplace_back("dynamics.kd", fmt(d.kd));
  e.emplace_back("dynamics.dt", fmt(d.dt));
  const RenderConfig& v = cfg.render;
  e.emplace_back("render.center_x", fmt(v.center_x));
  e.emplace_back("render.center_y", fmt(v.center_y));
  e.emplace_back("render.pixel_pitch", fmt(v.pixel_pitch));
  e.emplace_back("render.sigma_joint", fmt(v.sigma_joint));
  e.emplace_back("render.sigma_tip", fmt(v.sigma_tip));
  return e;
}

std::string render_ini(const Entries& entries) {
  std::string out;
  std::string current;
  for (const auto& [full, value] : entries) {
    const auto dot = full.find('.');
    const std::string section = full.substr(0, dot);
    if (section != current) {
      if (!out.empty()) out += "\n";
      out += "[" + section + "]\n";
      current = section;
    }
    out += full.substr(dot + 1) + " = " + value + "\n";
  }
  return out;
}

using Setter = std::function<void(AppConfig&, const std::string& key, const std::string& value)>;

std::map<std::string, Setter> make_setters() {
  std::map<std::string, Setter> s;
  for (FingerId f : kAllFingers) {
    const std::string sec = section_of(f) + ".";
    s[sec + "base_position"] = [f](AppConfig& c, const std::string& k, const std::string& v) {
      c.model.finger(f).base_position = parse_vec3(k, v);
    };
    s[sec + "base_rotation"] = [f](AppConfig& c, const std::string& k, const std::string& v) {
      const auto n = parse_numbers(k, v);
      if (n.size() != 9) fail(ErrorCode::BadConfig, k + ": expected nine numbers (row-major)");
      Mat3 m;
      for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = n[static_cast<std::size_t>(i)];
      c.model.finger(f).base_rotation = m;
    };
    s[sec + "base_rpy"] = [f](AppConfig& c, const std::string& k, const std::string& v) {
      c.model.finger(f).base_rotation = rotation_from_rpy(parse_vec3(k, v));
    };
    s[sec + "base_offset"] = [f](AppConfig& c, const std::string& k, const std::string& v) {
      c.model.finger(f).base_offset = parse_scalar(k, v);
    };
    for (std::size_t j = 0; j < kJointsPerFinger; ++j) {
      const std::string p = sec + "joint" + std::to_string(j) + "_";
      auto joint = [f, j](AppConfig& c) -> JointSpec& { return c.model.finger(f).joints[j]; };
      s[p + "axis"] = [joint](AppConfig& c, const std::string& k, const std::string& v) { joint(c).axis = parse_vec3(k, v); };
      s[p + "length"] = [joint](AppConfig& c, const std::string& k, const std::string& v) { joint(c).length = parse_scalar(k, v); };
      s[p + "mass"] = [joint](AppConfig& c, const std::string& k, const std::string& v) { joint(c).mass = parse_scalar(k, v); };
      s[p + "lower"] = [joint](AppConfig& c, const std::string& k, const std::string& v) { joint(c).lower = parse_scalar(k, v); };
      s[p + "upper"] = [joint](AppConfig& c, const std::string& k, const std::string& v) { joint(c).upper = parse_scalar(k, v); };
    }
  }
  s["retarget.thumb_scale"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.retarget.thumb_scale = parse_vec3(k, v); };
  s["retarget.thumb_offset"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.retarget.thumb_offset = parse_vec3(k, v); };
  s["retarget.angle_gain"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.retarget.angle_gain = parse_scalar(k, v); };
  s["retarget.ik_lambda"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.retarget.ik.lambda = parse_scalar(k, v); };
  s["retarget.ik_max_iters"] = [](AppConfig& c, const std::string& k, const std::string& v) {
    const double n = parse_scalar(k, v);
    if (n != std::floor(n) || n < 0 || n > 1e6) fail(ErrorCode::BadConfig, k + ": expected a non-negative integer");
    c.retarget.ik.max_iters = static_cast<int>(n);
  };
  s["retarget.ik_tol_m"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.retarget.ik.tol_m = parse_scalar(k, v); };
  s["dynamics.inertia"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.dynamics.inertia = parse_scalar(k, v); };
  s["dynamics.damping"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.dynamics.damping = parse_scalar(k, v); };
  s["dynamics.gravity"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.dynamics.gravity = parse_vec3(k, v); };
  s["dynamics.kp"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.dynamics.kp = parse_scalar(k, v); };
  s["dynamics.kd"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.dynamics.kd = parse_scalar(k, v); };
  s["dynamics.dt"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.dynamics.dt = parse_scalar(k, v); };
  s["render.center_x"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.render.center_x = parse_scalar(k, v); };
  s["render.center_y"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.render.center_y = parse_scalar(k, v); };
  s["render.pixel_pitch"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.render.pixel_pitch = parse_scalar(k, v); };
  s["render.sigma_joint"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.render.sigma_joint = parse_scalar(k, v); };
  s["render.sigma_tip"] = [](AppConfig& c, const std::string& k, const std::string& v) { c.render.sigma_tip = parse_scalar(k, v); };
  return s;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

Mat3 rotation_from_rpy(const Vec3& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

AppConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::BadConfig, e.what());
  }
  static const std::map<std::string, Setter> setters = make_setters();
  AppConfig cfg;
  for (const auto& [section, keys] : tree) {
    if (keys.empty() && !keys.data().empty()) {
      fail(ErrorCode::BadConfig, "key '" + section + "' must live inside a [section]");
    }
    for (const auto& [key, node] : keys) {
      const std::string full = section + "." + key;
      const auto it = setters.find(full);
      if (it == setters.end()) fail(ErrorCode::BadConfig, "unknown key '" + full + "'");
      it->second(cfg, full, node.data());
    }
  }
  validate(cfg.model);
  validate(cfg.retarget);
  validate(cfg.dynamics);
  validate(cfg.render);
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string to_ini(const AppConfig& cfg) { return render_ini(all_entries(cfg)); }

std::string config_hash(const AppConfig& cfg) { return fnv1a_hex(to_ini(cfg)); }

std::string model_hash(const HandModel& model) { return fnv1a_hex(render_ini(model_entries(model))); }

}  // namespace dexteach
