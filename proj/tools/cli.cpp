// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "dexteach/config.hpp"
#include "dexteach/encoder_io.hpp"
#include "dexteach/error.hpp"
#include "dexteach/loopback.hpp"
#include "dexteach/nn_policy.hpp"
#include "dexteach/server.hpp"

namespace dexteach::cli {

namespace {

struct Common {
  std::string config_path;
  std::string model_path;
};

struct ServeOpts {
  std::string bind = "127.0.0.1:7070";
  bool virtual_time = false;
  std::string demo_dir = "demos";
  double inject_ms = 0.0;
};

struct TeachOpts {
  std::string gesture;
  int demos = 1;
  std::string out;
  double duration_s = 10.0;
  double keypoint_hz = 60.0;
  std::uint64_t seed = 0;
};

struct TrainOpts {
  std::string dataset;
  std::string out;
  ByolConfig byol{};
  std::string loss_csv;
};

struct RolloutOpts {
  std::string dataset;
  std::string encoder;
  int k = 1;
  int demos_used = 0;  // 0 = all
  int reference = 0;
  int extra_steps = 5;
  std::string trajectory_csv;
};

struct EvalOpts {
  std::string dataset;
  std::vector<int> sweep;
  int seeds = 3;
  std::string policy = "vinn";
  int k = 1;
  int epochs = 30;
  int bc_epochs = 100;
  std::string out;
};

struct LatencyOpts {
  double inject_ms = 0.0;
  double duration_s = 10.0;
  int pings = 100;
  bool live = false;
  std::string gesture = "grasp_close";
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig:
    case ErrorCode::BadRate:
    case ErrorCode::EmptyDataset:
    case ErrorCode::DuplicateName:
    case ErrorCode::DegenerateSamples:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

AppConfig resolve_app(const Common& c) {
  AppConfig app = c.config_path.empty() ? AppConfig{} : load_config(c.config_path);
  if (!c.model_path.empty()) app.model = load_config(c.model_path).model;
  return app;
}

void print_resolved(std::ostream& err, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& flags, const AppConfig* app) {
  err << "# resolved configuration for '" << command << "'\n[cli]\n";
  for (const auto& [k, v] : flags) err << k << " = " << v << "\n";
  if (app != nullptr) err << "\n" << to_ini(*app);
  err << "# end of configuration\n";
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::pair<std::string, std::uint16_t> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size()) {
    fail(ErrorCode::BadConfig, "--bind expects host:port, got '" + bind + "'");
  }
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(bind.substr(colon + 1), &used);
    if (used != bind.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) fail(ErrorCode::BadConfig, "invalid port in --bind '" + bind + "'");
  return {bind.substr(0, colon), static_cast<std::uint16_t>(port)};
}

std::vector<Demo> load_complete(const std::string& dir, std::ostream& err) {
  std::vector<std::string> warnings;
  std::vector<Demo> demos = load_dataset(dir, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << "\n";
  if (demos.empty()) fail(ErrorCode::EmptyDataset, "no demos found in " + dir);
  return demos;
}

int cmd_serve(const Common& common, const ServeOpts& o, std::ostream& out, std::ostream& err) {
  ServerConfig cfg;
  cfg.teleop.app = resolve_app(common);
  cfg.teleop.demo_dir = o.demo_dir;
  cfg.teleop.inject_delay_us = std::llround(o.inject_ms * 1000.0);
  std::tie(cfg.bind_address, cfg.port) = parse_bind(o.bind);
  cfg.virtual_time = o.virtual_time;
  print_resolved(err, "serve",
                 {{"bind", o.bind},
                  {"mode", o.virtual_time ? "virtual" : "live"},
                  {"demo_dir", o.demo_dir},
                  {"inject_ms", fmt(o.inject_ms)}},
                 &cfg.teleop.app);
  TeleopServer server(cfg);
  server.run([&](std::uint16_t port) {
    out << "listening on " << cfg.bind_address << ":" << port << " (" << (o.virtual_time ? "virtual" : "live")
        << " time)" << std::endl;
  });
  out << "server stopped" << std::endl;
  return kExitOk;
}

int cmd_teach(const Common& common, const TeachOpts& o, std::ostream& out, std::ostream& err) {
  ServerConfig cfg;
  cfg.teleop.app = resolve_app(common);
  cfg.teleop.demo_dir = o.out;
  cfg.port = 0;
  cfg.virtual_time = true;
  const Gesture gesture = parse_gesture(o.gesture);
  if (o.demos < 1) fail(ErrorCode::BadConfig, "--demos must be at least 1");
  print_resolved(err, "teach-synth",
                 {{"gesture", o.gesture},
                  {"demos", std::to_string(o.demos)},
                  {"out", o.out},
                  {"duration", fmt(o.duration_s)},
                  {"keypoint_hz", fmt(o.keypoint_hz)},
                  {"seed", std::to_string(o.seed)}},
                 &cfg.teleop.app);
  std::filesystem::create_directories(o.out);
  TeleopServer server(cfg);
  server.start();
  for (int i = 0; i < o.demos; ++i) {
    std::ostringstream name;
    name << gesture_name(gesture) << '_' << std::setw(3) << std::setfill('0') << i;
    LoopbackOptions lo;
    lo.gesture = gesture;
    lo.duration_s = o.duration_s;
    lo.keypoint_hz = o.keypoint_hz;
    lo.seed = o.seed + static_cast<std::uint64_t>(i);
    lo.record_name = name.str();
    const LoopbackReport r = run_loopback(server, lo);
    if (!r.record_stop_ack || !r.record_stop_ack->ok) {
      fail(ErrorCode::IoError, "demo '" + name.str() + "' was not stored: " +
                                   (r.record_stop_ack ? r.record_stop_ack->msg : std::string("no reply")));
    }
    out << name.str() << ": " << r.server.frames_recorded << " frames, " << r.feedback.size()
        << " feedback messages\n";
  }
  server.stop();
  return kExitOk;
}

int cmd_train(const Common& common, const TrainOpts& o, std::ostream& out, std::ostream& err) {
  const AppConfig app = resolve_app(common);
  print_resolved(err, "train",
                 {{"dataset", o.dataset},
                  {"out", o.out},
                  {"epochs", std::to_string(o.byol.epochs)},
                  {"batch", std::to_string(o.byol.batch)},
                  {"lr", fmt(o.byol.lr)},
                  {"tau", fmt(o.byol.tau)},
                  {"seed", std::to_string(o.byol.seed)}},
                 &app);
  const std::vector<Demo> demos = load_complete(o.dataset, err);
  const TrainResult r = train_byol(dataset_observations(demos), o.byol);
  save_net(o.out, r.encoder);
  if (!o.loss_csv.empty()) {
    std::ofstream csv(o.loss_csv);
    csv << "step,loss\n" << std::setprecision(10);
    for (std::size_t i = 0; i < r.loss_curve.size(); ++i) csv << i << ',' << r.loss_curve[i] << '\n';
    if (!csv) fail(ErrorCode::IoError, "cannot write " + o.loss_csv);
  }
  out << "trained on " << dataset_observations(demos).size() << " frames; epoch loss " << r.epoch_loss.front()
      << " -> " << r.epoch_loss.back() << "; encoder written to " << o.out << "\n";
  return kExitOk;
}

int cmd_rollout(const Common& common, const RolloutOpts& o, std::ostream& out, std::ostream& err) {
  const AppConfig app = resolve_app(common);
  print_resolved(err, "rollout",
                 {{"dataset", o.dataset},
                  {"encoder", o.encoder},
                  {"k", std::to_string(o.k)},
                  {"demos_used", o.demos_used == 0 ? std::string("all") : std::to_string(o.demos_used)},
                  {"reference", std::to_string(o.reference)},
                  {"extra_steps", std::to_string(o.extra_steps)}},
                 &app);
  std::vector<Demo> demos = load_complete(o.dataset, err);
  if (o.demos_used < 0 || static_cast<std::size_t>(o.demos_used) > demos.size()) {
    fail(ErrorCode::BadConfig, "--demos-used exceeds the " + std::to_string(demos.size()) + " demos available");
  }
  if (o.reference < 0 || static_cast<std::size_t>(o.reference) >= demos.size()) {
    fail(ErrorCode::BadConfig, "--reference must index one of the " + std::to_string(demos.size()) + " demos");
  }
  const Demo reference = demos[static_cast<std::size_t>(o.reference)];
  if (o.demos_used > 0) demos.resize(static_cast<std::size_t>(o.demos_used));
  const Net encoder = load_net(o.encoder);
  const NNIndex index = build_index(demos, encoder, o.k);
  RobotState start;
  start.q = reference.frames.front().state;
  RolloutConfig rc;
  rc.steps = static_cast<int>(reference.frames.size()) - 1 + o.extra_steps;
  rc.policy_hz = reference.meta.record_hz;
  const RolloutResult r = rollout(make_nn_policy(index, demos, encoder, app.model), start,
                                  reference.frames.back().state, app.model, app.dynamics, app.render, rc);
  if (!o.trajectory_csv.empty()) {
    std::ofstream csv(o.trajectory_csv);
    csv << "t_sim" << std::setprecision(17);
    for (int j = 0; j < kNumJoints; ++j) csv << ",q" << j;
    csv << '\n';
    for (const auto& s : r.trajectory) {
      csv << s.t_sim;
      for (int j = 0; j < kNumJoints; ++j) csv << ',' << s.q[j];
      csv << '\n';
    }
    if (!csv) fail(ErrorCode::IoError, "cannot write " + o.trajectory_csv);
  }
  out << "reference " << reference.name << ": " << rc.steps << " policy steps, final_error " << r.final_error
      << " rad, " << (r.final_error < 0.05 ? "success" : "failure") << "\n";
  return kExitOk;
}

int cmd_eval(const Common& common, const EvalOpts& o, std::ostream& out, std::ostream& err) {
  const AppConfig app = resolve_app(common);
  std::string sweep_text;
  for (int n : o.sweep) sweep_text += (sweep_text.empty() ? "" : ",") + std::to_string(n);
  print_resolved(err, "eval",
                 {{"dataset", o.dataset},
                  {"sweep_demos", sweep_text},
                  {"seeds", std::to_string(o.seeds)},
                  {"policy", o.policy},
                  {"k", std::to_string(o.k)},
                  {"epochs", std::to_string(o.epochs)},
                  {"bc_epochs", std::to_string(o.bc_epochs)},
                  {"out", o.out.empty() ? std::string("stdout") : o.out}},
                 &app);
  if (o.seeds < 1) fail(ErrorCode::BadConfig, "--seeds must be at least 1");
  const std::vector<Demo> demos = load_complete(o.dataset, err);
  EvalConfig cfg;
  cfg.sweep = o.sweep;
  cfg.seeds.clear();
  for (int s = 0; s < o.seeds; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  cfg.kind = parse_policy_kind(o.policy);
  cfg.k_skip = o.k;
  cfg.byol.epochs = o.epochs;
  cfg.bc.epochs = o.bc_epochs;
  const std::string csv = eval_csv(evaluate_sweep(demos, app.model, app.dynamics, app.render, cfg));
  if (o.out.empty()) {
    out << csv;
  } else {
    std::ofstream file(o.out);
    file << csv;
    if (!file) fail(ErrorCode::IoError, "cannot write " + o.out);
    out << "wrote " << o.out << "\n";
  }
  return kExitOk;
}

int cmd_latency(const Common& common, const LatencyOpts& o, std::ostream& out, std::ostream& err) {
  ServerConfig cfg;
  cfg.teleop.app = resolve_app(common);
  cfg.teleop.inject_delay_us = std::llround(o.inject_ms * 1000.0);
  cfg.port = 0;
  cfg.virtual_time = !o.live;
  if (o.inject_ms < 0.0) fail(ErrorCode::BadConfig, "--inject-ms must not be negative");
  if (o.pings < 1) fail(ErrorCode::BadConfig, "--pings must be at least 1");
  print_resolved(err, "latency",
                 {{"inject_ms", fmt(o.inject_ms)},
                  {"duration", fmt(o.duration_s)},
                  {"pings", std::to_string(o.pings)},
                  {"mode", o.live ? "live" : "virtual"},
                  {"gesture", o.gesture}},
                 &cfg.teleop.app);
  LoopbackOptions lo;
  lo.gesture = parse_gesture(o.gesture);
  lo.duration_s = o.duration_s;
  lo.pings = o.pings;
  lo.realtime = o.live;
  TeleopServer server(cfg);
  server.start();
  const LoopbackReport r = run_loopback(server, lo);
  server.stop();
  auto show = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << *v / 1000.0 << " ms";
    return s.str();
  };
  out << "frames_in " << r.server.frames_in << ", frames_dropped " << r.server.frames_dropped << ", feedback_out "
      << r.server.feedback_out << ", control_steps " << r.server.control_steps << "\n"
      << "apply latency p50 " << show(r.server.apply_latency_us_p50) << ", p95 "
      << show(r.server.apply_latency_us_p95) << "\n"
      << "round trip p50 " << show(r.client.rtt_us_p50) << ", p95 " << show(r.client.rtt_us_p95) << " over "
      << o.pings << " pings\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dexteach: teleoperated teaching, representation learning and nearest-neighbour imitation"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&common](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "INI file overriding the compiled defaults")
        ->check(CLI::ExistingFile);
    sub->add_option("--model", common.model_path, "INI file whose finger sections replace the hand model")
        ->check(CLI::ExistingFile);
  };

  ServeOpts serve;
  auto* s = app.add_subcommand("serve", "run the teleoperation server");
  add_common(s);
  s->add_option("--bind", serve.bind, "listen address host:port")->capture_default_str();
  s->add_flag("--virtual-time", serve.virtual_time, "drive every loop from keypoint timestamps");
  s->add_option("--demo-dir", serve.demo_dir, "where recordings are stored")->capture_default_str();
  s->add_option("--inject-ms", serve.inject_ms, "artificial ingest-to-apply delay")->check(CLI::NonNegativeNumber);

  TeachOpts teach;
  auto* t = app.add_subcommand("teach-synth", "record synthetic demonstrations through a loopback session");
  add_common(t);
  t->add_option("--gesture", teach.gesture, "grasp_close, finger_wave or thumb_circle")->required();
  t->add_option("--demos", teach.demos, "number of demos")->required()->check(CLI::PositiveNumber);
  t->add_option("--out", teach.out, "dataset directory")->required();
  t->add_option("--duration", teach.duration_s, "seconds per demo")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--keypoint-hz", teach.keypoint_hz, "keypoint stream rate")->capture_default_str()->check(CLI::Range(1.0, 200.0));
  t->add_option("--seed", teach.seed, "seed of the first demo")->capture_default_str();

  TrainOpts train;
  auto* tr = app.add_subcommand("train", "fit the image encoder by BYOL");
  add_common(tr);
  tr->add_option("--dataset", train.dataset, "dataset directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--out", train.out, "encoder file to write")->required();
  tr->add_option("--epochs", train.byol.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--batch", train.byol.batch)->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--lr", train.byol.lr)->capture_default_str()->check(CLI::PositiveNumber);
  tr->add_option("--tau", train.byol.tau)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  tr->add_option("--seed", train.byol.seed)->capture_default_str();
  tr->add_option("--loss-csv", train.loss_csv, "write the per-step loss curve");

  RolloutOpts roll;
  auto* r = app.add_subcommand("rollout", "closed-loop nearest-neighbour rollout in the simulator");
  add_common(r);
  r->add_option("--dataset", roll.dataset)->required()->check(CLI::ExistingDirectory);
  r->add_option("--encoder", roll.encoder)->required()->check(CLI::ExistingFile);
  r->add_option("--k", roll.k, "frame skip")->capture_default_str()->check(CLI::PositiveNumber);
  r->add_option("--demos-used", roll.demos_used, "index only the first n demos (0 = all)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  r->add_option("--reference", roll.reference, "demo whose start and end define the task")->capture_default_str();
  r->add_option("--extra-steps", roll.extra_steps, "policy steps beyond the reference length")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  r->add_option("--trajectory-csv", roll.trajectory_csv, "write visited states");

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "success rate against dataset size");
  add_common(e);
  e->add_option("--dataset", ev.dataset)->required()->check(CLI::ExistingDirectory);
  e->add_option("--sweep-demos", ev.sweep, "comma-separated dataset sizes")->required()->delimiter(',');
  e->add_option("--seeds", ev.seeds)->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--policy", ev.policy, "vinn, bc or bc-rep")->capture_default_str();
  e->add_option("--k", ev.k, "frame skip")->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--epochs", ev.epochs, "encoder training epochs")->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--bc-epochs", ev.bc_epochs)->capture_default_str()->check(CLI::PositiveNumber);
  e->add_option("--out", ev.out, "CSV file (stdout if omitted)");

  LatencyOpts lat;
  auto* l = app.add_subcommand("latency", "measure apply latency and round trip over loopback");
  add_common(l);
  l->add_option("--inject-ms", lat.inject_ms, "artificial ingest-to-apply delay")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  l->add_option("--duration", lat.duration_s)->capture_default_str()->check(CLI::PositiveNumber);
  l->add_option("--pings", lat.pings)->capture_default_str()->check(CLI::PositiveNumber);
  l->add_flag("--live", lat.live, "pace the control loop by the wall clock");
  l->add_option("--gesture", lat.gesture)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    err << "error: " << ex.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_serve(common, serve, out, err);
    if (t->parsed()) return cmd_teach(common, teach, out, err);
    if (tr->parsed()) return cmd_train(common, train, out, err);
    if (r->parsed()) return cmd_rollout(common, roll, out, err);
    if (e->parsed()) return cmd_eval(common, ev, out, err);
    if (l->parsed()) return cmd_latency(common, lat, out, err);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    return exit_code_for(ex.code());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitRuntime;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace dexteach::cli
