// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

// Acceptance suite: one PASS or FAIL line per headline criterion, exit status
// 1 if any criterion fails. Run with no arguments.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "byol_oracle.hpp"
#include "dexteach/client.hpp"
#include "dexteach/nn_policy.hpp"
#include "dexteach/server.hpp"
#include "protocol_fixtures.hpp"
#include "session_fixtures.hpp"

namespace dexteach {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// ---------------------------------------------------------------------------

void ik_round_trip(Verdict& v) {
  const HandModel model = default_hand_model();
  std::mt19937_64 rng(2026);
  const FingerJoints mid =
      0.5 * (finger_joints(model.lower(), FingerId::Thumb) + finger_joints(model.upper(), FingerId::Thumb));
  const int trials = 1000;
  int solved = 0;
  int max_iters = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < trials; ++i) {
    const JointVector q_star = testing::random_joints(rng, model.lower(), model.upper());
    const Vec3 target = forward_kinematics(model, q_star).finger(FingerId::Thumb).tip;
    const IkResult r = solve_ik(model, FingerId::Thumb, target, mid);
    const double residual = (finger_forward(model, FingerId::Thumb, r.q).tip - target).norm();
    max_iters = std::max(max_iters, r.iterations);
    if (residual < 1e-3 && r.iterations <= 100) ++solved;
  }
  const double secs = seconds_since(t0);
  v.detail << solved << "/" << trials << " thumb targets below 1e-3 m, max " << max_iters << " iterations, "
           << secs << " s";
  v.require(solved >= 990, "at least 99% solved");
  v.require(secs < 5.0, "under 5 s");
}

void gravity_equilibrium(Verdict& v) {
  const HandModel model = default_hand_model();
  const DynParams params{};
  std::mt19937_64 rng(11);
  double drift = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    RobotState s;
    s.q = testing::random_joints(rng, model.lower() * 0.9, model.upper() * 0.9);
    const JointVector q0 = s.q;
    for (int k = 0; k < 300; ++k) s = step(s, q0, model, params);
    drift = std::max(drift, (s.q - q0).cwiseAbs().maxCoeff());
  }
  double settle = 0.0;
  for (int joint = 0; joint < kNumJoints; ++joint) {
    RobotState s;
    s.q = JointVector::Constant(0.1);
    JointVector q_des = s.q;
    q_des[joint] += 0.5;
    for (int k = 0; k < 300; ++k) s = step(s, q_des, model, params);
    settle = std::max(settle, (s.q - q_des).cwiseAbs().maxCoeff());
  }
  v.detail << "max drift " << drift << " rad over 300 steps; worst step-response error after 1 s " << settle << " rad";
  v.require(drift < 1e-9, "drift below 1e-9");
  v.require(settle < 1e-3, "settled below 1e-3");
}

void gravity_vs_potential(Verdict& v) {
  const HandModel model = default_hand_model();
  const Vec3 g(0.0, 0.0, -9.81);
  auto potential = [&](const JointVector& q) {
    const HandKinematics fk = forward_kinematics(model, q);
    double u = 0.0;
    for (FingerId f : kAllFingers) {
      for (int j = 0; j < kJointsPerFinger; ++j) {
        u -= model.finger(f).joints[static_cast<std::size_t>(j)].mass * g.dot(fk.finger(f).link_center(j));
      }
    }
    return u;
  };
  std::mt19937_64 rng(12);
  const double h = 1e-6;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const JointVector q = testing::random_joints(rng, model.lower(), model.upper());
    const JointVector tau = gravity_torque(model, q, g);
    for (int i = 0; i < kNumJoints; ++i) {
      JointVector qp = q, qm = q;
      qp[i] += h;
      qm[i] -= h;
      worst = std::max(worst, std::abs(tau[i] + (potential(qp) - potential(qm)) / (2 * h)));
    }
  }
  v.detail << "max |G + dU/dq| " << worst << " N m over 100 configurations";
  v.require(worst < 1e-6, "below 1e-6");
}

void rate_contract(Verdict& v) {
  testing::TempDir dir;
  TeleopConfig cfg;
  cfg.demo_dir = dir.path();
  std::uint64_t feedback = 0;
  auto session = make_virtual_session(cfg, [&](const WireMessage& m) {
    if (std::holds_alternative<Feedback>(m)) ++feedback;
  });
  session->on_message(RecordCmd{RecordCmd::Action::Start, "rates"});
  LoopbackOptions opts;
  opts.duration_s = 10.0;
  for (const auto& f : gesture_stream(opts)) session->on_message(to_keypoint_frame(f));
  session->on_message(RecordCmd{RecordCmd::Action::Stop, "rates"});
  const SessionStats s = session->stats();
  const Demo d = load_demo(dir / "rates");
  v.detail << s.control_steps << " control steps, " << feedback << " feedback messages, " << d.frames.size()
           << " recorded frames in 10 s";
  v.require(s.control_steps == 3000, "3000 control steps");
  v.require(feedback == 600 && s.feedback_out == 600, "600 feedback messages");
  v.require(d.frames.size() == 50 && d.complete, "50 recorded frames");
}

void latency(Verdict& v) {
  TeleopConfig delayed;
  delayed.inject_delay_us = 50'000;
  auto session = make_virtual_session(delayed, [](const WireMessage&) {});
  LoopbackOptions opts;
  opts.duration_s = 5.0;
  for (const auto& f : gesture_stream(opts)) session->on_message(to_keypoint_frame(f));
  const auto p50 = session->stats().apply_latency_us_p50;

  testing::TempDir dir;
  ServerConfig cfg;
  cfg.port = 0;
  cfg.teleop.demo_dir = dir.path();
  TeleopServer server(cfg);
  server.start();
  LoopbackOptions ping_opts;
  ping_opts.duration_s = 1.0;
  ping_opts.pings = 100;
  const LoopbackReport r = run_loopback(server, ping_opts);
  server.stop();
  const auto p95 = r.client.rtt_us_p95;
  v.detail << "apply latency p50 " << (p50 ? *p50 / 1000.0 : -1.0) << " ms with 50 ms injected; loopback RTT p95 "
           << (p95 ? *p95 / 1000.0 : -1.0) << " ms over 100 pings";
  v.require(p50 && std::abs(*p50 - 50'000.0) <= 2'000.0, "p50 within 50 +- 2 ms");
  v.require(p95 && *p95 < 5'000.0, "RTT p95 below 5 ms");
}

void byol(Verdict& v) {
  const testing::GradientFixture fx = testing::gradient_fixture();
  const ByolLoss analytic = byol_loss_views(fx.state, fx.view1, fx.view2);
  const testing::GradientCheck check =
      testing::check_byol_gradients(fx.state, fx.view1, fx.view2, analytic.grads, 1e-5);

  const auto obs = testing::grasp_observations(200, 0);
  double lo = 4.0, hi = 0.0;
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ByolState s = make_byol_state(seed);
    const std::vector<Observation> batch(obs.begin() + static_cast<long>(8 * seed),
                                         obs.begin() + static_cast<long>(8 * seed + 16));
    const double loss = byol_loss(s, batch, rng).loss;
    lo = std::min(lo, loss);
    hi = std::max(hi, loss);
  }

  const auto t0 = Clock::now();
  const TrainResult trained = train_byol(obs, ByolConfig{});
  const double secs = seconds_since(t0);
  const Eigen::MatrixXd z = embed_batch(trained.encoder, obs);
  const Eigen::VectorXd mean = z.rowwise().mean();
  const double spread = ((z.colwise() - mean).array().square().rowwise().mean().sqrt()).mean();

  v.detail << "gradient max rel error " << check.max_rel << " over " << check.checked << " parameters ("
           << check.straddled << " kink stencils skipped); loss range [" << lo << ", " << hi << "]; epoch loss "
           << trained.epoch_loss.front() << " -> " << trained.epoch_loss.back() << " in "
           << trained.epoch_loss.size() << " epochs, " << secs << " s; embedding std " << spread;
  v.require(check.max_rel < 1e-4, "gradient error below 1e-4");
  v.require(check.straddled < check.total / 1000, "kink skips below 0.1%");
  v.require(lo >= 0.0 && hi <= 4.0, "loss within [0, 4]");
  v.require(trained.epoch_loss.size() <= 30 && trained.epoch_loss.back() < 0.5 * trained.epoch_loss.front(),
            "loss halves within 30 epochs");
  v.require(secs < 120.0, "training under 2 min");
  v.require(spread > 1e-3, "embedding std above 1e-3");
}

// Ten complete grasp_close demos shared by the policy criteria.
const std::vector<Demo>& grasp_dataset() {
  static const testing::TempDir dir("dexteach-acceptance");
  static const std::vector<Demo> demos = testing::record_demos(dir.path(), Gesture::GraspClose, 10);
  return demos;
}

void nn_retrieval(Verdict& v) {
  const std::vector<Demo>& demos = grasp_dataset();
  const Net encoder = make_byol_state(4).encoder;
  const NNIndex index = build_index(demos, encoder, 1);
  std::mt19937_64 rng(5);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    Observation obs;
    for (double& p : obs) p = testing::uniform(rng, 0.0, 1.0);
    const Embedding z = embed(encoder, obs);
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < index.size(); ++r) {
      double d = 0.0;
      for (int c = 0; c < 64; ++c) {
        const double diff = index.embeddings(static_cast<Eigen::Index>(r), c) - z[c];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    if (query(index, z).row == best) ++agree;
  }
  double self = 0.0;
  for (const auto& ref : index.refs) {
    const auto& frame = demos[static_cast<std::size_t>(ref.demo)].frames[static_cast<std::size_t>(ref.frame)];
    self = std::max(self, query(index, embed(encoder, frame.observation)).distance);
  }
  v.detail << agree << "/1000 queries match the exhaustive scan over " << index.size()
           << " rows; max self-retrieval distance " << self;
  v.require(agree == 1000, "all queries match");
  v.require(self == 0.0, "self-retrieval distance 0");
}

void frame_skip(Verdict& v) {
  const std::vector<Demo>& demos = grasp_dataset();
  const HandModel model = default_hand_model();
  const Net encoder = make_byol_state(6).encoder;
  int checked = 0, exact = 0;
  for (int k : {1, 2, 3}) {
    const NNIndex index = build_index(demos, encoder, k);
    for (std::size_t r = 0; r < index.size(); r += 7) {
      const auto& ref = index.refs[r];
      const auto& demo = demos[static_cast<std::size_t>(ref.demo)];
      const Action a = act(index, demos, encoder, model, demo.frames[static_cast<std::size_t>(ref.frame)].observation,
                           demo.frames[static_cast<std::size_t>(ref.frame)].state);
      const auto& hit = demos[static_cast<std::size_t>(a.match.t_star.demo)];
      ++checked;
      if (a.q_des == hit.frames[static_cast<std::size_t>(a.match.t_star.frame + k)].state) ++exact;
    }
  }
  v.detail << exact << "/" << checked << " on-manifold actions equal the stored state k frames ahead (k = 1, 2, 3)";
  v.require(checked > 0 && exact == checked, "every action exact");
}

void self_replay_and_sweep(Verdict& v) {
  const std::vector<Demo>& demos = grasp_dataset();
  const HandModel model = default_hand_model();
  const std::vector<Demo> one{demos.front()};
  const Net encoder = train_byol(dataset_observations(one), ByolConfig{}).encoder;
  const NNIndex index = build_index(one, encoder, 1);
  RobotState start;
  start.q = one[0].frames.front().state;
  RolloutConfig rc;
  rc.steps = static_cast<int>(one[0].frames.size()) - 1 + 5;
  rc.policy_hz = one[0].meta.record_hz;
  const RolloutResult r =
      rollout(make_nn_policy(index, one, encoder, model), start, one[0].frames.back().state, model, {}, {}, rc);

  EvalConfig cfg;  // sweep 1, 2, 5, 10 over seeds 0, 1, 2
  const auto rows = evaluate_sweep(demos, model, {}, {}, cfg);
  bool monotone = true;
  v.detail << "self-replay final_error " << r.final_error << " rad; success by dataset size";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v.detail << " " << rows[i].demos_used << ":" << rows[i].success_rate;
    if (i > 0 && rows[i].success_rate < rows[i - 1].success_rate) monotone = false;
  }
  v.require(r.final_error < 0.05, "self-replay below 0.05 rad");
  v.require(monotone, "success non-decreasing in dataset size");
}

void dataset_round_trip(Verdict& v) {
  testing::TempDir dir;
  const HandModel model = default_hand_model();
  std::mt19937_64 rng(8);
  std::vector<Demo> written;
  for (int d = 0; d < 100; ++d) {
    char name[32];
    std::snprintf(name, sizeof name, "demo_%03d", d);
    DemoWriter w = DemoWriter::start(dir.path(), name);
    const int frames = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < frames; ++i) {
      DemoFrame f;
      f.ts_us = 200'000LL * i;
      for (double& p : f.observation) p = testing::uniform(rng, 0.0, 1.0);
      f.state = testing::random_joints(rng, model.lower(), model.upper());
      f.command = testing::random_joints(rng, model.lower(), model.upper());
      w.append(f);
    }
    written.push_back(w.stop());
  }
  const std::vector<Demo> loaded = load_dataset(dir.path());
  bool same = loaded.size() == written.size();
  double worst_obs = 0.0;
  std::size_t frames = 0;
  for (std::size_t d = 0; same && d < loaded.size(); ++d) {
    same = same && loaded[d].complete && loaded[d].frames.size() == written[d].frames.size();
    for (std::size_t i = 0; same && i < loaded[d].frames.size(); ++i) {
      const DemoFrame& a = written[d].frames[i];
      const DemoFrame& b = loaded[d].frames[i];
      same = a.ts_us == b.ts_us && std::memcmp(a.state.data(), b.state.data(), sizeof(double) * kNumJoints) == 0 &&
             std::memcmp(a.command.data(), b.command.data(), sizeof(double) * kNumJoints) == 0;
      for (std::size_t p = 0; p < a.observation.size(); ++p) {
        worst_obs = std::max(worst_obs, std::abs(a.observation[p] - b.observation[p]));
      }
      ++frames;
    }
  }
  v.detail << loaded.size() << " demos, " << frames << " frames; states and commands "
           << (same ? "bit-exact" : "differ") << "; max observation error " << worst_obs << " (1/255 = "
           << 1.0 / 255.0 << ")";
  v.require(same, "states and commands bit-exact");
  v.require(worst_obs <= 1.0 / 255.0, "observations within 1/255");
}

void protocol(Verdict& v) {
  std::mt19937_64 rng(9);
  int identical = 0;
  for (int i = 0; i < 1000; ++i) {
    const WireMessage m = testing::any_message(rng);
    if (testing::bit_equal(decode(encode(m)), m)) ++identical;
  }
  const auto corpus = testing::malformed_corpus();
  int rejected = 0;
  for (const auto& c : corpus) {
    try {
      decode(c.line);
    } catch (const Error& e) {
      if (e.code() == c.code) ++rejected;
    } catch (const std::exception&) {
    }
  }
  v.detail << identical << "/1000 random messages round-trip bit-exactly; " << rejected << "/" << corpus.size()
           << " malformed fixtures rejected with the expected error";
  v.require(identical == 1000, "all round trips exact");
  v.require(corpus.size() >= 10 && rejected == static_cast<int>(corpus.size()), "all fixtures rejected");
}

struct Criterion {
  const char* name;
  void (*run)(Verdict&);
};

constexpr Criterion kCriteria[] = {
    {"ik-round-trip", ik_round_trip},
    {"gravity-compensation-equilibrium", gravity_equilibrium},
    {"gravity-torque-vs-potential", gravity_vs_potential},
    {"rate-contract", rate_contract},
    {"latency-harness", latency},
    {"byol-gradient-and-training", byol},
    {"nn-retrieval", nn_retrieval},
    {"frame-skip-action", frame_skip},
    {"self-replay-and-dataset-sweep", self_replay_and_sweep},
    {"dataset-round-trip", dataset_round_trip},
    {"protocol-round-trip", protocol},
};

}  // namespace
}  // namespace dexteach

int main() {
  using namespace dexteach;
  int failures = 0;
  for (const Criterion& c : kCriteria) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS " : "FAIL ") << c.name << ": " << v.detail.str() << " (" << seconds_since(t0)
              << " s)" << std::endl;
  }
  std::cout << (std::size(kCriteria) - static_cast<std::size_t>(failures)) << "/" << std::size(kCriteria)
            << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
