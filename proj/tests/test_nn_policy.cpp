// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include <cmath>
#include <cstring>

#include "dexteach/nn_policy.hpp"
#include "session_fixtures.hpp"
#include "support.hpp"

namespace dexteach {
namespace {

using testing::throws_code;

// A demo whose frames follow a retargeted grasp clip, rendered directly.
Demo grasp_demo(int frames, std::uint64_t seed, const std::string& name = "demo") {
  const HandModel model = default_hand_model();
  Demo d;
  d.name = name;
  d.complete = true;
  JointVector q = JointVector::Zero();
  const auto poses = synth_trajectory(Gesture::GraspClose, frames / 5.0, 5.0, seed);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    q = retarget(extract_joint_angles(poses[i]), q, model, {});
    DemoFrame f;
    f.ts_us = static_cast<std::int64_t>(i) * 200000;
    RobotState s;
    s.q = q;
    f.observation = render_observation(model, s);
    f.state = q;
    f.command = q;
    d.frames.push_back(f);
  }
  return d;
}

Net test_encoder(std::uint64_t seed = 0) { return make_byol_state(seed).encoder; }

TEST(BuildIndex, ExcludesFramesWithoutSuccessor) {
  const std::vector<Demo> demos{grasp_demo(10, 0)};
  ASSERT_EQ(demos[0].frames.size(), 10u);
  const Net enc = test_encoder();
  const NNIndex idx = build_index(demos, enc, 1);
  EXPECT_EQ(idx.size(), 9u);
  EXPECT_EQ(idx.embeddings.rows(), 9);
  EXPECT_EQ(idx.refs.back(), (FrameRef{0, 8}));
  EXPECT_EQ(build_index(demos, enc, 4).size(), 6u);
}

TEST(BuildIndex, DemoAsLongAsSkipContributesNothing) {
  const std::vector<Demo> demos{grasp_demo(10, 0), grasp_demo(5, 1)};
  const NNIndex idx = build_index(demos, test_encoder(), 5);
  EXPECT_EQ(idx.size(), 5u);
  for (const auto& r : idx.refs) EXPECT_EQ(r.demo, 0);
  EXPECT_TRUE(throws_code(ErrorCode::EmptyDataset, [&] { build_index({grasp_demo(5, 1)}, test_encoder(), 5); }));
}

TEST(BuildIndex, RowsAreTheEmbeddingsBitForBit) {
  const std::vector<Demo> demos{grasp_demo(8, 2), grasp_demo(6, 3)};
  const Net enc = test_encoder(1);
  const NNIndex idx = build_index(demos, enc, 1);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const auto& ref = idx.refs[r];
    const Embedding z = embed(enc, demos[static_cast<std::size_t>(ref.demo)].frames[static_cast<std::size_t>(ref.frame)].observation);
    const Eigen::VectorXd row = idx.embeddings.row(static_cast<Eigen::Index>(r)).transpose();
    ASSERT_EQ(std::memcmp(row.data(), z.data(), sizeof(double) * 64), 0);
    ASSERT_NEAR(row.norm(), 1.0, 1e-9);
  }
}

TEST(BuildIndex, RejectsBadInput) {
  EXPECT_TRUE(throws_code(ErrorCode::EmptyDataset, [] { build_index({}, test_encoder(), 1); }));
  EXPECT_TRUE(throws_code(ErrorCode::BadConfig, [] { build_index({grasp_demo(5, 0)}, test_encoder(), 0); }));
}

TEST(Query, MatchesBruteForce) {
  std::mt19937_64 rng(4);
  NNIndex idx;
  const int n = 300;
  idx.embeddings.resize(n, 64);
  for (int r = 0; r < n; ++r) {
    Eigen::VectorXd v(64);
    for (auto& x : v) x = testing::uniform(rng, -1.0, 1.0);
    idx.embeddings.row(r) = v.normalized().transpose();
    idx.refs.push_back({r / 100, r % 100});
  }
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd z(64);
    for (auto& x : z) x = testing::uniform(rng, -1.0, 1.0);
    z.normalize();
    int best = 0;
    double best_d = 1e300;
    for (int r = 0; r < n; ++r) {
      double d = 0.0;
      for (int c = 0; c < 64; ++c) d += (idx.embeddings(r, c) - z[c]) * (idx.embeddings(r, c) - z[c]);
      if (d < best_d) {
        best_d = d;
        best = r;
      }
    }
    const QueryResult q = query(idx, z);
    ASSERT_EQ(q.row, static_cast<std::size_t>(best));
    ASSERT_EQ(q.t_star, idx.refs[static_cast<std::size_t>(best)]);
    ASSERT_NEAR(q.distance, std::sqrt(best_d), 1e-12);
  }
}

TEST(Query, TieGoesToEarliestRow) {
  NNIndex idx;
  idx.embeddings = Eigen::MatrixXd::Zero(3, 64);
  idx.embeddings(0, 1) = 1.0;
  idx.embeddings(1, 0) = 1.0;
  idx.embeddings(2, 0) = 1.0;
  idx.refs = {{0, 0}, {0, 1}, {1, 0}};
  Embedding z = Embedding::Zero(64);
  z[0] = 1.0;
  EXPECT_EQ(query(idx, z).t_star, (FrameRef{0, 1}));
  EXPECT_EQ(query(idx, z).distance, 0.0);
}

TEST(Query, StoredFrameRetrievesItself) {
  const std::vector<Demo> demos{grasp_demo(30, 5)};
  const Net enc = test_encoder(2);
  const NNIndex idx = build_index(demos, enc, 1);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const QueryResult q = query(idx, embed(enc, demos[0].frames[static_cast<std::size_t>(idx.refs[r].frame)].observation));
    EXPECT_EQ(q.distance, 0.0);
    // Held poses can repeat a frame; the earliest copy wins.
    EXPECT_LE(q.row, r);
  }
  EXPECT_TRUE(throws_code(ErrorCode::EmptyDataset, [] { query(NNIndex{}, Embedding::Zero(64)); }));
}

class ActSkip : public ::testing::TestWithParam<int> {};

TEST_P(ActSkip, CommandIsTheStateKFramesAhead) {
  const int k = GetParam();
  const HandModel model = default_hand_model();
  const std::vector<Demo> demos{grasp_demo(20, 6)};
  const Net enc = test_encoder(3);
  const NNIndex idx = build_index(demos, enc, k);
  std::mt19937_64 rng(k);
  for (int trial = 0; trial < 10; ++trial) {
    const int frame = static_cast<int>(rng() % idx.size());
    const Observation& obs = demos[0].frames[static_cast<std::size_t>(frame)].observation;
    const JointVector s_t = testing::random_joints(rng, model.lower(), model.upper());
    const Action a = act(idx, demos, enc, model, obs, s_t);
    const auto t = static_cast<std::size_t>(a.match.t_star.frame);
    ASSERT_TRUE(a.q_des == demos[0].frames[t + static_cast<std::size_t>(k)].state);
    ASSERT_TRUE(a.a_t == a.q_des - s_t);
  }
}

INSTANTIATE_TEST_SUITE_P(K, ActSkip, ::testing::Values(1, 2, 3));

TEST(Act, DeltaIsRelativeToCurrentState) {
  const HandModel model = default_hand_model();
  const std::vector<Demo> demos{grasp_demo(12, 7)};
  const Net enc = test_encoder(4);
  const NNIndex idx = build_index(demos, enc, 1);
  const Observation& obs = demos[0].frames[3].observation;
  const JointVector s = JointVector::Constant(0.2);
  const JointVector delta = JointVector::Constant(0.05);
  const Action a = act(idx, demos, enc, model, obs, s);
  const Action b = act(idx, demos, enc, model, obs, s + delta);
  EXPECT_TRUE(b.q_des == a.q_des);
  EXPECT_LT((b.a_t - (a.a_t - delta)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Act, CommandIsClampedToLimits) {
  const HandModel model = default_hand_model();
  std::vector<Demo> demos{grasp_demo(4, 8)};
  demos[0].frames[1].state = JointVector::Constant(10.0);
  const Net enc = test_encoder(5);
  const NNIndex idx = build_index(demos, enc, 1);
  const Action a = act(idx, demos, enc, model, demos[0].frames[0].observation, JointVector::Zero());
  if (a.match.t_star.frame == 0) {
    EXPECT_TRUE(a.q_des == model.upper());
  }
  for (int j = 0; j < kNumJoints; ++j) EXPECT_LE(a.q_des[j], model.upper()[j]);
}

TEST(Act, OpenLoopSelfReplayIsTheShiftedDemo) {
  const HandModel model = default_hand_model();
  // A motion without holds, so every frame has a distinct image.
  Demo d;
  for (int i = 0; i < 25; ++i) {
    DemoFrame f;
    const double u = 0.1 + 0.03 * i;
    f.state = model.lower() + u * (model.upper() - model.lower());
    RobotState s;
    s.q = f.state;
    f.observation = render_observation(model, s);
    d.frames.push_back(f);
  }
  const std::vector<Demo> demos{d};
  const Net enc = test_encoder(6);
  const NNIndex idx = build_index(demos, enc, 1);
  for (std::size_t t = 0; t + 1 < d.frames.size(); ++t) {
    const Action a = act(idx, demos, enc, model, d.frames[t].observation, d.frames[t].state);
    ASSERT_EQ(a.match.t_star.frame, static_cast<int>(t));
    ASSERT_TRUE(a.q_des == d.frames[t + 1].state) << "frame " << t;
  }
}

TEST(Query, NoiseRarelyBringsQueriesCloser) {
  std::vector<Demo> demos;
  for (std::uint64_t s = 0; s < 3; ++s) demos.push_back(grasp_demo(40, 10 + s));
  const Net enc = train_byol(dataset_observations(demos), ByolConfig{.epochs = 10, .seed = 1}).encoder;
  const NNIndex idx = build_index(demos, enc, 1);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0.0, 0.1);
  int holds = 0;
  const int trials = 200;
  // On-manifold queries: frames of unseen grasp clips.
  std::vector<Observation> held_out;
  for (std::uint64_t s = 0; held_out.size() < static_cast<std::size_t>(trials); ++s) {
    for (const auto& f : grasp_demo(40, 100 + s).frames) held_out.push_back(f.observation);
  }
  for (int i = 0; i < trials; ++i) {
    const Observation& clean = held_out[static_cast<std::size_t>(i)];
    Observation noisy = clean;
    for (double& v : noisy) v += noise(rng);
    if (query(idx, embed(enc, clean)).distance <= query(idx, embed(enc, noisy)).distance) ++holds;
  }
  EXPECT_GE(holds, 190) << holds << " of " << trials;
}

// ---------------------------------------------------------------------------

TEST(Rollout, ZeroStepsReturnsInitialState) {
  const HandModel model = default_hand_model();
  RobotState start;
  start.q = JointVector::Constant(0.1);
  const auto r = rollout([](const Observation&, const JointVector& q) { return q; }, start,
                         JointVector::Constant(0.1), model, {}, {}, RolloutConfig{0, 5.0});
  ASSERT_EQ(r.trajectory.size(), 1u);
  EXPECT_EQ(r.final_error, 0.0);
}

TEST(Rollout, HoldsEachCommandForOnePolicyPeriod) {
  const HandModel model = default_hand_model();
  const JointVector target = JointVector::Constant(0.4);
  int calls = 0;
  const auto r = rollout([&](const Observation&, const JointVector&) { ++calls; return target; }, RobotState{},
                         target, model, {}, {}, RolloutConfig{5, 5.0});
  EXPECT_EQ(calls, 5);
  ASSERT_EQ(r.trajectory.size(), 6u);
  EXPECT_NEAR(r.trajectory.back().t_sim, 1.0, 1e-9);
  EXPECT_LT(r.final_error, 1e-3);
}

TEST(Rollout, RejectsRatesThatDoNotDivideTheControlRate) {
  const HandModel model = default_hand_model();
  auto p = [](const Observation&, const JointVector& q) { return q; };
  EXPECT_TRUE(throws_code(ErrorCode::BadRate, [&] { rollout(p, {}, {}, model, {}, {}, RolloutConfig{1, 7.0}); }));
  EXPECT_TRUE(throws_code(ErrorCode::BadRate, [&] { rollout(p, {}, {}, model, {}, {}, RolloutConfig{1, 0.0}); }));
}

TEST(Rollout, SingleDemoSelfReplayClosedLoop) {
  testing::TempDir dir;
  const std::vector<Demo> demos = testing::record_demos(dir.path(), Gesture::GraspClose, 1);
  ASSERT_EQ(demos.size(), 1u);
  ASSERT_TRUE(demos[0].complete);
  const HandModel model = default_hand_model();
  const Net enc = train_byol(dataset_observations(demos), ByolConfig{.seed = 0}).encoder;
  const NNIndex idx = build_index(demos, enc, 1);
  const Policy policy = make_nn_policy(idx, demos, enc, model);
  RobotState start;
  start.q = demos[0].frames.front().state;
  const RolloutConfig rc{static_cast<int>(demos[0].frames.size()) + 4, demos[0].meta.record_hz};
  const auto a = rollout(policy, start, demos[0].frames.back().state, model, {}, {}, rc);
  EXPECT_LT(a.final_error, 0.05);
  const auto b = rollout(policy, start, demos[0].frames.back().state, model, {}, {}, rc);
  EXPECT_EQ(a.final_error, b.final_error);
}

// ---------------------------------------------------------------------------

TEST(BehaviourCloning, LossHalves) {
  std::vector<Demo> demos;
  for (std::uint64_t s = 0; s < 5; ++s) demos.push_back(grasp_demo(40, 20 + s));
  const BcResult r = bc_train(demos, BcConfig{.epochs = 30});
  EXPECT_LT(r.epoch_loss.back(), 0.5 * r.epoch_loss.front());
}

TEST(BehaviourCloning, ConstantCommandsAreLearned) {
  std::vector<Demo> demos{grasp_demo(30, 30)};
  const JointVector c = JointVector::LinSpaced(-0.1, 0.6);
  for (auto& f : demos[0].frames) f.command = c;
  const BcResult r = bc_train(demos, BcConfig{.epochs = 20});
  for (const auto& f : demos[0].frames) {
    ASSERT_LT((bc_act(r.net, f.observation) - c).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(BehaviourCloning, SameSeedSameWeights) {
  const std::vector<Demo> demos{grasp_demo(20, 31)};
  const BcResult a = bc_train(demos, BcConfig{.epochs = 2, .seed = 3});
  const BcResult b = bc_train(demos, BcConfig{.epochs = 2, .seed = 3});
  for (std::size_t l = 0; l < a.net.layers.size(); ++l) EXPECT_TRUE(a.net.layers[l].weight == b.net.layers[l].weight);
  EXPECT_EQ(a.loss_curve, b.loss_curve);
}

TEST(BehaviourCloning, RepresentationVariantUsesEncoderFeatures) {
  std::vector<Demo> demos;
  for (std::uint64_t s = 0; s < 3; ++s) demos.push_back(grasp_demo(30, 40 + s));
  const Net enc = test_encoder(7);
  const BcResult r = bc_train_rep(demos, enc, BcConfig{.epochs = 40});
  EXPECT_EQ(r.net.input_dim(), 64);
  EXPECT_LT(r.epoch_loss.back(), 0.5 * r.epoch_loss.front());
  const Observation& obs = demos[0].frames[5].observation;
  EXPECT_TRUE(bc_act_rep(r.net, enc, obs) == JointVector(forward(r.net, embed(enc, obs))));
}

TEST(BehaviourCloning, RejectsEmptyAndBadSettings) {
  EXPECT_TRUE(throws_code(ErrorCode::EmptyDataset, [] { bc_train({}, {}); }));
  EXPECT_TRUE(throws_code(ErrorCode::EmptyDataset, [] { bc_train({Demo{}}, {}); }));
  EXPECT_TRUE(throws_code(ErrorCode::BadConfig, [] { bc_train({grasp_demo(3, 0)}, BcConfig{.epochs = 0}); }));
}

// ---------------------------------------------------------------------------

TEST(Evaluate, ProducesOneRowPerSweepEntry) {
  std::vector<Demo> demos;
  for (std::uint64_t s = 0; s < 3; ++s) demos.push_back(grasp_demo(15, 50 + s));
  EvalConfig cfg;
  cfg.sweep = {1, 3};
  cfg.seeds = {0, 1};
  cfg.byol.epochs = 2;
  const auto rows = evaluate_sweep(demos, default_hand_model(), {}, {}, cfg);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.seed_success.size(), 2u);
    EXPECT_GE(r.success_rate, 0.0);
    EXPECT_LE(r.success_rate, 1.0);
    EXPECT_GE(r.mean_final_error, 0.0);
  }
  EXPECT_EQ(rows[0].demos_used, 1);
  // Each demo is evaluated against its own end state; with all demos in the
  // index, at least the retrieval of every start frame is exact.
  EXPECT_GT(rows[1].success_rate, 0.0);
}

TEST(Evaluate, RejectsImpossibleSweeps) {
  const std::vector<Demo> demos{grasp_demo(5, 0)};
  EvalConfig cfg;
  cfg.sweep = {2};
  EXPECT_TRUE(throws_code(ErrorCode::BadConfig, [&] { evaluate_sweep(demos, default_hand_model(), {}, {}, cfg); }));
  cfg.sweep = {};
  EXPECT_TRUE(throws_code(ErrorCode::BadConfig, [&] { evaluate_sweep(demos, default_hand_model(), {}, {}, cfg); }));
  cfg.sweep = {1};
  EXPECT_TRUE(throws_code(ErrorCode::EmptyDataset, [&] { evaluate_sweep({}, default_hand_model(), {}, {}, cfg); }));
}

TEST(Evaluate, CsvLayout) {
  EvalRow a;
  a.demos_used = 1;
  a.success_rate = 0.5;
  a.mean_final_error = 0.125;
  EvalRow b;
  b.demos_used = 10;
  b.success_rate = 1.0;
  b.mean_final_error = 0.01;
  EXPECT_EQ(eval_csv({a, b}), "demos_used,success_rate,mean_final_error\n1,0.5,0.125\n10,1,0.01\n");
}

TEST(PolicyKindNames, RoundTrip) {
  for (PolicyKind k : {PolicyKind::Vinn, PolicyKind::Bc, PolicyKind::BcRep}) {
    EXPECT_EQ(parse_policy_kind(policy_kind_name(k)), k);
  }
  EXPECT_TRUE(throws_code(ErrorCode::BadConfig, [] { parse_policy_kind("knn"); }));
}

}  // namespace
}  // namespace dexteach
