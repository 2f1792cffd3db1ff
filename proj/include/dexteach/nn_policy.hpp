// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dexteach/byol.hpp"
#include "dexteach/demo_store.hpp"

namespace dexteach {

struct FrameRef {
  int demo = 0;
  int frame = 0;
  friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

/// Embedding rows in (demo, frame) order. Frames whose successor k_skip steps
/// ahead lies past the end of their demo are left out.
struct NNIndex {
  Eigen::MatrixXd embeddings;  // N x 64, unit rows
  std::vector<FrameRef> refs;
  int k_skip = 1;

  std::size_t size() const { return refs.size(); }
};

/// Throws EmptyDataset if there are no demos or no eligible frame, BadConfig if k_skip < 1.
NNIndex build_index(const std::vector<Demo>& demos, const Net& encoder, int k_skip = 1);

struct QueryResult {
  FrameRef t_star;
  std::size_t row = 0;
  double distance = 0.0;
};

/// Exact Euclidean nearest row; the earliest row wins ties.
QueryResult query(const NNIndex& index, const Embedding& z);

struct Action {
  JointVector a_t;
  JointVector q_des;
  QueryResult match;
};

/// q_des = clamp(s^E[t* + k]) and a_t = q_des - s_t.
Action act(const NNIndex& index, const std::vector<Demo>& demos, const Net& encoder, const HandModel& model,
           const Observation& obs, const JointVector& s_t);

/// Maps (observation, current joint state) to a joint target.
using Policy = std::function<JointVector(const Observation&, const JointVector&)>;

struct RolloutConfig {
  int steps = 0;  // policy decisions
  double policy_hz = 5.0;
};

struct RolloutResult {
  std::vector<RobotState> trajectory;  // initial state, then one per policy step
  double final_error = 0.0;            // max-abs joint error against the reference
};

/// Renders, queries the policy, then holds its target for one policy period
/// of simulator steps. Throws BadRate if the policy period is not a whole
/// number of simulator steps.
RolloutResult rollout(const Policy& policy, const RobotState& initial, const JointVector& reference_final,
                      const HandModel& model, const DynParams& dynamics, const RenderConfig& render,
                      const RolloutConfig& cfg);

Policy make_nn_policy(const NNIndex& index, const std::vector<Demo>& demos, const Net& encoder,
                      const HandModel& model);

// ---------------------------------------------------------------------------
// Behaviour cloning baselines

struct BcConfig {
  int epochs = 100;
  int batch = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

struct BcResult {
  Net net;
  std::vector<double> loss_curve;  // MSE per optimizer step
  std::vector<double> epoch_loss;
};

/// Regresses commanded joints from raw pixels with a 1024-256-64-16 network.
BcResult bc_train(const std::vector<Demo>& demos, const BcConfig& cfg);

/// Same regression from frozen encoder embeddings with a 64-64-16 network.
BcResult bc_train_rep(const std::vector<Demo>& demos, const Net& encoder, const BcConfig& cfg);

JointVector bc_act(const Net& net, const Observation& obs);
JointVector bc_act_rep(const Net& net, const Net& encoder, const Observation& obs);

// ---------------------------------------------------------------------------
// Dataset-size sweep

enum class PolicyKind { Vinn, Bc, BcRep };

std::string_view policy_kind_name(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);  // throws BadConfig

struct EvalConfig {
  std::vector<int> sweep{1, 2, 5, 10};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  PolicyKind kind = PolicyKind::Vinn;
  int k_skip = 1;
  int extra_steps = 5;  // policy steps beyond the demo length
  double success_threshold = 0.05;
  ByolConfig byol{};
  BcConfig bc{};
};

struct EvalRow {
  int demos_used = 0;
  double success_rate = 0.0;
  double mean_final_error = 0.0;
  std::vector<double> seed_success;  // one per seed
};

/// For each seed: shuffles the demos, trains on nested prefixes of the sweep
/// sizes and rolls out from the first state of every demo in the dataset,
/// scoring against that demo's last state. Rows are averaged over seeds.
std::vector<EvalRow> evaluate_sweep(const std::vector<Demo>& demos, const HandModel& model,
                                    const DynParams& dynamics, const RenderConfig& render,
                                    const EvalConfig& cfg);

std::string eval_csv(const std::vector<EvalRow>& rows);

/// All observations of the demos, in (demo, frame) order.
std::vector<Observation> dataset_observations(const std::vector<Demo>& demos);

}  // namespace dexteach
