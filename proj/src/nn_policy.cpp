// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/nn_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dexteach/error.hpp"

namespace dexteach {

NNIndex build_index(const std::vector<Demo>& demos, const Net& encoder, int k_skip) {
  if (demos.empty()) fail(ErrorCode::EmptyDataset, "cannot index an empty dataset");
  if (k_skip < 1) fail(ErrorCode::BadConfig, "k_skip must be at least 1");
  NNIndex index;
  index.k_skip = k_skip;
  for (std::size_t d = 0; d < demos.size(); ++d) {
    const int n = static_cast<int>(demos[d].frames.size());
    for (int f = 0; f + k_skip < n; ++f) index.refs.push_back({static_cast<int>(d), f});
  }
  if (index.refs.empty()) {
    fail(ErrorCode::EmptyDataset, "no demo is longer than k_skip = " + std::to_string(k_skip));
  }
  index.embeddings.resize(static_cast<Eigen::Index>(index.refs.size()), encoder.output_dim());
  for (std::size_t r = 0; r < index.refs.size(); ++r) {
    const auto& ref = index.refs[r];
    const auto& obs = demos[static_cast<std::size_t>(ref.demo)].frames[static_cast<std::size_t>(ref.frame)].observation;
    index.embeddings.row(static_cast<Eigen::Index>(r)) = embed(encoder, obs).transpose();
  }
  return index;
}

QueryResult query(const NNIndex& index, const Embedding& z) {
  if (index.refs.empty()) fail(ErrorCode::EmptyDataset, "query on an empty index");
  QueryResult best;
  double best_sq = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < index.embeddings.rows(); ++r) {
    const double sq = (index.embeddings.row(r).transpose() - z).squaredNorm();
    if (sq < best_sq) {
      best_sq = sq;
      best.row = static_cast<std::size_t>(r);
    }
  }
  best.t_star = index.refs[best.row];
  best.distance = std::sqrt(best_sq);
  return best;
}

Action act(const NNIndex& index, const std::vector<Demo>& demos, const Net& encoder, const HandModel& model,
           const Observation& obs, const JointVector& s_t) {
  Action out;
  out.match = query(index, embed(encoder, obs));
  const auto& demo = demos.at(static_cast<std::size_t>(out.match.t_star.demo));
  const auto& next = demo.frames.at(static_cast<std::size_t>(out.match.t_star.frame + index.k_skip));
  out.q_des = clamp_limits(model, next.state);
  out.a_t = out.q_des - s_t;
  return out;
}

Policy make_nn_policy(const NNIndex& index, const std::vector<Demo>& demos, const Net& encoder,
                      const HandModel& model) {
  return [&index, &demos, &encoder, &model](const Observation& obs, const JointVector& s_t) {
    return act(index, demos, encoder, model, obs, s_t).q_des;
  };
}

RolloutResult rollout(const Policy& policy, const RobotState& initial, const JointVector& reference_final,
                      const HandModel& model, const DynParams& dynamics, const RenderConfig& render,
                      const RolloutConfig& cfg) {
  if (!(cfg.policy_hz > 0.0) || cfg.steps < 0) fail(ErrorCode::BadRate, "policy rate must be positive");
  const double ratio = 1.0 / (dynamics.dt * cfg.policy_hz);
  const long hold = std::lround(ratio);
  if (hold < 1 || std::abs(ratio - static_cast<double>(hold)) > 1e-9) {
    fail(ErrorCode::BadRate, "policy period is not a whole number of simulator steps");
  }
  RolloutResult out;
  out.trajectory.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  out.trajectory.push_back(initial);
  RobotState state = initial;
  for (int k = 0; k < cfg.steps; ++k) {
    const JointVector q_des = clamp_limits(model, policy(render_observation(model, state, render), state.q));
    for (long i = 0; i < hold; ++i) state = step(state, q_des, model, dynamics);
    out.trajectory.push_back(state);
  }
  out.final_error = (state.q - reference_final).cwiseAbs().maxCoeff();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

BcResult fit_regression(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, std::vector<int> dims,
                        const BcConfig& cfg) {
  if (cfg.epochs < 1 || cfg.batch < 1 || !(cfg.lr > 0.0)) {
    fail(ErrorCode::BadConfig, "regression settings need epochs >= 1, batch >= 1, lr > 0");
  }
  std::mt19937_64 rng(cfg.seed);
  BcResult out;
  out.net = make_net(dims, rng);
  // Start from the mean command so the first epochs are not spent finding the offset.
  out.net.layers.back().weight.setZero();
  out.net.layers.back().bias = targets.rowwise().mean();

  Adam opt(out.net, cfg.lr);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(inputs.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  ForwardCache cache;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double sum = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      const auto b = static_cast<Eigen::Index>(end - start);
      Eigen::MatrixXd x(inputs.rows(), b);
      Eigen::MatrixXd y(targets.rows(), b);
      for (Eigen::Index i = 0; i < b; ++i) {
        x.col(i) = inputs.col(order[start + static_cast<std::size_t>(i)]);
        y.col(i) = targets.col(order[start + static_cast<std::size_t>(i)]);
      }
      const Eigen::MatrixXd residual = forward(out.net, x, cache) - y;
      const double denom = static_cast<double>(residual.size());
      const double loss = residual.squaredNorm() / denom;
      Net grad = zeros_like(out.net);
      backward(out.net, cache, (2.0 / denom) * residual, grad);
      opt.step(out.net, grad);
      out.loss_curve.push_back(loss);
      sum += loss;
      ++steps;
    }
    out.epoch_loss.push_back(sum / steps);
  }
  return out;
}

Eigen::MatrixXd command_matrix(const std::vector<Demo>& demos) {
  std::size_t n = 0;
  for (const auto& d : demos) n += d.frames.size();
  Eigen::MatrixXd y(kNumJoints, static_cast<Eigen::Index>(n));
  Eigen::Index c = 0;
  for (const auto& d : demos) {
    for (const auto& f : d.frames) y.col(c++) = f.command;
  }
  return y;
}

void require_frames(const std::vector<Demo>& demos) {
  for (const auto& d : demos) {
    if (!d.frames.empty()) return;
  }
  fail(ErrorCode::EmptyDataset, "behaviour cloning needs at least one frame");
}

}  // namespace

std::vector<Observation> dataset_observations(const std::vector<Demo>& demos) {
  std::vector<Observation> obs;
  for (const auto& d : demos) {
    for (const auto& f : d.frames) obs.push_back(f.observation);
  }
  return obs;
}

BcResult bc_train(const std::vector<Demo>& demos, const BcConfig& cfg) {
  require_frames(demos);
  return fit_regression(observations_to_matrix(dataset_observations(demos)), command_matrix(demos),
                        {kImagePixels, 256, 64, kNumJoints}, cfg);
}

BcResult bc_train_rep(const std::vector<Demo>& demos, const Net& encoder, const BcConfig& cfg) {
  require_frames(demos);
  return fit_regression(embed_batch(encoder, dataset_observations(demos)), command_matrix(demos),
                        {static_cast<int>(encoder.output_dim()), 64, kNumJoints}, cfg);
}

JointVector bc_act(const Net& net, const Observation& obs) {
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(obs.data(), kImagePixels);
  return forward(net, x);
}

JointVector bc_act_rep(const Net& net, const Net& encoder, const Observation& obs) {
  return forward(net, embed(encoder, obs));
}

// ---------------------------------------------------------------------------

std::string_view policy_kind_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Vinn: return "vinn";
    case PolicyKind::Bc: return "bc";
    case PolicyKind::BcRep: return "bc-rep";
  }
  return "?";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (PolicyKind k : {PolicyKind::Vinn, PolicyKind::Bc, PolicyKind::BcRep}) {
    if (policy_kind_name(k) == name) return k;
  }
  fail(ErrorCode::BadConfig, "unknown policy '" + std::string(name) + "' (expected vinn, bc or bc-rep)");
}

std::vector<EvalRow> evaluate_sweep(const std::vector<Demo>& demos, const HandModel& model,
                                    const DynParams& dynamics, const RenderConfig& render,
                                    const EvalConfig& cfg) {
  if (demos.empty()) fail(ErrorCode::EmptyDataset, "evaluation needs at least one demo");
  if (cfg.sweep.empty() || cfg.seeds.empty()) fail(ErrorCode::BadConfig, "sweep and seed lists must be non-empty");
  for (int n : cfg.sweep) {
    if (n < 1 || static_cast<std::size_t>(n) > demos.size()) {
      fail(ErrorCode::BadConfig, "cannot use " + std::to_string(n) + " demos from a dataset of " +
                                     std::to_string(demos.size()));
    }
  }
  for (const auto& d : demos) {
    if (d.frames.empty()) fail(ErrorCode::EmptyDataset, "demo '" + d.name + "' has no frames");
  }

  std::vector<EvalRow> rows(cfg.sweep.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].demos_used = cfg.sweep[i];
  const std::vector<Observation> all_obs = dataset_observations(demos);

  for (std::uint64_t seed : cfg.seeds) {
    Net encoder;
    if (cfg.kind != PolicyKind::Bc) {
      ByolConfig byol = cfg.byol;
      byol.seed = seed;
      encoder = train_byol(all_obs, byol).encoder;
    }
    std::vector<std::size_t> order(demos.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t s = 0; s < cfg.sweep.size(); ++s) {
      std::vector<Demo> subset;
      for (int i = 0; i < cfg.sweep[s]; ++i) subset.push_back(demos[order[static_cast<std::size_t>(i)]]);

      Policy policy;
      NNIndex index;
      Net head;
      BcConfig bc = cfg.bc;
      bc.seed = seed;
      switch (cfg.kind) {
        case PolicyKind::Vinn:
          index = build_index(subset, encoder, cfg.k_skip);
          policy = make_nn_policy(index, subset, encoder, model);
          break;
        case PolicyKind::Bc:
          head = bc_train(subset, bc).net;
          policy = [&head](const Observation& obs, const JointVector&) { return bc_act(head, obs); };
          break;
        case PolicyKind::BcRep:
          head = bc_train_rep(subset, encoder, bc).net;
          policy = [&head, &encoder](const Observation& obs, const JointVector&) {
            return bc_act_rep(head, encoder, obs);
          };
          break;
      }

      int successes = 0;
      double error_sum = 0.0;
      for (const auto& demo : demos) {
        RobotState start;
        start.q = demo.frames.front().state;
        RolloutConfig rc;
        rc.steps = static_cast<int>(demo.frames.size()) - 1 + cfg.extra_steps;
        rc.policy_hz = demo.meta.record_hz;
        const RolloutResult r = rollout(policy, start, demo.frames.back().state, model, dynamics, render, rc);
        if (r.final_error < cfg.success_threshold) ++successes;
        error_sum += r.final_error;
      }
      const double rate = static_cast<double>(successes) / static_cast<double>(demos.size());
      rows[s].seed_success.push_back(rate);
      rows[s].success_rate += rate / static_cast<double>(cfg.seeds.size());
      rows[s].mean_final_error +=
          error_sum / static_cast<double>(demos.size()) / static_cast<double>(cfg.seeds.size());
    }
  }
  return rows;
}

std::string eval_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out.precision(6);
  out << "demos_used,success_rate,mean_final_error\n";
  for (const auto& r : rows) out << r.demos_used << ',' << r.success_rate << ',' << r.mean_final_error << '\n';
  return out.str();
}

}  // namespace dexteach
