// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/byol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dexteach/error.hpp"

namespace dexteach {

namespace {

constexpr double kMinNorm = 1e-12;

void lerp_into(Net& target, const Net& online, double tau) {
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    target.layers[l].weight = tau * target.layers[l].weight + (1.0 - tau) * online.layers[l].weight;
    target.layers[l].bias = tau * target.layers[l].bias + (1.0 - tau) * online.layers[l].bias;
  }
}

}  // namespace

AugmentParams sample_augment_params(std::mt19937_64& rng) {
  AugmentParams p;
  std::uniform_int_distribution<int> shift(-kMaxShift, kMaxShift);
  std::uniform_real_distribution<double> gain(0.8, 1.2);
  std::uniform_int_distribution<int> corner(0, kImageSide - kPatchSide);
  std::normal_distribution<double> gauss(0.0, kNoiseSigma);
  p.dx = shift(rng);
  p.dy = shift(rng);
  p.brightness = gain(rng);
  p.patch_row = corner(rng);
  p.patch_col = corner(rng);
  for (double& n : p.noise) {
    do {
      n = gauss(rng);
    } while (std::abs(n) > 3.0 * kNoiseSigma);
  }
  return p;
}

Observation apply_augment(const Observation& obs, const AugmentParams& p) {
  Observation out{};
  for (int r = 0; r < kImageSide; ++r) {
    for (int c = 0; c < kImageSide; ++c) {
      const int sr = r - p.dy;
      const int sc = c - p.dx;
      const bool inside = sr >= 0 && sr < kImageSide && sc >= 0 && sc < kImageSide;
      const double v = inside ? obs[static_cast<std::size_t>(sr * kImageSide + sc)] : 0.0;
      const auto i = static_cast<std::size_t>(r * kImageSide + c);
      out[i] = v * p.brightness + p.noise[i];
    }
  }
  for (int r = p.patch_row; r < p.patch_row + kPatchSide; ++r) {
    for (int c = p.patch_col; c < p.patch_col + kPatchSide; ++c) {
      out[static_cast<std::size_t>(r * kImageSide + c)] = 0.0;
    }
  }
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Observation augment(const Observation& obs, std::mt19937_64& rng) {
  return apply_augment(obs, sample_augment_params(rng));
}

ByolState make_byol_state(std::uint64_t seed, double lr, double tau) {
  std::mt19937_64 rng(seed);
  ByolState s;
  s.encoder = make_net({kImagePixels, 256, kEmbeddingDim}, rng);
  s.projector = make_net({kEmbeddingDim, 64, 64}, rng);
  s.predictor = make_net({64, 64, 64}, rng);
  s.target_encoder = s.encoder;
  s.target_projector = s.projector;
  s.tau = tau;
  s.opt_encoder = Adam(s.encoder, lr);
  s.opt_projector = Adam(s.projector, lr);
  s.opt_predictor = Adam(s.predictor, lr);
  return s;
}

ByolLoss byol_loss_views(const ByolState& state, const Eigen::MatrixXd& view1,
                         const Eigen::MatrixXd& view2) {
  const Eigen::Index b = view1.cols();
  Eigen::MatrixXd x(view1.rows(), 2 * b);
  x << view1, view2;

  ForwardCache enc_cache;
  ForwardCache proj_cache;
  ForwardCache pred_cache;
  const Eigen::MatrixXd y = forward(state.encoder, x, enc_cache);
  const Eigen::MatrixXd z = forward(state.projector, y, proj_cache);
  const Eigen::MatrixXd p = forward(state.predictor, z, pred_cache);
  const Eigen::MatrixXd t_raw = forward(state.target_projector, forward(state.target_encoder, x));

  // Predictions from view 1 chase the target of view 2 and vice versa.
  Eigen::MatrixXd t(t_raw.rows(), 2 * b);
  t << t_raw.rightCols(b), t_raw.leftCols(b);

  ByolLoss out;
  Eigen::MatrixXd dp(p.rows(), p.cols());
  const double scale = 1.0 / static_cast<double>(b);
  for (Eigen::Index c = 0; c < 2 * b; ++c) {
    const double np = p.col(c).norm();
    const double nt = t.col(c).norm();
    if (!(np >= kMinNorm) || !(nt >= kMinNorm)) {
      fail(ErrorCode::ZeroVector, "BYOL prediction or target vector has vanishing norm");
    }
    const double cosine = p.col(c).dot(t.col(c)) / (np * nt);
    out.loss += scale * (1.0 - cosine);
    dp.col(c) = -scale * (t.col(c) / (np * nt) - cosine * p.col(c) / (np * np));
  }

  out.grads.encoder = zeros_like(state.encoder);
  out.grads.projector = zeros_like(state.projector);
  out.grads.predictor = zeros_like(state.predictor);
  const Eigen::MatrixXd dz = backward(state.predictor, pred_cache, dp, out.grads.predictor);
  const Eigen::MatrixXd dy = backward(state.projector, proj_cache, dz, out.grads.projector);
  backward(state.encoder, enc_cache, dy, out.grads.encoder);
  return out;
}

ByolLoss byol_loss(const ByolState& state, const std::vector<Observation>& batch, std::mt19937_64& rng) {
  std::vector<Observation> v1;
  std::vector<Observation> v2;
  v1.reserve(batch.size());
  v2.reserve(batch.size());
  for (const auto& obs : batch) {
    v1.push_back(augment(obs, rng));
    v2.push_back(augment(obs, rng));
  }
  return byol_loss_views(state, observations_to_matrix(v1), observations_to_matrix(v2));
}

void ema_update(ByolState& state, double tau) {
  if (tau == 1.0) return;
  if (tau == 0.0) {
    state.target_encoder = state.encoder;
    state.target_projector = state.projector;
    return;
  }
  lerp_into(state.target_encoder, state.encoder, tau);
  lerp_into(state.target_projector, state.projector, tau);
}

TrainResult train_byol(const std::vector<Observation>& frames, const ByolConfig& cfg) {
  if (frames.size() < 2) fail(ErrorCode::EmptyDataset, "BYOL training needs at least 2 frames");
  if (cfg.epochs < 1 || cfg.batch < 1 || !(cfg.lr > 0.0) || !(cfg.tau >= 0.0 && cfg.tau <= 1.0)) {
    fail(ErrorCode::BadConfig, "BYOL settings need epochs >= 1, batch >= 1, lr > 0, tau in [0, 1]");
  }
  ByolState state = make_byol_state(cfg.seed, cfg.lr, cfg.tau);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::vector<Observation> batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(frames[order[i]]);
      const ByolLoss step = byol_loss(state, batch, rng);
      state.opt_encoder.step(state.encoder, step.grads.encoder);
      state.opt_projector.step(state.projector, step.grads.projector);
      state.opt_predictor.step(state.predictor, step.grads.predictor);
      ema_update(state, state.tau);
      result.loss_curve.push_back(step.loss);
      epoch_sum += step.loss;
      ++steps;
    }
    result.epoch_loss.push_back(epoch_sum / steps);
  }
  result.encoder = std::move(state.encoder);
  return result;
}

Eigen::MatrixXd observations_to_matrix(const std::vector<Observation>& obs) {
  Eigen::MatrixXd m(kImagePixels, static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(obs[i].data(), kImagePixels);
  }
  return m;
}

Embedding embed(const Net& encoder, const Observation& obs) {
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(obs.data(), kImagePixels);
  Eigen::VectorXd z = forward(encoder, x);
  const double n = z.norm();
  if (!(n >= kMinNorm)) fail(ErrorCode::ZeroVector, "encoder output has vanishing norm");
  return z / n;
}

Eigen::MatrixXd embed_batch(const Net& encoder, const std::vector<Observation>& obs) {
  Eigen::MatrixXd z(encoder.output_dim(), static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) z.col(static_cast<Eigen::Index>(i)) = embed(encoder, obs[i]);
  return z;
}

}  // namespace dexteach
