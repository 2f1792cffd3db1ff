// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dexteach/mlp.hpp"
#include "dexteach/simhand.hpp"

namespace dexteach {

inline constexpr int kEmbeddingDim = 64;

using Embedding = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Augmentation

inline constexpr double kNoiseSigma = 0.02;
inline constexpr int kMaxShift = 2;
inline constexpr int kPatchSide = 4;

/// One draw of every augmentation parameter. Noise is truncated to +-3 sigma.
struct AugmentParams {
  int dx = 0;  // columns, in [-2, 2]
  int dy = 0;  // rows, in [-2, 2]
  double brightness = 1.0;
  int patch_row = 0;
  int patch_col = 0;
  Observation noise{};
};

AugmentParams sample_augment_params(std::mt19937_64& rng);

/// translate (zero fill) -> brightness -> noise -> erase patch -> clamp [0, 1].
Observation apply_augment(const Observation& obs, const AugmentParams& params);

Observation augment(const Observation& obs, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// BYOL

struct ByolConfig {
  int epochs = 30;
  int batch = 16;
  double lr = 1e-3;
  double tau = 0.99;
  std::uint64_t seed = 0;
};

/// Online branch is projector(encoder(x)); target mirrors it and only moves by EMA.
struct ByolState {
  Net encoder;
  Net projector;
  Net predictor;
  Net target_encoder;
  Net target_projector;
  double tau = 0.99;
  Adam opt_encoder;
  Adam opt_projector;
  Adam opt_predictor;
};

/// Encoder 1024-256-64, projector 64-64-64, predictor 64-64-64; target copied from online.
ByolState make_byol_state(std::uint64_t seed, double lr = 1e-3, double tau = 0.99);

/// Gradients exist only for the trainable networks.
struct ByolGrads {
  Net encoder;
  Net projector;
  Net predictor;
};

struct ByolLoss {
  double loss = 0.0;
  ByolGrads grads;
};

/// Symmetric loss for column-aligned views (1024 x B each), averaged over the
/// batch. Throws ZeroVector if any prediction or target has norm < 1e-12.
ByolLoss byol_loss_views(const ByolState& state, const Eigen::MatrixXd& view1,
                         const Eigen::MatrixXd& view2);

/// Draws two augmented views of each observation, then byol_loss_views.
ByolLoss byol_loss(const ByolState& state, const std::vector<Observation>& batch, std::mt19937_64& rng);

/// target <- tau * target + (1 - tau) * online.
void ema_update(ByolState& state, double tau);

struct TrainResult {
  Net encoder;
  std::vector<double> loss_curve;  // one entry per optimizer step
  std::vector<double> epoch_loss;  // mean of loss_curve per epoch
};

/// Throws EmptyDataset for fewer than 2 frames, BadConfig for bad settings.
TrainResult train_byol(const std::vector<Observation>& frames, const ByolConfig& cfg);

Eigen::MatrixXd observations_to_matrix(const std::vector<Observation>& obs);

/// Encoder output scaled to unit length. Throws ZeroVector on a (near) zero output.
Embedding embed(const Net& encoder, const Observation& obs);

/// Column-wise embed for a batch.
Eigen::MatrixXd embed_batch(const Net& encoder, const std::vector<Observation>& obs);

}  // namespace dexteach
