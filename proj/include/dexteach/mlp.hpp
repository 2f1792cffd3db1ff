// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#pragma once

#include <Eigen/Core>
#include <random>
#include <vector>

namespace dexteach {

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Fully-connected network with ReLU between consecutive layers and a linear
/// output. Batches are column-major: one sample per column.
struct Net {
  std::vector<Layer> layers;

  Eigen::Index input_dim() const { return layers.front().weight.cols(); }
  Eigen::Index output_dim() const { return layers.back().weight.rows(); }
  std::size_t parameter_count() const;
  bool all_finite() const;
  /// Same layer shapes as `other`.
  bool same_shape(const Net& other) const;
};

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
Net make_net(const std::vector<int>& dims, std::mt19937_64& rng);

/// Net of the same shape with every parameter zero.
Net zeros_like(const Net& net);

struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;  // input to layer l (post-activation of l-1)
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of layer l
};

Eigen::MatrixXd forward(const Net& net, const Eigen::MatrixXd& x);
Eigen::MatrixXd forward(const Net& net, const Eigen::MatrixXd& x, ForwardCache& cache);

/// Accumulates dL/dparams into `grad` (same shape as net) and returns dL/dx.
Eigen::MatrixXd backward(const Net& net, const ForwardCache& cache, const Eigen::MatrixXd& grad_out,
                         Net& grad);

/// Adaptive-moment optimizer state for one network.
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  Adam() = default;
  Adam(const Net& shape, double lr);
  void step(Net& net, const Net& grad);

  Net m;
  Net v;
  long t = 0;
};

/// Visits every (parameter, gradient) scalar pair in a fixed order.
template <typename Fn>
void for_each_parameter(Net& net, Fn&& fn) {
  for (auto& layer : net.layers) {
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) fn(layer.weight.data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) fn(layer.bias.data()[i]);
  }
}

}  // namespace dexteach
