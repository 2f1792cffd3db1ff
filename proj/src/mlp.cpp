// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/mlp.hpp"

#include <cmath>

namespace dexteach {

std::size_t Net::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

bool Net::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool Net::same_shape(const Net& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weight.rows() != other.layers[i].weight.rows() ||
        layers[i].weight.cols() != other.layers[i].weight.cols() ||
        layers[i].bias.size() != other.layers[i].bias.size()) {
      return false;
    }
  }
  return true;
}

Net make_net(const std::vector<int>& dims, std::mt19937_64& rng) {
  Net net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const int fan_in = dims[i];
    const int fan_out = dims[i + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Layer layer;
    layer.weight.resize(fan_out, fan_in);
    for (Eigen::Index k = 0; k < layer.weight.size(); ++k) layer.weight.data()[k] = dist(rng);
    layer.bias = Eigen::VectorXd::Zero(fan_out);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

Net zeros_like(const Net& net) {
  Net out;
  for (const auto& l : net.layers) {
    out.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                          Eigen::VectorXd::Zero(l.bias.size())});
  }
  return out;
}

Eigen::MatrixXd forward(const Net& net, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    Eigen::MatrixXd z = net.layers[l].weight * a;
    z.colwise() += net.layers[l].bias;
    a = l + 1 < net.layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

Eigen::MatrixXd forward(const Net& net, const Eigen::MatrixXd& x, ForwardCache& cache) {
  cache.inputs.clear();
  cache.pre.clear();
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    cache.inputs.push_back(a);
    Eigen::MatrixXd z = net.layers[l].weight * a;
    z.colwise() += net.layers[l].bias;
    cache.pre.push_back(z);
    a = l + 1 < net.layers.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a;
}

Eigen::MatrixXd backward(const Net& net, const ForwardCache& cache, const Eigen::MatrixXd& grad_out,
                         Net& grad) {
  Eigen::MatrixXd delta = grad_out;  // dL/d(pre-activation) of the current layer
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    grad.layers[l].weight.noalias() += delta * cache.inputs[l].transpose();
    grad.layers[l].bias += delta.rowwise().sum();
    Eigen::MatrixXd upstream = net.layers[l].weight.transpose() * delta;
    if (l == 0) return upstream;
    const Eigen::MatrixXd& below = cache.pre[l - 1];
    delta = (below.array() > 0.0).select(upstream, 0.0);
  }
  return delta;
}

Adam::Adam(const Net& shape, double learning_rate)
    : lr(learning_rate), m(zeros_like(shape)), v(zeros_like(shape)) {}

void Adam::step(Net& net, const Net& grad) {
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  auto update = [&](auto& param, const auto& g, auto& mm, auto& vv) {
    mm = beta1 * mm + (1.0 - beta1) * g;
    vv = beta2 * vv + (1.0 - beta2) * g.cwiseProduct(g);
    param.array() -= lr * (mm.array() / c1) / ((vv.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    update(net.layers[l].weight, grad.layers[l].weight, m.layers[l].weight, v.layers[l].weight);
    update(net.layers[l].bias, grad.layers[l].bias, m.layers[l].bias, v.layers[l].bias);
  }
}

}  // namespace dexteach
