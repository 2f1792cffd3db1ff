// Copyright 2026 The dexteach Authors.
// Distributed under the terms of the Apache License, Version 2.0
// (obtainable from http://www.apache.org/licenses/LICENSE-2.0).

#include "dexteach/encoder_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "dexteach/error.hpp"

namespace dexteach {

namespace {

constexpr char kMagic[8] = {'H', 'D', 'X', 'E', 'N', 'C', '0', '1'};
constexpr std::uint32_t kMaxDim = 1u << 20;

static_assert(std::endian::native == std::endian::little, "file format assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) fail(ErrorCode::BadConfig, "network file is truncated");
  return v;
}

double get_f64(std::istream& in) {
  double v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) fail(ErrorCode::BadConfig, "network file is truncated");
  return v;
}

}  // namespace

void save_net(const std::filesystem::path& path, const Net& net) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
    for (const auto& layer : net.layers) {
      put_u32(out, static_cast<std::uint32_t>(layer.weight.rows()));
      put_u32(out, static_cast<std::uint32_t>(layer.weight.cols()));
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) put_f64(out, layer.weight(r, c));
      }
      for (Eigen::Index r = 0; r < layer.bias.size(); ++r) put_f64(out, layer.bias[r]);
    }
    out.flush();
    if (!out) fail(ErrorCode::IoError, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::IoError, "cannot replace " + path.string() + ": " + ec.message());
}

Net load_net(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path.string());
  char magic[sizeof kMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    fail(ErrorCode::BadConfig, path.string() + " is not a network file");
  }
  const std::uint32_t count = get_u32(in);
  if (count == 0 || count > 64) fail(ErrorCode::BadConfig, "implausible layer count " + std::to_string(count));
  Net net;
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim) {
      fail(ErrorCode::BadConfig, "implausible shape in layer " + std::to_string(l));
    }
    if (l > 0 && cols != net.layers.back().weight.rows()) {
      fail(ErrorCode::BadConfig, "layer " + std::to_string(l) + " does not chain onto the previous one");
    }
    Layer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < cols; ++c) layer.weight(r, c) = get_f64(in);
    }
    for (std::uint32_t r = 0; r < rows; ++r) layer.bias[r] = get_f64(in);
    net.layers.push_back(std::move(layer));
  }
  if (in.peek() != std::char_traits<char>::eof()) fail(ErrorCode::BadConfig, "trailing bytes after network");
  if (!net.all_finite()) fail(ErrorCode::BadConfig, "network file holds non-finite values");
  return net;
}

}  // namespace dexteach
