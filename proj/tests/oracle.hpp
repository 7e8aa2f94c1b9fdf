// Independent reference implementations used to cross-check the library.
// Everything here is deliberately written straight-line, without reusing the
// library's own evaluation or accounting code.

#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "reluc/network.hpp"

namespace oracle {

// Straight-line forward pass: affine, ReLU between layers, final clamp.
inline Eigen::VectorXd forward(const reluc::Network& net, Eigen::VectorXd x) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    Eigen::VectorXd y = net.layers[i].weight * x + net.layers[i].bias;
    if (i + 1 < net.layers.size())
      for (Eigen::Index j = 0; j < y.size(); ++j) y(j) = std::max(y(j), 0.0);
    x = y;
  }
  if (net.clip_bound)
    for (Eigen::Index j = 0; j < x.size(); ++j)
      x(j) = std::clamp(x(j), -*net.clip_bound, *net.clip_bound);
  return x;
}

// Median of three by sorting.
inline double sorted_mid(double a, double b, double c) {
  double v[3] = {a, b, c};
  std::sort(v, v + 3);
  return v[1];
}

// Parameter count by direct enumeration of stored scalars.
inline std::int64_t param_count(const reluc::Network& net) {
  std::int64_t s = 0;
  for (const auto& layer : net.layers)
    s += layer.weight.rows() * (layer.weight.cols() + 1);
  return s;
}

// A random net with the given layer widths (first entry = input dim).
inline reluc::Network random_net(std::mt19937_64& gen,
                                 const std::vector<int>& widths) {
  std::normal_distribution<double> coeff(0.0, 1.0);
  reluc::Network net;
  net.input_dim = widths.front();
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    reluc::Layer layer;
    layer.weight = Eigen::MatrixXd::Zero(widths[i + 1], widths[i]);
    layer.bias = Eigen::VectorXd::Zero(widths[i + 1]);
    for (int r = 0; r < widths[i + 1]; ++r) {
      for (int c = 0; c < widths[i]; ++c) layer.weight(r, c) = coeff(gen);
      layer.bias(r) = coeff(gen);
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

inline std::vector<int> random_widths(std::mt19937_64& gen, int max_layers,
                                      int max_width) {
  std::uniform_int_distribution<int> nl(1, max_layers);
  std::uniform_int_distribution<int> w(1, max_width);
  std::vector<int> widths;
  const int layers = nl(gen);
  for (int i = 0; i <= layers; ++i) widths.push_back(w(gen));
  return widths;
}

}  // namespace oracle
