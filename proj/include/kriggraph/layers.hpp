#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "random.hpp"
#include "tensor.hpp"

namespace kriggraph {

using NamedParameters = std::vector<std::pair<std::string, Tensor>>;

/// Glorot-uniform trainable matrix.
inline Tensor glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> w(fan_in * fan_out);
  for (double& v : w) v = (2.0 * uniform01(rng) - 1.0) * limit;
  return Tensor::parameter(fan_in, fan_out, std::move(w));
}

inline Tensor zeros_parameter(std::size_t rows, std::size_t cols) {
  return Tensor::parameter(rows, cols, std::vector<double>(rows * cols, 0.0));
}

/// y = x W + b, row-vector convention.
struct Linear {
  Tensor weight;  // in x out
  Tensor bias;    // 1 x out

  static Linear init(std::size_t in, std::size_t out, Rng& rng) {
    return {glorot(in, out, rng), zeros_parameter(1, out)};
  }
  Tensor operator()(const Tensor& x) const { return add(matmul(x, weight), bias); }
};

/// Perceptron with ReLU between layers and a linear output.
struct Mlp {
  std::vector<Linear> layers;

  /// widths = {in, h1, ..., out}.
  static Mlp init(const std::vector<std::size_t>& widths, Rng& rng) {
    Mlp m;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
      m.layers.push_back(Linear::init(widths[i], widths[i + 1], rng));
    return m;
  }

  Tensor operator()(Tensor x) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i](x);
      if (i + 1 < layers.size()) x = relu(x);
    }
    return x;
  }

  NamedParameters named_parameters(const std::string& prefix) const {
    NamedParameters out;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      out.emplace_back(prefix + ".layer" + std::to_string(i) + ".weight", layers[i].weight);
      out.emplace_back(prefix + ".layer" + std::to_string(i) + ".bias", layers[i].bias);
    }
    return out;
  }
};

inline std::vector<Tensor> tensors_of(const NamedParameters& named) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : named) out.push_back(t);
  return out;
}

}  // namespace kriggraph
