#pragma once

#include <string>

#include "graph.hpp"
#include "layers.hpp"
#include "tensor.hpp"

namespace kriggraph {

/// One mean-aggregation layer:
///   x_i' = ReLU(W [x_i, mean_{j in N(i)} (W^t x_j + b)]),
/// with the mean over thresholded neighbors (self excluded) and a zero
/// aggregate for isolated nodes.
struct SageLayerParams {
  Tensor weight;           // (d_in + hidden) x d_out
  Tensor neighbor_weight;  // d_in x hidden   (W^t)
  Tensor neighbor_bias;    // 1 x hidden      (b)

  static SageLayerParams init(std::size_t d_in, std::size_t hidden, std::size_t d_out, Rng& rng) {
    return {glorot(d_in + hidden, d_out, rng), glorot(d_in, hidden, rng), zeros_parameter(1, hidden)};
  }

  std::size_t in_width() const { return neighbor_weight.rows(); }
  std::size_t hidden_width() const { return neighbor_weight.cols(); }
  std::size_t out_width() const { return weight.cols(); }

  NamedParameters named_parameters(const std::string& prefix) const {
    return {{prefix + ".weight", weight},
            {prefix + ".neighbor_weight", neighbor_weight},
            {prefix + ".neighbor_bias", neighbor_bias}};
  }
};

/// Row-normalized neighbor indicator: M_ij = 1 / deg(i) for every edge (i, j).
inline Matrix neighbor_mean_operator(const Graph& g) {
  const std::size_t n = g.n_nodes();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (g.degree(i) == 0) continue;
    const double w = 1.0 / static_cast<double>(g.degree(i));
    for (std::size_t j = 0; j < n; ++j)
      if (g.has_edge(j, i)) m(i, j) = w;
  }
  return m;
}

inline Tensor sage_layer(const Tensor& x, const Matrix& mean_op, const SageLayerParams& p) {
  if (x.cols() != p.in_width())
    throw DimensionError("sage_layer: input width " + std::to_string(x.cols()) + " != " +
                         std::to_string(p.in_width()));
  if (p.weight.rows() != p.in_width() + p.hidden_width())
    throw DimensionError("sage_layer: projection rows must equal d_in + hidden");
  if (mean_op.rows() != x.rows() || mean_op.cols() != x.rows())
    throw DimensionError("sage_layer: graph size does not match input rows");
  const Tensor messages = add(matmul(x, p.neighbor_weight), p.neighbor_bias);
  const Tensor aggregate = matmul(Tensor(mean_op), messages);
  return relu(matmul(concat_cols(x, aggregate), p.weight));
}

inline Tensor sage_layer(const Tensor& x, const Graph& g, const SageLayerParams& p) {
  return sage_layer(x, neighbor_mean_operator(g), p);
}

/// Two stacked aggregation layers producing N x E node representations.
struct EncoderParams {
  SageLayerParams first;
  SageLayerParams second;

  static EncoderParams init(std::size_t d_in, std::size_t hidden, std::size_t embed, Rng& rng) {
    auto l1 = SageLayerParams::init(d_in, hidden, hidden, rng);
    auto l2 = SageLayerParams::init(hidden, hidden, embed, rng);
    return {std::move(l1), std::move(l2)};
  }

  std::size_t embed_width() const { return second.out_width(); }

  NamedParameters named_parameters() const {
    auto out = first.named_parameters("encoder.layer0");
    auto more = second.named_parameters("encoder.layer1");
    out.insert(out.end(), more.begin(), more.end());
    return out;
  }
};

inline Tensor encode(const Tensor& x, const Graph& g, const EncoderParams& p) {
  const Matrix mean_op = neighbor_mean_operator(g);
  return sage_layer(sage_layer(x, mean_op, p.first), mean_op, p.second);
}

}  // namespace kriggraph
