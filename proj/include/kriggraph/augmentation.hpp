#pragma once

// Adaptive view corruption. A sample of nodes is picked; each picked node
// either keeps a partially masked series (feature mask) or is blanked
// entirely (node mask), the choice coming from a small perceptron through a
// straight-through Gumbel-Softmax. Edges around picked nodes of above-average
// degree are then dropped with probability max((D_ii - d_avg) / d_max, 0).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "layers.hpp"
#include "random.hpp"
#include "tensor.hpp"

namespace kriggraph {

enum class MaskChoice : int { kFeatureMask = 0, kNodeMask = 1 };

/// Three-layer perceptron from a node series to two choice logits.
struct SelectorNet {
  Mlp mlp;

  static SelectorNet init(std::size_t series_len, std::size_t hidden, Rng& rng) {
    return {Mlp::init({series_len, hidden, hidden, 2}, rng)};
  }
  Tensor logits(const Tensor& x) const { return mlp(x); }
  NamedParameters named_parameters() const { return mlp.named_parameters("selector"); }
};

struct SelectorOutput {
  std::vector<MaskChoice> hard;  // argmax of perturbed log-probabilities
  Tensor soft;                   // n x 2 tempered softmax
  Tensor straight_through;       // one-hot(hard) forward, d(soft) backward
};

/// n x 2 i.i.d. Gumbel(0, 1) noise.
inline Matrix sample_gumbel_noise(std::size_t n, Rng& rng) {
  Matrix g(n, 2);
  for (double& v : g.data()) v = gumbel(rng);
  return g;
}

/// Gumbel-Softmax choice for each row of x (n x T) under fixed noise.
inline SelectorOutput selector_forward(const SelectorNet& net, const Tensor& x, double tau,
                                       const Matrix& noise) {
  if (!(tau > 0.0)) throw ValidationError("selector_forward: temperature must be positive");
  if (noise.rows() != x.rows() || noise.cols() != 2)
    throw DimensionError("selector_forward: noise must be n x 2");
  const Tensor log_pi = log_softmax_rows(net.logits(x));
  const Tensor perturbed = add(log_pi, Tensor(noise));
  SelectorOutput out;
  out.soft = softmax_rows(scale(perturbed, 1.0 / tau));
  Matrix onehot(x.rows(), 2);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const bool node_mask = perturbed(i, 1) > perturbed(i, 0);
    out.hard.push_back(node_mask ? MaskChoice::kNodeMask : MaskChoice::kFeatureMask);
    onehot(i, node_mask ? 1 : 0) = 1.0;
  }
  // soft - soft is exactly zero, so the forward value is exactly one-hot.
  out.straight_through = add(Tensor(onehot), sub(out.soft, out.soft.detach()));
  return out;
}

struct MaskedSeries {
  std::vector<double> values;
  std::vector<char> mask;  // 1 where zeroed
};

/// Zeroes round(r_m * T) uniformly chosen positions.
inline MaskedSeries feature_mask(std::span<const double> x, double mask_ratio, Rng& rng) {
  if (!(mask_ratio > 0.0 && mask_ratio <= 1.0))
    throw ValidationError("feature_mask: ratio must lie in (0, 1]");
  const auto count =
      static_cast<std::size_t>(std::llround(mask_ratio * static_cast<double>(x.size())));
  MaskedSeries out{{x.begin(), x.end()}, std::vector<char>(x.size(), 0)};
  for (auto t : sample_without_replacement(x.size(), count, rng)) {
    out.values[t] = 0.0;
    out.mask[t] = 1;
  }
  return out;
}

inline std::vector<double> node_mask(std::span<const double> x) {
  return std::vector<double>(x.size(), 0.0);
}

/// Per-node edge-drop probability rho_i = max((D_ii - d_avg) / d_max, 0).
inline std::vector<double> edge_drop_probs(std::span<const std::size_t> degrees) {
  double total = 0.0, d_max = 0.0;
  for (auto d : degrees) {
    total += static_cast<double>(d);
    d_max = std::max(d_max, static_cast<double>(d));
  }
  if (d_max <= 0.0) throw ValidationError("edge_drop_probs: graph has no edges");
  const double d_avg = total / static_cast<double>(degrees.size());
  std::vector<double> rho(degrees.size());
  for (std::size_t i = 0; i < degrees.size(); ++i)
    rho[i] = std::max((static_cast<double>(degrees[i]) - d_avg) / d_max, 0.0);
  return rho;
}

inline std::vector<double> edge_drop_probs(const Graph& g) { return edge_drop_probs(g.degrees()); }

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

/// Independently removes each edge incident to a selected node i with
/// probability rho[i]. Removal is symmetric.
inline std::pair<Graph, EdgeList> apply_edge_drop(const Graph& g, std::span<const double> rho,
                                                  std::span<const std::size_t> selected, Rng& rng) {
  if (rho.size() != g.n_nodes()) throw DimensionError("apply_edge_drop: rho length mismatch");
  Graph out = g;
  EdgeList dropped;
  for (auto i : selected) {
    if (rho[i] <= 0.0) continue;
    for (auto j : out.neighbors(i)) {
      if (uniform01(rng) < rho[i]) {
        out.remove_edge(i, j);
        dropped.emplace_back(std::min(i, j), std::max(i, j));
      }
    }
  }
  return {std::move(out), std::move(dropped)};
}

struct AugmentConfig {
  std::size_t n_select = 0;
  double mask_ratio = 0.25;  // r_m
  double tau = 0.5;
  /// Use the hard choice in the forward pass; false propagates the soft
  /// vector forward too (gradient checking only).
  bool straight_through = true;
  /// Bypass the selector and apply this choice to every selected node.
  std::optional<MaskChoice> forced_choice;
  bool edge_drop = true;
};

struct AugmentedView {
  Tensor series;  // N x T, differentiable w.r.t. selector parameters
  Graph graph;
  std::vector<std::size_t> selected;
  std::vector<std::vector<char>> feature_masks;  // per node, empty if untouched
  std::vector<char> node_mask_flags;
  EdgeList dropped_edges;
  Tensor selector_soft;  // n_select x 2, empty when the choice is forced
  std::vector<MaskChoice> choices;
};

/// Corrupts (x, g): selects nodes, masks their series, then drops edges.
inline AugmentedView augment(const Graph& g, const Matrix& x, const SelectorNet* net,
                             const AugmentConfig& cfg, std::uint64_t seed) {
  const std::size_t n = x.rows(), len = x.cols();
  if (g.n_nodes() != n) throw DimensionError("augment: graph and series node counts differ");
  if (cfg.n_select > n) throw ValidationError("augment: n_select exceeds node count");
  if (!cfg.forced_choice && !net) throw ValidationError("augment: selector required");

  Rng pick_rng(derive_seed(seed, {1}));
  Rng noise_rng(derive_seed(seed, {2}));
  Rng mask_rng(derive_seed(seed, {3}));
  Rng drop_rng(derive_seed(seed, {4}));

  AugmentedView view;
  view.selected = sample_without_replacement(n, cfg.n_select, pick_rng);
  view.feature_masks.assign(n, {});
  view.node_mask_flags.assign(n, 0);

  Matrix base = x;
  for (auto i : view.selected) {
    auto fm = feature_mask(x.row(i), cfg.mask_ratio, mask_rng);
    std::copy(fm.values.begin(), fm.values.end(), base.row(i).begin());
    view.feature_masks[i] = std::move(fm.mask);
  }

  // gate_i = 1 for untouched rows; for selected rows it is the feature-mask
  // component of the (straight-through) selector output.
  Matrix keep(n, 1, 1.0);
  for (auto i : view.selected) keep(i, 0) = 0.0;
  Tensor gate(keep);
  const std::size_t k = view.selected.size();
  if (k > 0) {
    Tensor choice0;
    if (cfg.forced_choice) {
      Matrix c(k, 1, *cfg.forced_choice == MaskChoice::kFeatureMask ? 1.0 : 0.0);
      choice0 = Tensor(c);
      view.choices.assign(k, *cfg.forced_choice);
    } else {
      const Tensor xs = gather_rows(Tensor(x), view.selected);
      auto sel = selector_forward(*net, xs, cfg.tau, sample_gumbel_noise(k, noise_rng));
      view.selector_soft = sel.soft;
      view.choices = sel.hard;
      choice0 = slice_cols(cfg.straight_through ? sel.straight_through : sel.soft, 0, 1);
    }
    Matrix scatter(n, k);
    for (std::size_t r = 0; r < k; ++r) scatter(view.selected[r], r) = 1.0;
    gate = add(gate, matmul(Tensor(scatter), choice0));
    for (std::size_t r = 0; r < k; ++r) {
      if (view.choices[r] == MaskChoice::kNodeMask) {
        const auto i = view.selected[r];
        view.node_mask_flags[i] = 1;
        view.feature_masks[i].assign(len, 1);
      }
    }
  }
  view.series = mul(Tensor(base), gate);

  if (cfg.edge_drop && k > 0 && g.d_max() > 0.0) {
    const auto rho = edge_drop_probs(g);
    auto [dropped_graph, dropped] = apply_edge_drop(g, rho, view.selected, drop_rng);
    view.graph = std::move(dropped_graph);
    view.dropped_edges = std::move(dropped);
  } else {
    view.graph = g;
  }
  return view;
}

}  // namespace kriggraph
