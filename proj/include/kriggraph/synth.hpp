#pragma once

// Spatially correlated synthetic series with ground truth on every node.
//
// Nodes are uniform in a square. Smooth scalar fields over the plane come
// from random Fourier features (a Gaussian-kernel process with the given
// length-scale). Each node's series is
//   y_i(t) = base(p_i) + sum_h amp_h(p_i) sin(2 pi t / P_h + phase_h(p_i)) + noise,
// so nearby nodes share levels, amplitudes and phases.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "random.hpp"

namespace kriggraph {

struct SynthConfig {
  std::size_t n_nodes = 60;
  double region = 10.0;        // side of the square
  double kernel_sigma = 1.5;   // adjacency kernel width
  double threshold = kDefaultEdgeThreshold;
  std::size_t t_total = 24 * 14;
  std::size_t n_harmonics = 3;
  double length_scale = 4.0;   // spatial smoothness of the fields
  double base_level = 20.0;
  double base_spread = 2.0;
  double amplitude = 3.0;
  double phase_spread = 1.0;   // radians per unit field value
  double noise_std = 0.5;
  std::uint64_t seed = 0;
  std::size_t max_retries = 200;
};

/// A smooth random field f(p) = sqrt(2/M) sum_m a_m cos(w_m . p + b_m).
struct FourierField {
  std::vector<double> wx, wy, b, a;

  static FourierField draw(double length_scale, std::size_t features, Rng& rng) {
    std::normal_distribution<double> freq(0.0, 1.0 / length_scale), unit(0.0, 1.0);
    FourierField f;
    for (std::size_t m = 0; m < features; ++m) {
      f.wx.push_back(freq(rng));
      f.wy.push_back(freq(rng));
      f.b.push_back(2.0 * std::numbers::pi * uniform01(rng));
      f.a.push_back(unit(rng));
    }
    return f;
  }

  double operator()(double x, double y) const {
    double s = 0.0;
    for (std::size_t m = 0; m < a.size(); ++m) s += a[m] * std::cos(wx[m] * x + wy[m] * y + b[m]);
    return s * std::sqrt(2.0 / static_cast<double>(a.size()));
  }
};

struct SynthFields {
  FourierField base;
  std::vector<FourierField> amplitude, phase;
  std::vector<double> periods;
};

inline SynthFields draw_fields(const SynthConfig& cfg, Rng& rng) {
  static constexpr double kPeriods[] = {24.0, 12.0, 168.0, 8.0, 6.0, 48.0};
  constexpr std::size_t kFeatures = 64;
  if (cfg.n_harmonics > std::size(kPeriods)) throw ValidationError("synth: at most 6 harmonics");
  SynthFields f;
  f.base = FourierField::draw(cfg.length_scale, kFeatures, rng);
  for (std::size_t h = 0; h < cfg.n_harmonics; ++h) {
    f.amplitude.push_back(FourierField::draw(cfg.length_scale, kFeatures, rng));
    f.phase.push_back(FourierField::draw(cfg.length_scale, kFeatures, rng));
    f.periods.push_back(kPeriods[h]);
  }
  return f;
}

/// Series at the given coordinates; harmonic h has weight 1 / (h + 1).
inline Matrix evaluate_fields(const SynthFields& f, const SynthConfig& cfg,
                              std::span<const double> xs, std::span<const double> ys, Rng& noise_rng) {
  const std::size_t n = xs.size();
  Matrix out(n, cfg.t_total);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double base = cfg.base_level + cfg.base_spread * f.base(xs[i], ys[i]);
    std::vector<double> amp, phase;
    for (std::size_t h = 0; h < f.periods.size(); ++h) {
      amp.push_back(cfg.amplitude / double(h + 1) * std::exp(0.3 * f.amplitude[h](xs[i], ys[i])));
      phase.push_back(cfg.phase_spread * f.phase[h](xs[i], ys[i]));
    }
    for (std::size_t t = 0; t < cfg.t_total; ++t) {
      double v = base;
      for (std::size_t h = 0; h < f.periods.size(); ++h)
        v += amp[h] * std::sin(2.0 * std::numbers::pi * double(t) / f.periods[h] + phase[h]);
      out(i, t) = v;
    }
  }
  if (cfg.noise_std > 0.0)
    for (double& v : out.data()) v += cfg.noise_std * noise(noise_rng);
  return out;
}

inline bool is_connected(const Graph& g) {
  const std::size_t n = g.n_nodes();
  if (n == 0) return true;
  std::vector<char> seen(n, 0);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!q.empty()) {
    const auto i = q.front();
    q.pop();
    for (auto j : g.neighbors(i))
      if (!seen[j]) {
        seen[j] = 1;
        ++count;
        q.push(j);
      }
  }
  return count == n;
}

struct SynthDataset {
  Graph graph;
  SeriesMatrix series;
  std::vector<double> xs, ys;
  Matrix distances;
};

inline SynthDataset generate(const SynthConfig& cfg) {
  if (cfg.n_nodes < 2 || cfg.t_total == 0 || !(cfg.region > 0.0) || !(cfg.kernel_sigma > 0.0) ||
      !(cfg.length_scale > 0.0) || !(cfg.noise_std >= 0.0))
    throw ValidationError("synth: invalid configuration");
  Rng layout_rng(derive_seed(cfg.seed, {1}));
  SynthDataset d;
  bool connected = false;
  for (std::size_t attempt = 0; attempt < cfg.max_retries && !connected; ++attempt) {
    d.xs.assign(cfg.n_nodes, 0.0);
    d.ys.assign(cfg.n_nodes, 0.0);
    for (std::size_t i = 0; i < cfg.n_nodes; ++i) {
      d.xs[i] = cfg.region * uniform01(layout_rng);
      d.ys[i] = cfg.region * uniform01(layout_rng);
    }
    d.distances = euclidean_distances(d.xs, d.ys);
    d.graph = build_adjacency(d.distances, cfg.kernel_sigma, cfg.threshold);
    connected = is_connected(d.graph);
  }
  if (!connected)
    throw GenerationError("synth: no connected layout after " + std::to_string(cfg.max_retries) +
                          " attempts");

  Rng field_rng(derive_seed(cfg.seed, {2}));
  Rng noise_rng(derive_seed(cfg.seed, {3}));
  const auto fields = draw_fields(cfg, field_rng);
  d.series.values = evaluate_fields(fields, cfg, d.xs, d.ys, noise_rng);
  for (std::size_t i = 0; i < cfg.n_nodes; ++i) d.series.node_ids.push_back("n" + std::to_string(i));
  for (std::size_t t = 0; t < cfg.t_total; ++t) d.series.timestamps.push_back(std::to_string(t));
  return d;
}

}  // namespace kriggraph
