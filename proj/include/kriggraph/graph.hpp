#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"
#include "random.hpp"

namespace kriggraph {

/// Kernel weights below this are not edges.
inline constexpr double kDefaultEdgeThreshold = 0.1;

/// Weighted undirected graph with thresholded adjacency and cached degree stats.
class Graph {
 public:
  Graph() = default;

  /// Validates symmetry and sign, zeroes off-diagonal weights below `threshold`.
  explicit Graph(Matrix adjacency, double threshold = kDefaultEdgeThreshold)
      : adjacency_(std::move(adjacency)), threshold_(threshold) {
    const std::size_t n = adjacency_.rows();
    if (adjacency_.cols() != n) throw ValidationError("Graph: adjacency must be square");
    if (!(threshold_ >= 0.0)) throw ValidationError("Graph: threshold must be nonnegative");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double a = adjacency_(i, j);
        if (!std::isfinite(a) || a < 0.0)
          throw ValidationError("Graph: adjacency entries must be finite and nonnegative");
        if (std::fabs(a - adjacency_(j, i)) > 1e-12)
          throw ValidationError("Graph: adjacency is not symmetric");
      }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && adjacency_(i, j) < threshold_) adjacency_(i, j) = 0.0;
    recompute();
  }

  std::size_t n_nodes() const { return adjacency_.rows(); }
  const Matrix& adjacency() const { return adjacency_; }
  double weight(std::size_t i, std::size_t j) const { return adjacency_(i, j); }
  double threshold() const { return threshold_; }

  bool has_edge(std::size_t i, std::size_t j) const { return i != j && adjacency_(i, j) > 0.0; }

  std::size_t degree(std::size_t i) const { return degree_[i]; }
  const std::vector<std::size_t>& degrees() const { return degree_; }
  double d_avg() const { return d_avg_; }
  double d_max() const { return d_max_; }
  std::size_t n_edges() const {
    std::size_t s = 0;
    for (auto d : degree_) s += d;
    return s / 2;
  }

  std::vector<std::size_t> neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n_nodes(); ++j)
      if (has_edge(i, j)) out.push_back(j);
    return out;
  }

  /// Removes (i, j) and (j, i); degree stats are refreshed.
  void remove_edge(std::size_t i, std::size_t j) {
    if (i == j) return;
    adjacency_(i, j) = 0.0;
    adjacency_(j, i) = 0.0;
    recompute();
  }

  bool operator==(const Graph& o) const {
    return adjacency_ == o.adjacency_ && threshold_ == o.threshold_;
  }

 private:
  void recompute() {
    const std::size_t n = n_nodes();
    degree_.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (has_edge(i, j)) ++degree_[i];
    d_max_ = 0.0;
    double total = 0.0;
    for (auto d : degree_) {
      total += static_cast<double>(d);
      d_max_ = std::max(d_max_, static_cast<double>(d));
    }
    d_avg_ = n ? total / static_cast<double>(n) : 0.0;
  }

  Matrix adjacency_;
  double threshold_ = kDefaultEdgeThreshold;
  std::vector<std::size_t> degree_;
  double d_avg_ = 0.0;
  double d_max_ = 0.0;
};

/// Standard deviation of the finite off-diagonal entries of a distance matrix.
inline double offdiagonal_std(const Matrix& dist) {
  double s = 0.0, s2 = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < dist.rows(); ++i)
    for (std::size_t j = 0; j < dist.cols(); ++j) {
      if (i == j || !std::isfinite(dist(i, j))) continue;
      s += dist(i, j);
      ++count;
    }
  if (count == 0) return 0.0;
  const double m = s / static_cast<double>(count);
  for (std::size_t i = 0; i < dist.rows(); ++i)
    for (std::size_t j = 0; j < dist.cols(); ++j) {
      if (i == j || !std::isfinite(dist(i, j))) continue;
      s2 += (dist(i, j) - m) * (dist(i, j) - m);
    }
  return std::sqrt(s2 / static_cast<double>(count));
}

/// Gaussian-kernel adjacency A_ij = exp(-(d_ij / sigma)^2). Infinite distances
/// mean "no path" and give weight 0. Without sigma, the off-diagonal distance
/// standard deviation is used.
inline Graph build_adjacency(const Matrix& dist, std::optional<double> sigma = std::nullopt,
                             double threshold = kDefaultEdgeThreshold) {
  const std::size_t n = dist.rows();
  if (dist.cols() != n) throw ValidationError("build_adjacency: distance matrix must be square");
  for (std::size_t i = 0; i < n; ++i) {
    if (dist(i, i) != 0.0) throw ValidationError("build_adjacency: nonzero diagonal distance");
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dist(i, j);
      if (std::isnan(d) || d < 0.0) throw ValidationError("build_adjacency: negative distance");
      if (d != dist(j, i) && std::fabs(d - dist(j, i)) > 1e-12)
        throw ValidationError("build_adjacency: asymmetric distances");
    }
  }
  const double s = sigma.value_or(offdiagonal_std(dist));
  if (!(s > 0.0) || !std::isfinite(s))
    throw ValidationError("build_adjacency: kernel width must be positive");
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dist(i, j);
      a(i, j) = std::isfinite(d) ? std::exp(-(d / s) * (d / s)) : 0.0;
    }
  return Graph(std::move(a), threshold);
}

/// Euclidean distance matrix from point coordinates.
inline Matrix euclidean_distances(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw ValidationError("euclidean_distances: coordinate mismatch");
  const std::size_t n = xs.size();
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d(i, j) = std::hypot(xs[i] - xs[j], ys[i] - ys[j]);
  return d;
}

using NeighborLists = std::vector<std::vector<std::size_t>>;

/// Up to k heaviest neighbors of each node, ties by smaller id; self excluded.
inline NeighborLists topk_neighbors(const Graph& g, std::size_t k) {
  if (k == 0) throw ValidationError("topk_neighbors: k must be >= 1");
  NeighborLists out(g.n_nodes());
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    auto nb = g.neighbors(i);
    std::stable_sort(nb.begin(), nb.end(), [&](std::size_t a, std::size_t b) {
      if (g.weight(i, a) != g.weight(i, b)) return g.weight(i, a) > g.weight(i, b);
      return a < b;
    });
    if (nb.size() > k) nb.resize(k);
    out[i] = std::move(nb);
  }
  return out;
}

inline void check_ids(std::span<const std::size_t> ids, std::size_t n, const char* who) {
  std::vector<char> seen(n, 0);
  for (auto id : ids) {
    if (id >= n) throw ValidationError(std::string(who) + ": id " + std::to_string(id) + " out of range");
    if (seen[id]) throw ValidationError(std::string(who) + ": duplicate id " + std::to_string(id));
    seen[id] = 1;
  }
}

/// Induced subgraph on `ids`, in the given order.
inline Graph subgraph(const Graph& g, std::span<const std::size_t> ids) {
  check_ids(ids, g.n_nodes(), "subgraph");
  Matrix a(ids.size(), ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r)
    for (std::size_t c = 0; c < ids.size(); ++c) a(r, c) = g.weight(ids[r], ids[c]);
  return Graph(std::move(a), g.threshold());
}

/// Rows `ids` of a matrix, in order.
inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> ids) {
  check_ids(ids, m.rows(), "select_rows");
  Matrix out(ids.size(), m.cols());
  for (std::size_t r = 0; r < ids.size(); ++r)
    std::copy(m.row(ids[r]).begin(), m.row(ids[r]).end(), out.row(r).begin());
  return out;
}

/// Global min-max scaler onto [0, 1].
struct MinMaxScaler {
  double min = 0.0;
  double max = 1.0;

  static MinMaxScaler fit(const Matrix& values) {
    if (values.empty()) throw ValidationError("MinMaxScaler: empty data");
    auto [lo, hi] = std::minmax_element(values.data().begin(), values.data().end());
    return {*lo, *hi};
  }
  double range() const { return max > min ? max - min : 1.0; }
  double transform(double x) const { return (x - min) / range(); }
  double inverse(double y) const { return y * range() + min; }

  Matrix transform(const Matrix& m) const {
    Matrix out = m;
    for (double& v : out.data()) v = transform(v);
    return out;
  }
  Matrix inverse(const Matrix& m) const {
    Matrix out = m;
    for (double& v : out.data()) v = inverse(v);
    return out;
  }
};

/// N x T node attribute series with identifiers.
struct SeriesMatrix {
  Matrix values;
  std::vector<std::string> node_ids;
  std::vector<std::string> timestamps;

  std::size_t n_nodes() const { return values.rows(); }
  std::size_t n_steps() const { return values.cols(); }
};

struct WindowSpec {
  std::size_t width = 24;
  std::size_t stride = 24;
};

/// Start offsets of each window: floor((T - w) / stride) + 1 of them.
inline std::vector<std::size_t> window_starts(std::size_t total, WindowSpec spec) {
  if (spec.width == 0 || spec.stride == 0) throw ValidationError("sliding_window: zero width or stride");
  if (spec.width > total)
    throw ValidationError("sliding_window: width " + std::to_string(spec.width) +
                          " exceeds series length " + std::to_string(total));
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + spec.width <= total; s += spec.stride) starts.push_back(s);
  return starts;
}

inline Matrix window_at(const Matrix& values, std::size_t start, std::size_t width) {
  Matrix w(values.rows(), width);
  for (std::size_t i = 0; i < values.rows(); ++i)
    for (std::size_t t = 0; t < width; ++t) w(i, t) = values(i, start + t);
  return w;
}

inline std::vector<Matrix> sliding_window(const Matrix& values, WindowSpec spec) {
  std::vector<Matrix> out;
  for (auto s : window_starts(values.cols(), spec)) out.push_back(window_at(values, s, spec.width));
  return out;
}

/// Observed / unobserved node partition.
struct SplitSpec {
  std::vector<std::size_t> observed;
  std::vector<std::size_t> unobserved;
  std::uint64_t seed = 0;
};

/// round(ratio * n) observed nodes drawn uniformly; both lists sorted.
inline SplitSpec split_nodes(std::size_t n, double observed_ratio, std::uint64_t seed) {
  if (!(observed_ratio > 0.0 && observed_ratio < 1.0))
    throw ValidationError("split_nodes: ratio must lie in (0, 1)");
  const auto n_obs = static_cast<std::size_t>(std::llround(observed_ratio * static_cast<double>(n)));
  if (n_obs == 0 || n_obs >= n)
    throw ValidationError("split_nodes: ratio leaves an empty partition for n=" + std::to_string(n));
  Rng rng(derive_seed(seed, {0x5b1u}));
  auto obs = sample_without_replacement(n, n_obs, rng);
  std::sort(obs.begin(), obs.end());
  SplitSpec s;
  s.seed = seed;
  s.observed = obs;
  std::vector<char> is_obs(n, 0);
  for (auto i : obs) is_obs[i] = 1;
  for (std::size_t i = 0; i < n; ++i)
    if (!is_obs[i]) s.unobserved.push_back(i);
  return s;
}

}  // namespace kriggraph
