#pragma once

// Brute-force graphon tools for checking the edge-drop perturbation bound
//   |t(F, W') - t(F, W)| <= (1 - lambda) e(F) ||W||_cut,  W' = (1 - Phi) .* W,
// on step graphons with n equal blocks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "matrix.hpp"

namespace kriggraph {

inline constexpr std::size_t kMaxMotifVertices = 5;
inline constexpr std::size_t kMaxGraphonBlocks = 12;

/// Small simple graph F whose homomorphism density is measured.
struct Motif {
  std::size_t n_vertices = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;

  std::size_t n_edges() const { return edges.size(); }

  static Motif edge() { return {2, {{0, 1}}}; }
  static Motif path2() { return {3, {{0, 1}, {1, 2}}}; }
  static Motif triangle() { return {3, {{0, 1}, {1, 2}, {2, 0}}}; }
  static Motif square() { return {4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}}; }
};

/// t(F, W) = n^{-|V(F)|} sum over all maps phi: V(F) -> [n] of prod W[phi(u)][phi(v)].
inline double homomorphism_density(const Motif& f, const Matrix& w) {
  const std::size_t n = w.rows();
  if (w.cols() != n) throw ValidationError("homomorphism_density: W must be square");
  if (f.n_vertices > kMaxMotifVertices || n > kMaxGraphonBlocks)
    throw CapacityError("homomorphism_density: limited to motifs of <= 5 vertices on n <= 12");
  if (n == 0) throw ValidationError("homomorphism_density: empty graphon");
  for (auto [u, v] : f.edges)
    if (u >= f.n_vertices || v >= f.n_vertices)
      throw ValidationError("homomorphism_density: motif edge out of range");

  std::vector<std::size_t> phi(f.n_vertices, 0);
  double total = 0.0;
  while (true) {
    double prod = 1.0;
    for (auto [u, v] : f.edges) prod *= w(phi[u], phi[v]);
    total += prod;
    std::size_t pos = 0;
    while (pos < phi.size() && ++phi[pos] == n) phi[pos++] = 0;
    if (pos == phi.size()) break;
  }
  return total / std::pow(static_cast<double>(n), static_cast<double>(f.n_vertices));
}

/// ||W||_cut = max over S, T of |sum_{i in S, j in T} W_ij| / n^2. Every S is
/// enumerated; for fixed S the optimal T collects either all positive or all
/// negative column sums, which is exact.
inline double cut_norm(const Matrix& w) {
  const std::size_t n = w.rows();
  if (w.cols() != n) throw ValidationError("cut_norm: W must be square");
  if (n > kMaxGraphonBlocks) throw CapacityError("cut_norm: limited to n <= 12");
  if (n == 0) return 0.0;
  double best = 0.0;
  std::vector<double> col(n);
  for (std::uint32_t s = 1; s < (1u << n); ++s) {
    std::fill(col.begin(), col.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (s & (1u << i))
        for (std::size_t j = 0; j < n; ++j) col[j] += w(i, j);
    double pos = 0.0, neg = 0.0;
    for (double c : col) (c > 0.0 ? pos : neg) += c;
    best = std::max({best, pos, -neg});
  }
  return best / static_cast<double>(n * n);
}

/// One instance of the bound: motif, base graphon and drop weights.
struct GraphonCase {
  Motif motif;
  Matrix w;    // symmetric, entries in [0, 1]
  Matrix phi;  // symmetric, entries in [0, 1]
};

struct MixupBoundReport {
  double t_base = 0.0;
  double t_dropped = 0.0;
  double lhs = 0.0;
  double cut_norm = 0.0;
  /// lambda as a product over every ordered entry (i, j) with Phi_ij != 0;
  /// identical to the product over all n^2 entries.
  double lambda = 1.0;
  double rhs = 0.0;
  bool holds = false;
  /// lambda over unordered pairs i <= j only (each symmetric pair once).
  double lambda_pairs = 1.0;
  double rhs_pairs = 0.0;
  bool holds_pairs = false;
};

inline constexpr double kBoundSlack = 1e-12;

inline MixupBoundReport verify_mixup_bound(const GraphonCase& c) {
  const std::size_t n = c.w.rows();
  if (c.phi.rows() != n || c.phi.cols() != n || c.w.cols() != n)
    throw DimensionError("verify_mixup_bound: W and Phi must be n x n");
  Matrix dropped(n, n);
  MixupBoundReport r;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double p = c.phi(i, j);
      if (p < 0.0 || p > 1.0) throw ValidationError("verify_mixup_bound: Phi outside [0, 1]");
      dropped(i, j) = (1.0 - p) * c.w(i, j);
      if (p != 0.0) {
        r.lambda *= 1.0 - p;
        if (i <= j) r.lambda_pairs *= 1.0 - p;
      }
    }
  r.t_base = homomorphism_density(c.motif, c.w);
  r.t_dropped = homomorphism_density(c.motif, dropped);
  r.lhs = std::fabs(r.t_dropped - r.t_base);
  r.cut_norm = cut_norm(c.w);
  const double e = static_cast<double>(c.motif.n_edges());
  r.rhs = (1.0 - r.lambda) * e * r.cut_norm;
  r.rhs_pairs = (1.0 - r.lambda_pairs) * e * r.cut_norm;
  r.holds = r.lhs <= r.rhs + kBoundSlack;
  r.holds_pairs = r.lhs <= r.rhs_pairs + kBoundSlack;
  return r;
}

}  // namespace kriggraph
