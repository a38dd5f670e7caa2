#pragma once

// Self-supervised objectives over two encoded views.
//
// Neighboring contrast: each anchor's representation r_i is pulled towards an
// attention-weighted readout z_i of its top-k neighbors in the other view and
// pushed away from readouts of randomly drawn other nodes.
//
// Prototypical head: scores c_i = r_i H are softmaxed into p_i, Sinkhorn turns
// the same scores into balanced soft assignments q_i, and each view's q
// supervises the other view's p.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"
#include "layers.hpp"
#include "random.hpp"
#include "tensor.hpp"

namespace kriggraph {

/// Attention scoring vector and readout projection.
struct ContrastParams {
  Tensor score;    // E x 1   (W_1 as a linear functional)
  Tensor readout;  // E x E   (W_2)
  std::size_t k = 5;
  std::size_t n_negatives = 5;

  static ContrastParams init(std::size_t embed, std::size_t k, std::size_t n_negatives, Rng& rng) {
    return {glorot(embed, 1, rng), glorot(embed, embed, rng), k, n_negatives};
  }
  NamedParameters named_parameters() const {
    return {{"contrast.score", score}, {"contrast.readout", readout}};
  }
};

struct Readout {
  Tensor z;                          // N x E, zero rows for nodes without neighbors
  Tensor alpha;                      // N x N attention, rows sum to 1 over N_k(i)
  std::vector<std::size_t> anchors;  // nodes with at least one neighbor
};

/// z_i = W_2 (sum_{j in N_k(i)} alpha_ij r_j), alpha_i = softmax over N_k(i) of w_1 . r_j.
inline Readout attention_readout(const Tensor& r, const NeighborLists& neighbors,
                                 const ContrastParams& p) {
  const std::size_t n = r.rows();
  if (neighbors.size() != n) throw DimensionError("attention_readout: neighbor list size mismatch");
  Matrix mask(n, n);
  Readout out;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : neighbors[i]) mask(i, j) = 1.0;
    if (!neighbors[i].empty()) out.anchors.push_back(i);
  }
  if (out.anchors.empty()) throw LossUndefinedError("attention_readout: every node is isolated");
  const Tensor scores = matmul(r, p.score);                         // N x 1
  const Tensor logits = matmul(Tensor(n, 1, 1.0), transpose(scores));  // row i = scores^T
  out.alpha = masked_softmax_rows(logits, mask);
  out.z = matmul(matmul(out.alpha, r), p.readout);
  return out;
}

/// Noise-contrastive loss
///   -1/|A| sum_i [log s(cos(r_i, z_i)) + mean_w log(1 - s(cos(r_i, z_w)))]
/// over anchors A, with n_negatives readouts z_w (w != i) drawn uniformly from A.
inline Tensor nce_loss(const Tensor& r, const Tensor& z, const std::vector<std::size_t>& anchors,
                       std::size_t n_negatives, std::uint64_t seed) {
  if (anchors.empty()) throw LossUndefinedError("nce_loss: no anchors");
  if (r.rows() != z.rows() || r.cols() != z.cols()) throw DimensionError("nce_loss: R and Z differ");
  const double n_anchor = static_cast<double>(anchors.size());
  const Tensor pos = cosine_rows(gather_rows(r, anchors), gather_rows(z, anchors));
  Tensor total = sum(log(sigmoid(pos)));

  if (anchors.size() > 1 && n_negatives > 0) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, anchors.size() - 2);
    std::vector<std::size_t> rep, neg;
    for (std::size_t a = 0; a < anchors.size(); ++a)
      for (std::size_t s = 0; s < n_negatives; ++s) {
        std::size_t b = pick(rng);
        if (b >= a) ++b;  // uniform over the other anchors
        rep.push_back(anchors[a]);
        neg.push_back(anchors[b]);
      }
    const Tensor negc = cosine_rows(gather_rows(r, rep), gather_rows(z, neg));
    total = add(total, scale(sum(log(sigmoid(scale(negc, -1.0)))), 1.0 / double(n_negatives)));
  }
  return scale(total, -1.0 / n_anchor);
}

/// Learnable E x H projection onto prototype scores.
struct PrototypeParams {
  Tensor head;
  double sinkhorn_eps = 0.05;
  std::size_t sinkhorn_iters = 3;

  static PrototypeParams init(std::size_t embed, std::size_t n_prototypes, Rng& rng) {
    if (n_prototypes < 2) throw ValidationError("PrototypeParams: need at least 2 prototypes");
    return {glorot(embed, n_prototypes, rng)};
  }
  std::size_t n_prototypes() const { return head.cols(); }
  NamedParameters named_parameters() const { return {{"prototype.head", head}}; }
};

struct PrototypeScores {
  Tensor scores;  // C, N x H
  Tensor probs;   // P, row softmax of C
};

inline PrototypeScores prototype_scores(const Tensor& r, const PrototypeParams& p) {
  PrototypeScores out;
  out.scores = matmul(r, p.head);
  out.probs = softmax_rows(out.scores);
  return out;
}

struct SinkhornConfig {
  double eps = 0.05;
  std::size_t iters = 3;  // upper bound when tol > 0
  double tol = 0.0;       // stop once every column mass is within tol of N/H (checked every 16)
};

/// Balanced soft assignment Q from scores C (no gradient). Each iteration
/// rescales columns to mass N/H, then rows to mass 1; computed in log space
/// on the kernel exp(C / eps).
inline Matrix assign_prototypes(const Matrix& c, SinkhornConfig cfg) {
  const std::size_t n = c.rows(), h = c.cols();
  if (!(cfg.eps > 0.0) || cfg.iters < 1 || !(cfg.tol >= 0.0))
    throw ValidationError("assign_prototypes: need eps > 0 and at least one iteration");
  if (n == 0 || h == 0) throw ValidationError("assign_prototypes: empty score matrix");
  for (double v : c.data())
    if (!std::isfinite(v)) throw ValidationError("assign_prototypes: non-finite score");

  auto lse = [](const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
  };

  Matrix logk(n, h);
  for (std::size_t i = 0; i < c.size(); ++i) logk.data()[i] = c.data()[i] / cfg.eps;
  std::vector<double> log_u(n, 0.0), log_v(h, 0.0), buf;
  const double log_col_mass = std::log(static_cast<double>(n) / static_cast<double>(h));
  for (std::size_t it = 0; it < cfg.iters; ++it) {
    buf.resize(n);
    for (std::size_t j = 0; j < h; ++j) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = logk(i, j) + log_u[i];
      log_v[j] = log_col_mass - lse(buf);
    }
    buf.resize(h);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < h; ++j) buf[j] = logk(i, j) + log_v[j];
      log_u[i] = -lse(buf);
    }
    if (cfg.tol > 0.0 && (it % 16 == 15 || it + 1 == cfg.iters)) {
      double worst = 0.0;
      for (std::size_t j = 0; j < h; ++j) {
        double mass = 0.0;
        for (std::size_t i = 0; i < n; ++i) mass += std::exp(logk(i, j) + log_u[i] + log_v[j]);
        worst = std::max(worst, std::fabs(mass - std::exp(log_col_mass)));
      }
      if (worst <= cfg.tol) break;
    }
  }
  Matrix q(n, h);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < h; ++j) q(i, j) = std::exp(logk(i, j) + log_u[i] + log_v[j]);
  return q;
}

struct SwappedPrediction {
  Tensor loss;
  Matrix q;        // assignments from the canonical scores
  Matrix q_tilde;  // assignments from the augmented scores
};

/// L_P = -1/N sum_i sum_h [q~_ih log p_ih + q_ih log p~_ih]. Q and Q~ are
/// constants; pass them to reuse a frozen target (gradient checks).
inline SwappedPrediction swapped_prediction_loss(const Tensor& c, const Tensor& c_tilde,
                                                 SinkhornConfig cfg,
                                                 const Matrix* frozen_q = nullptr,
                                                 const Matrix* frozen_q_tilde = nullptr) {
  if (c.rows() != c_tilde.rows() || c.cols() != c_tilde.cols())
    throw DimensionError("swapped_prediction_loss: score shapes differ");
  if (c.rows() == 0) throw LossUndefinedError("swapped_prediction_loss: no nodes");
  SwappedPrediction out;
  out.q = frozen_q ? *frozen_q : assign_prototypes(c.to_matrix(), cfg);
  out.q_tilde = frozen_q_tilde ? *frozen_q_tilde : assign_prototypes(c_tilde.to_matrix(), cfg);
  const Tensor cross = add(sum(mul(Tensor(out.q_tilde), log_softmax_rows(c))),
                           sum(mul(Tensor(out.q), log_softmax_rows(c_tilde))));
  out.loss = scale(cross, -1.0 / static_cast<double>(c.rows()));
  return out;
}

/// Which objectives participate (ablations switch them off).
struct ObjectiveFlags {
  bool contrast = true;
  bool prototype = true;
};

struct SslLoss {
  Tensor total;
  double contrast = 0.0;   // L_N
  double prototype = 0.0;  // L_P
};

/// Inputs for one evaluation of L_SSL = L_N + L_P.
struct ViewPair {
  Tensor r;        // canonical representations
  Tensor r_tilde;  // augmented representations
  NeighborLists neighbors;
  NeighborLists neighbors_tilde;
};

/// Contrast runs in both directions (canonical anchors vs augmented readouts
/// and vice versa) and the two terms are averaged.
inline SslLoss ssl_loss(const ViewPair& views, const ContrastParams& contrast,
                        const PrototypeParams& proto, std::uint64_t seed,
                        ObjectiveFlags flags = {}, const Matrix* frozen_q = nullptr,
                        const Matrix* frozen_q_tilde = nullptr) {
  SslLoss out;
  out.total = Tensor::scalar(0.0);
  if (flags.contrast) {
    const Readout z = attention_readout(views.r, views.neighbors, contrast);
    const Readout z_tilde = attention_readout(views.r_tilde, views.neighbors_tilde, contrast);
    const Tensor forward =
        nce_loss(views.r, z_tilde.z, z_tilde.anchors, contrast.n_negatives, derive_seed(seed, {11}));
    const Tensor reverse =
        nce_loss(views.r_tilde, z.z, z.anchors, contrast.n_negatives, derive_seed(seed, {12}));
    const Tensor ln = scale(add(forward, reverse), 0.5);
    out.contrast = ln.item();
    out.total = add(out.total, ln);
  }
  if (flags.prototype) {
    const auto s = prototype_scores(views.r, proto);
    const auto s_tilde = prototype_scores(views.r_tilde, proto);
    const auto lp = swapped_prediction_loss(s.scores, s_tilde.scores,
                                            {proto.sinkhorn_eps, proto.sinkhorn_iters}, frozen_q,
                                            frozen_q_tilde);
    out.prototype = lp.loss.item();
    out.total = add(out.total, lp.loss);
  }
  return out;
}

}  // namespace kriggraph
