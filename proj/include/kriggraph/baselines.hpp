#pragma once

// Reference interpolator and evaluation metrics.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "graph.hpp"

namespace kriggraph {

struct EvalReport {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // fraction, not percent
  std::size_t n_entries = 0;
  std::size_t skipped_mape_entries = 0;
  std::vector<double> node_mae, node_rmse, node_mape;
  nlohmann::json meta = nlohmann::json::object();
};

inline constexpr double kMapeFloor = 1e-6;

/// MAE, RMSE and MAPE over all entries plus per-row values. MAPE skips
/// entries whose truth is below `mape_floor` and counts them.
inline EvalReport evaluate(const Matrix& y_hat, const Matrix& y, double mape_floor = kMapeFloor) {
  if (y.empty()) throw ValidationError("evaluate: empty input");
  if (y_hat.rows() != y.rows() || y_hat.cols() != y.cols())
    throw DimensionError("evaluate: prediction and truth shapes differ");
  EvalReport r;
  r.n_entries = y.size();
  double abs_sum = 0.0, sq_sum = 0.0, pct_sum = 0.0;
  std::size_t pct_count = 0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double a = 0.0, s = 0.0, p = 0.0;
    std::size_t pc = 0;
    for (std::size_t t = 0; t < y.cols(); ++t) {
      const double e = y_hat(i, t) - y(i, t);
      a += std::fabs(e);
      s += e * e;
      if (y(i, t) >= mape_floor) {
        p += std::fabs(e) / y(i, t);
        ++pc;
      }
    }
    abs_sum += a;
    sq_sum += s;
    pct_sum += p;
    pct_count += pc;
    r.skipped_mape_entries += y.cols() - pc;
    const double c = static_cast<double>(y.cols());
    r.node_mae.push_back(a / c);
    r.node_rmse.push_back(std::sqrt(s / c));
    r.node_mape.push_back(pc ? p / static_cast<double>(pc) : std::numeric_limits<double>::quiet_NaN());
  }
  const double n = static_cast<double>(r.n_entries);
  r.mae = abs_sum / n;
  r.rmse = std::sqrt(sq_sum / n);
  r.mape = pct_count ? pct_sum / static_cast<double>(pct_count)
                     : std::numeric_limits<double>::quiet_NaN();
  return r;
}

struct IdwResult {
  Matrix y_hat;               // N_u x T
  std::vector<char> fallback;  // 1 where no weighted neighbor existed
};

/// y_u(t) = sum_{i in top-k observed} A_ui x_i(t) / sum A_ui. Nodes with no
/// observed neighbor above threshold get the global observed mean.
inline IdwResult knn_idw(const Matrix& x, const Graph& g, std::span<const std::size_t> observed,
                         std::span<const std::size_t> unobserved, std::size_t k) {
  if (k == 0) throw ValidationError("knn_idw: k must be >= 1");
  if (x.rows() != g.n_nodes()) throw DimensionError("knn_idw: series rows differ from graph size");
  check_ids(observed, g.n_nodes(), "knn_idw");
  check_ids(unobserved, g.n_nodes(), "knn_idw");
  if (observed.empty()) throw ValidationError("knn_idw: no observed nodes");
  const std::size_t t_len = x.cols();

  double global = 0.0;
  for (auto i : observed)
    for (double v : x.row(i)) global += v;
  global /= static_cast<double>(observed.size() * t_len);

  IdwResult out{Matrix(unobserved.size(), t_len), std::vector<char>(unobserved.size(), 0)};
  for (std::size_t r = 0; r < unobserved.size(); ++r) {
    const auto u = unobserved[r];
    std::vector<std::size_t> cand;
    for (auto i : observed)
      if (i != u && g.weight(u, i) > 0.0) cand.push_back(i);
    std::stable_sort(cand.begin(), cand.end(), [&](std::size_t a, std::size_t b) {
      if (g.weight(u, a) != g.weight(u, b)) return g.weight(u, a) > g.weight(u, b);
      return a < b;
    });
    if (cand.size() > k) cand.resize(k);
    if (cand.empty()) {
      out.fallback[r] = 1;
      for (std::size_t t = 0; t < t_len; ++t) out.y_hat(r, t) = global;
      continue;
    }
    double wsum = 0.0;
    for (auto i : cand) wsum += g.weight(u, i);
    for (std::size_t t = 0; t < t_len; ++t) {
      double s = 0.0;
      for (auto i : cand) s += g.weight(u, i) * x(i, t);
      out.y_hat(r, t) = s / wsum;
    }
  }
  return out;
}

inline nlohmann::json to_json(const EvalReport& r) {
  return {{"mae", r.mae},
          {"rmse", r.rmse},
          {"mape", std::isfinite(r.mape) ? nlohmann::json(r.mape) : nlohmann::json(nullptr)},
          {"n_entries", r.n_entries},
          {"skipped_mape_entries", r.skipped_mape_entries},
          {"meta", r.meta}};
}

}  // namespace kriggraph
