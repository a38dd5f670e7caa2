#pragma once

// Evaluation harnesses: missing-entry robustness, observation-ratio sweep,
// the component ablation and a prototype co-membership diagnostic.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "baselines.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "pipeline.hpp"
#include "random.hpp"

namespace kriggraph {

inline const std::vector<double> kRobustnessRatios = {0.0, 0.05, 0.10, 0.20, 0.30};
inline const std::vector<double> kSweepRatios = {0.2, 0.5, 0.7};

/// Zeroes a fraction of the observed entries (scaled space) before kriging.
/// One permutation of the entries is drawn per seed and each ratio takes a
/// prefix of it, so larger ratios hide a superset of the smaller ones.
inline std::vector<EvalReport> robustness_eval(const ModelBundle& b, const Matrix& values,
                                               const Graph& g_full,
                                               std::span<const std::size_t> unobserved,
                                               std::span<const double> ratios, std::uint64_t seed) {
  for (double r : ratios)
    if (!(r >= 0.0 && r < 1.0)) throw ValidationError("robustness_eval: ratios must lie in [0, 1)");
  const std::size_t n = g_full.n_nodes();
  if (values.rows() != n) throw DimensionError("robustness_eval: series rows differ from graph size");
  check_ids(unobserved, n, "robustness_eval");

  std::vector<char> hidden(n, 0);
  for (auto u : unobserved) hidden[u] = 1;
  const std::size_t n_cols = window_starts(values.cols(), {b.window(), b.window()}).size() * b.window();
  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (std::size_t i = 0; i < n; ++i)
    if (!hidden[i])
      for (std::size_t t = 0; t < n_cols; ++t) entries.emplace_back(i, t);
  Rng rng(derive_seed(seed, {400}));
  std::shuffle(entries.begin(), entries.end(), rng);

  const Matrix clean = b.scaler.transform(values);
  std::vector<EvalReport> out;
  for (double r : ratios) {
    Matrix x = clean;
    const auto n_zero = static_cast<std::size_t>(std::floor(r * static_cast<double>(entries.size())));
    for (std::size_t e = 0; e < n_zero; ++e) x(entries[e].first, entries[e].second) = 0.0;
    const auto k = krige_scaled(b, std::move(x), g_full, unobserved);
    auto rep = evaluate(k.y_hat, truth_for(k, values));
    rep.meta = {{"missing_ratio", r}, {"zeroed_entries", n_zero}, {"seed", seed}};
    out.push_back(std::move(rep));
  }
  return out;
}

struct SweepRow {
  double unobserved_ratio = 0.0;
  EvalReport kcp, idw;
  double seconds = 0.0;
};

/// Full train + evaluate cycle per ratio of unobserved nodes.
inline std::vector<SweepRow> ratio_sweep(const Matrix& values, const Graph& g, std::span<const double> ratios,
                                         const TrainConfig& cfg) {
  std::vector<SweepRow> out;
  for (double r : ratios) {
    if (!(r > 0.0 && r < 1.0)) throw ValidationError("ratio_sweep: ratios must lie in (0, 1)");
    TrainConfig c = cfg;
    c.observed_ratio = 1.0 - r;
    const auto t0 = std::chrono::steady_clock::now();
    auto res = run_pipeline(values, g, c);
    SweepRow row;
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.unobserved_ratio = r;
    row.kcp = std::move(res.report);
    row.idw = idw_report(values, g, res.split, c.idw_k, res.prediction.y_hat.cols());
    row.kcp.meta["unobserved_ratio"] = r;
    row.idw.meta = row.kcp.meta;
    out.push_back(std::move(row));
  }
  return out;
}

struct AblationRow {
  std::string name;
  TrainConfig config;
  EvalReport report;
  std::vector<double> prediction;  // flattened, for determinism checks
};

struct AblationReport {
  std::vector<AblationRow> rows;  // "full" first
  std::vector<std::string> ranking;  // by MAE, best first
  std::string largest_degradation;  // variant with the highest MAE
};

inline std::vector<std::pair<std::string, TrainConfig>> ablation_variants(const TrainConfig& cfg) {
  std::vector<std::pair<std::string, TrainConfig>> v;
  v.emplace_back("full", cfg);
  auto without = [&](const char* name, bool TrainConfig::*flag) {
    TrainConfig c = cfg;
    c.*flag = false;
    v.emplace_back(name, c);
  };
  without("w/o PT", &TrainConfig::use_pretrain);
  without("w/o AA", &TrainConfig::use_adaptive_aug);
  without("w/o NC", &TrainConfig::use_contrast);
  without("w/o PH", &TrainConfig::use_prototype);
  return v;
}

inline AblationReport ablation(const Matrix& values, const Graph& g, const TrainConfig& cfg) {
  AblationReport rep;
  for (auto& [name, c] : ablation_variants(cfg)) {
    auto res = run_pipeline(values, g, c);
    AblationRow row{name, c, std::move(res.report), res.prediction.y_hat.data()};
    row.report.meta["variant"] = name;
    rep.rows.push_back(std::move(row));
  }
  std::vector<std::size_t> order(rep.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rep.rows[a].report.mae < rep.rows[b].report.mae; });
  for (auto i : order) rep.ranking.push_back(rep.rows[i].name);
  rep.largest_degradation = rep.ranking.back();
  return rep;
}

inline nlohmann::json to_json(const AblationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  const double base = r.rows.front().report.mae;
  for (const auto& row : r.rows)
    rows.push_back({{"variant", row.name},
                    {"mae", row.report.mae},
                    {"rmse", row.report.rmse},
                    {"mae_change", row.report.mae - base}});
  return {{"rows", rows}, {"ranking", r.ranking}, {"largest_degradation", r.largest_degradation}};
}

inline nlohmann::json to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows)
    out.push_back({{"unobserved_ratio", r.unobserved_ratio},
                   {"kcp", to_json(r.kcp)},
                   {"knn_idw", to_json(r.idw)},
                   {"seconds", r.seconds}});
  return out;
}

/// How often node pairs land on the same prototype (argmax of C), split by
/// whether the pair is adjacent. Counted over every window; `chance` is the
/// rate expected from the prototype sizes alone.
struct CoMembership {
  double neighbor_rate = 0.0;
  double non_neighbor_rate = 0.0;
  double chance = 0.0;
  std::size_t neighbor_pairs = 0;
  std::size_t non_neighbor_pairs = 0;
  std::size_t n_windows = 0;
  std::vector<std::size_t> prototype_sizes;  // node-window counts per prototype
};

inline CoMembership prototype_comembership(const ModelBundle& b, const Matrix& x_scaled, const Graph& g) {
  const std::size_t n = g.n_nodes(), w = b.window(), h = b.proto.n_prototypes();
  if (x_scaled.rows() != n) throw DimensionError("comembership: series rows differ from graph size");
  if (n < 2) throw ValidationError("comembership: needs at least two nodes");
  CoMembership out;
  out.prototype_sizes.assign(h, 0);
  std::size_t same_nb = 0, same_far = 0;
  double chance_sum = 0.0;
  const auto starts = window_starts(x_scaled.cols(), {w, w});
  out.n_windows = starts.size();
  for (auto s : starts) {
    const Matrix c = prototype_scores(encode(Tensor(window_at(x_scaled, s, w)), g, b.encoder), b.proto)
                         .scores.to_matrix();
    std::vector<std::size_t> label(n);
    std::vector<std::size_t> sizes(h, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = c.row(i);
      label[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      ++sizes[label[i]];
      ++out.prototype_sizes[label[i]];
    }
    double same_pairs = 0.0;
    for (auto k : sizes) same_pairs += double(k) * double(k - (k > 0)) / 2.0;
    chance_sum += same_pairs / (double(n) * double(n - 1) / 2.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const bool same = label[i] == label[j];
        if (g.has_edge(i, j)) {
          ++out.neighbor_pairs;
          same_nb += same;
        } else {
          ++out.non_neighbor_pairs;
          same_far += same;
        }
      }
  }
  if (out.neighbor_pairs) out.neighbor_rate = double(same_nb) / double(out.neighbor_pairs);
  if (out.non_neighbor_pairs) out.non_neighbor_rate = double(same_far) / double(out.non_neighbor_pairs);
  out.chance = chance_sum / double(starts.size());
  return out;
}

inline nlohmann::json to_json(const CoMembership& m) {
  return {{"neighbor_rate", m.neighbor_rate},   {"non_neighbor_rate", m.non_neighbor_rate},
          {"chance", m.chance},                 {"neighbor_pairs", m.neighbor_pairs},
          {"non_neighbor_pairs", m.non_neighbor_pairs}, {"n_windows", m.n_windows},
          {"prototype_sizes", m.prototype_sizes}};
}

}  // namespace kriggraph
