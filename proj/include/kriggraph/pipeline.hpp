#pragma once

// Pretraining, finetuning and inductive kriging.
//
// Training sees only the observed subgraph. Pretraining minimizes the
// self-supervised loss between each window and an augmented copy of it.
// Finetuning hides a random subset of observed nodes (node masks, no edge
// drop) and fits a decoder to recover their windows under MAE; the
// self-supervised heads stay frozen. Kriging runs the encoder on the full
// graph with unobserved rows zero-filled and decodes those rows.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "augmentation.hpp"
#include "baselines.hpp"
#include "checkpoint.hpp"
#include "config.hpp"
#include "encoder.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "layers.hpp"
#include "ssl.hpp"

namespace kriggraph {

struct ModelBundle {
  TrainConfig config;
  EncoderParams encoder;
  SelectorNet selector;
  ContrastParams contrast;
  PrototypeParams proto;
  Mlp decoder;  // E -> decoder_hidden -> decoder_hidden -> window
  MinMaxScaler scaler;

  static ModelBundle init(const TrainConfig& cfg) {
    validate(cfg);
    Rng rng(derive_seed(cfg.seed, {100}));
    ModelBundle b;
    b.config = cfg;
    b.encoder = EncoderParams::init(cfg.window, cfg.hidden, cfg.embed, rng);
    b.selector = SelectorNet::init(cfg.window, cfg.selector_hidden, rng);
    b.contrast = ContrastParams::init(cfg.embed, cfg.k, cfg.n_neg, rng);
    b.proto = PrototypeParams::init(cfg.embed, cfg.n_prototypes, rng);
    b.proto.sinkhorn_eps = cfg.sinkhorn_eps;
    b.proto.sinkhorn_iters = cfg.sinkhorn_iters;
    b.decoder = Mlp::init({cfg.embed, cfg.decoder_hidden, cfg.decoder_hidden, cfg.window}, rng);
    return b;
  }

  std::size_t window() const { return config.window; }

  NamedParameters pretrain_parameters() const {
    NamedParameters out = encoder.named_parameters();
    auto add = [&](const NamedParameters& more) { out.insert(out.end(), more.begin(), more.end()); };
    if (config.use_adaptive_aug) add(selector.named_parameters());
    add(contrast.named_parameters());
    add(proto.named_parameters());
    return out;
  }

  NamedParameters finetune_parameters() const {
    NamedParameters out = encoder.named_parameters();
    auto dec = decoder.named_parameters("decoder");
    out.insert(out.end(), dec.begin(), dec.end());
    return out;
  }

  NamedParameters named_parameters() const {
    NamedParameters out = encoder.named_parameters();
    for (auto& p : selector.named_parameters()) out.push_back(p);
    for (auto& p : contrast.named_parameters()) out.push_back(p);
    for (auto& p : proto.named_parameters()) out.push_back(p);
    for (auto& p : decoder.named_parameters("decoder")) out.push_back(p);
    return out;
  }
};

inline Checkpoint to_checkpoint(const ModelBundle& b) {
  Checkpoint c;
  for (const auto& [name, t] : b.named_parameters()) c.tensors.push_back({name, t.to_matrix()});
  c.metadata = {{"config", to_json(b.config)},
                {"scaler", {{"min", b.scaler.min}, {"max", b.scaler.max}}}};
  return c;
}

/// Rebuilds a bundle from a checkpoint. If `expected` differs from the stored
/// configuration a warning is appended; the stored configuration and
/// parameters are used.
inline ModelBundle from_checkpoint(const Checkpoint& c, const TrainConfig* expected = nullptr,
                                   std::vector<std::string>* warnings = nullptr) {
  if (!c.metadata.contains("config") || !c.metadata.contains("scaler"))
    throw IntegrityError("checkpoint: metadata lacks config or scaler");
  const TrainConfig stored = config_from_json(c.metadata.at("config"));
  if (expected && !(*expected == stored) && warnings)
    warnings->push_back("checkpoint config differs from the requested config (hash " +
                        config_hash(stored) + " vs " + config_hash(*expected) +
                        "); using the stored parameters");
  ModelBundle b = ModelBundle::init(stored);
  b.scaler.min = c.metadata.at("scaler").at("min").get<double>();
  b.scaler.max = c.metadata.at("scaler").at("max").get<double>();
  for (auto& [name, t] : b.named_parameters()) {
    const Matrix* m = c.find(name);
    if (!m) throw IntegrityError("checkpoint: missing tensor " + name);
    if (m->rows() != t.rows() || m->cols() != t.cols())
      throw IntegrityError("checkpoint: shape mismatch for " + name);
    std::copy(m->data().begin(), m->data().end(), t.mutable_data().begin());
  }
  return b;
}

inline void save_bundle(const std::filesystem::path& dir, const ModelBundle& b) {
  save_checkpoint(dir, to_checkpoint(b));
}

inline ModelBundle load_bundle(const std::filesystem::path& dir, const TrainConfig* expected = nullptr,
                               std::vector<std::string>* warnings = nullptr) {
  return from_checkpoint(load_checkpoint(dir), expected, warnings);
}

struct PretrainLogRow {
  std::size_t step;
  double l_n, l_p, l_ssl;
};
struct FinetuneLogRow {
  std::size_t step;
  double mae;
};
struct TrainLog {
  std::vector<PretrainLogRow> pretrain;
  std::vector<FinetuneLogRow> finetune;
};

/// L_SSL for one window of the observed subgraph.
inline SslLoss pretrain_loss(const ModelBundle& b, const Matrix& xw, const Graph& g,
                             const NeighborLists& neighbors, std::uint64_t seed) {
  const auto& cfg = b.config;
  AugmentConfig ac;
  ac.n_select = static_cast<std::size_t>(std::llround(cfg.select_ratio * double(g.n_nodes())));
  ac.mask_ratio = cfg.mask_ratio;
  ac.tau = cfg.tau;
  if (!cfg.use_adaptive_aug) {
    ac.forced_choice = MaskChoice::kNodeMask;
    ac.edge_drop = false;
  }
  const auto view = augment(g, xw, cfg.use_adaptive_aug ? &b.selector : nullptr, ac,
                            derive_seed(seed, {1}));
  ViewPair v{encode(Tensor(xw), g, b.encoder), encode(view.series, view.graph, b.encoder), neighbors,
             topk_neighbors(view.graph, cfg.k)};
  return ssl_loss(v, b.contrast, b.proto, derive_seed(seed, {2}),
                  {cfg.use_contrast, cfg.use_prototype});
}

namespace detail {

template <class StepFn>
void run_epochs(const TrainConfig& cfg, std::size_t epochs, std::size_t n_windows,
                std::uint64_t phase, StepFn&& step) {
  std::size_t counter = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::vector<std::size_t> order(n_windows);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, {phase, 1, epoch}));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < n_windows; b += cfg.batch_windows) {
      const std::size_t e = std::min(n_windows, b + cfg.batch_windows);
      step(std::span<const std::size_t>(order).subspan(b, e - b), counter++, epoch);
    }
  }
}

inline void check_finite_loss(double v, const char* phase, std::size_t step, std::size_t epoch,
                              const std::string& detail) {
  if (std::isfinite(v)) return;
  std::ostringstream msg;
  msg << phase << ": non-finite loss at step " << step << " (epoch " << epoch << ")" << detail;
  throw TrainingError(msg.str());
}

}  // namespace detail

/// Self-supervised training of encoder, selector and heads on scaled series
/// of the observed nodes.
inline void pretrain(ModelBundle& b, const Matrix& x_obs, const Graph& g_obs, TrainLog* log = nullptr) {
  const auto& cfg = b.config;
  if (x_obs.rows() != g_obs.n_nodes()) throw DimensionError("pretrain: series rows differ from graph size");
  if (!cfg.use_pretrain || (!cfg.use_contrast && !cfg.use_prototype)) return;
  const auto starts = window_starts(x_obs.cols(), {cfg.window, cfg.stride});
  const auto neighbors = topk_neighbors(g_obs, cfg.k);
  Adam opt(tensors_of(b.pretrain_parameters()), {.lr = cfg.lr});
  detail::run_epochs(cfg, cfg.epochs_pretrain, starts.size(), 200,
                     [&](std::span<const std::size_t> batch, std::size_t step, std::size_t epoch) {
    Tensor total = Tensor::scalar(0.0);
    double ln = 0.0, lp = 0.0;
    const double inv = 1.0 / double(batch.size());
    for (auto w : batch) {
      const Matrix xw = window_at(x_obs, starts[w], cfg.window);
      const auto l = pretrain_loss(b, xw, g_obs, neighbors, derive_seed(cfg.seed, {200, 2, step, w}));
      total = add(total, scale(l.total, inv));
      ln += l.contrast * inv;
      lp += l.prototype * inv;
    }
    detail::check_finite_loss(total.item(), "pretrain", step, epoch,
                              " L_N=" + std::to_string(ln) + " L_P=" + std::to_string(lp));
    if (log) log->pretrain.push_back({step, ln, lp, total.item()});
    opt.zero_grad();
    backward(total);
    opt.step();
  });
}

struct FinetuneBatch {
  Tensor pred;    // masked nodes x window
  Matrix target;
  Tensor loss;    // MAE
  std::vector<std::size_t> masked;
};

/// Hides round(finetune_mask_ratio * N) nodes and decodes them.
inline FinetuneBatch finetune_forward(const ModelBundle& b, const Matrix& xw, const Graph& g,
                                      std::uint64_t seed) {
  const auto n_mask =
      static_cast<std::size_t>(std::llround(b.config.finetune_mask_ratio * double(g.n_nodes())));
  if (n_mask == 0) throw ValidationError("finetune: masking zero nodes leaves no targets");
  AugmentConfig ac;
  ac.n_select = n_mask;
  ac.forced_choice = MaskChoice::kNodeMask;
  ac.edge_drop = false;
  const auto view = augment(g, xw, nullptr, ac, seed);
  FinetuneBatch out;
  out.masked = view.selected;
  const Tensor r = encode(view.series, g, b.encoder);
  out.pred = b.decoder(gather_rows(r, out.masked));
  out.target = select_rows(xw, out.masked);
  out.loss = mean(abs(sub(out.pred, Tensor(out.target))));
  return out;
}

/// Supervised fit of encoder and decoder on pseudo-unobserved observed nodes.
inline void finetune(ModelBundle& b, const Matrix& x_obs, const Graph& g_obs, TrainLog* log = nullptr) {
  const auto& cfg = b.config;
  if (x_obs.rows() != g_obs.n_nodes()) throw DimensionError("finetune: series rows differ from graph size");
  const auto starts = window_starts(x_obs.cols(), {cfg.window, cfg.stride});
  Adam opt(tensors_of(b.finetune_parameters()), {.lr = cfg.lr});
  detail::run_epochs(cfg, cfg.epochs_finetune, starts.size(), 300,
                     [&](std::span<const std::size_t> batch, std::size_t step, std::size_t epoch) {
    Tensor total = Tensor::scalar(0.0);
    const double inv = 1.0 / double(batch.size());
    for (auto w : batch) {
      const Matrix xw = window_at(x_obs, starts[w], cfg.window);
      auto fb = finetune_forward(b, xw, g_obs, derive_seed(cfg.seed, {300, 2, step, w}));
      total = add(total, scale(fb.loss, inv));
    }
    detail::check_finite_loss(total.item(), "finetune", step, epoch, "");
    if (log) log->finetune.push_back({step, total.item()});
    opt.zero_grad();
    backward(total);
    opt.step();
  });
}

struct KrigeResult {
  Matrix y_hat;                      // N_u x (n_windows * window), original units
  std::vector<std::size_t> unobserved;
  std::vector<char> isolated;        // no observed neighbor above threshold
  std::size_t n_windows = 0;
};

/// Kriging from already-scaled inputs. Unobserved rows are zeroed here.
inline KrigeResult krige_scaled(const ModelBundle& b, Matrix x_scaled, const Graph& g_full,
                                std::span<const std::size_t> unobserved) {
  const std::size_t n = g_full.n_nodes(), w = b.window();
  if (x_scaled.rows() != n) throw DimensionError("krige: series rows differ from graph size");
  check_ids(unobserved, n, "krige");
  if (unobserved.empty()) throw ValidationError("krige: no unobserved nodes");
  std::vector<char> hidden(n, 0);
  for (auto u : unobserved) {
    hidden[u] = 1;
    for (double& v : x_scaled.row(u)) v = 0.0;
  }
  KrigeResult out;
  out.unobserved.assign(unobserved.begin(), unobserved.end());
  for (auto u : unobserved) {
    bool any = false;
    for (auto j : g_full.neighbors(u)) any = any || !hidden[j];
    out.isolated.push_back(any ? 0 : 1);
  }
  const auto starts = window_starts(x_scaled.cols(), {w, w});
  out.n_windows = starts.size();
  out.y_hat = Matrix(unobserved.size(), starts.size() * w);
  const Matrix mean_op = neighbor_mean_operator(g_full);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const Tensor xw(window_at(x_scaled, starts[k], w));
    const Tensor r = sage_layer(sage_layer(xw, mean_op, b.encoder.first), mean_op, b.encoder.second);
    const Matrix y = b.decoder(gather_rows(r, unobserved)).to_matrix();
    for (std::size_t i = 0; i < unobserved.size(); ++i)
      for (std::size_t t = 0; t < w; ++t) out.y_hat(i, k * w + t) = b.scaler.inverse(y(i, t));
  }
  return out;
}

/// Kriging from raw series (values of unobserved rows are ignored).
inline KrigeResult krige(const ModelBundle& b, const Matrix& x, const Graph& g_full,
                         std::span<const std::size_t> unobserved) {
  return krige_scaled(b, b.scaler.transform(x), g_full, unobserved);
}

/// Truth columns matching a kriging result.
inline Matrix truth_for(const KrigeResult& k, const Matrix& values) {
  Matrix y(k.unobserved.size(), k.y_hat.cols());
  for (std::size_t i = 0; i < k.unobserved.size(); ++i)
    for (std::size_t t = 0; t < y.cols(); ++t) y(i, t) = values(k.unobserved[i], t);
  return y;
}

struct PipelineResult {
  ModelBundle bundle;
  SplitSpec split;
  KrigeResult prediction;
  EvalReport report;
  TrainLog log;
};

/// Split, scale, pretrain, finetune, krige and evaluate on ground truth.
inline PipelineResult run_pipeline(const Matrix& values, const Graph& g_full, const TrainConfig& cfg) {
  if (values.rows() != g_full.n_nodes()) throw DimensionError("pipeline: series rows differ from graph size");
  PipelineResult res;
  res.split = split_nodes(values.rows(), cfg.observed_ratio, derive_seed(cfg.seed, {50}));
  res.bundle = ModelBundle::init(cfg);
  const Matrix obs = select_rows(values, res.split.observed);
  res.bundle.scaler = MinMaxScaler::fit(obs);
  const Matrix x_obs = res.bundle.scaler.transform(obs);
  const Graph g_obs = subgraph(g_full, res.split.observed);
  pretrain(res.bundle, x_obs, g_obs, &res.log);
  finetune(res.bundle, x_obs, g_obs, &res.log);
  res.prediction = krige(res.bundle, values, g_full, res.split.unobserved);
  res.report = evaluate(res.prediction.y_hat, truth_for(res.prediction, values));
  res.report.meta = {{"seed", cfg.seed}, {"observed_ratio", cfg.observed_ratio},
                     {"config_hash", config_hash(cfg)}};
  return res;
}

/// KNN-IDW on the same split and columns as a kriging result.
inline EvalReport idw_report(const Matrix& values, const Graph& g_full, const SplitSpec& split,
                             std::size_t k, std::size_t n_cols) {
  Matrix cut(values.rows(), n_cols);
  for (std::size_t i = 0; i < values.rows(); ++i)
    for (std::size_t t = 0; t < n_cols; ++t) cut(i, t) = values(i, t);
  const auto idw = knn_idw(cut, g_full, split.observed, split.unobserved, k);
  return evaluate(idw.y_hat, select_rows(cut, split.unobserved));
}

inline void write_train_log(const std::filesystem::path& path, const TrainLog& log) {
  std::ofstream out(path);
  out << std::setprecision(10) << "step,L_N,L_P,L_SSL\n";
  for (const auto& r : log.pretrain) out << r.step << ',' << r.l_n << ',' << r.l_p << ',' << r.l_ssl << '\n';
}

inline void write_finetune_log(const std::filesystem::path& path, const TrainLog& log) {
  std::ofstream out(path);
  out << std::setprecision(10) << "step,MAE\n";
  for (const auto& r : log.finetune) out << r.step << ',' << r.mae << '\n';
}

}  // namespace kriggraph
