// kriggraph command-line driver.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kriggraph/kriggraph.hpp"

using namespace kriggraph;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string data;
  std::string model;
  std::vector<std::string> set;  // key=value overrides
};

TrainConfig resolve_config(const Common& c) {
  TrainConfig cfg = c.config_path.empty() ? TrainConfig{} : load_config(c.config_path);
  for (const auto& kv : c.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  validate(cfg);
  return cfg;
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw ValidationError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  return json::parse(in);
}

Dataset require_data(const Common& c) {
  if (c.data.empty()) throw ValidationError("--data is required");
  return load_dataset(c.data);
}

std::vector<std::string> ids_of(const Dataset& d, std::span<const std::size_t> idx) {
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(d.series.node_ids[i]);
  return out;
}

std::vector<std::size_t> indices_of(const Dataset& d, const std::vector<std::string>& ids) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < d.series.node_ids.size(); ++i) index[d.series.node_ids[i]] = i;
  std::vector<std::size_t> out;
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) throw ValidationError("unknown node id " + id);
    out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  return out;
}

SplitSpec split_for(const Dataset& d, const TrainConfig& cfg) {
  return split_nodes(d.series.values.rows(), cfg.observed_ratio, derive_seed(cfg.seed, {50}));
}

void save_split(const fs::path& dir, const Dataset& d, const SplitSpec& s) {
  write_json(dir / "split.json", {{"observed", ids_of(d, s.observed)}, {"unobserved", ids_of(d, s.unobserved)}});
}

SplitSpec load_split(const fs::path& dir, const Dataset& d) {
  const auto j = read_json(dir / "split.json");
  SplitSpec s;
  s.observed = indices_of(d, j.at("observed").get<std::vector<std::string>>());
  s.unobserved = indices_of(d, j.at("unobserved").get<std::vector<std::string>>());
  return s;
}

void write_predictions(const fs::path& p, const Dataset& d, std::span<const std::size_t> rows,
                       const Matrix& y_hat) {
  std::ofstream out(p);
  out << std::setprecision(10) << "node_id,t,y_hat,y_true\n";
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t t = 0; t < y_hat.cols(); ++t)
      out << d.series.node_ids[rows[r]] << ',' << d.series.timestamps[t] << ',' << y_hat(r, t) << ','
          << d.series.values(rows[r], t) << '\n';
}

json metrics_json(const EvalReport& r, std::size_t n_unobserved, std::size_t n_windows,
                  const TrainConfig& cfg) {
  auto j = to_json(r);
  j.erase("n_entries");
  j.erase("meta");
  j["n_unobserved"] = n_unobserved;
  j["n_windows"] = n_windows;
  j["config_hash"] = config_hash(cfg);
  return j;
}

Matrix truth_cols(const Dataset& d, std::span<const std::size_t> rows, std::size_t n_cols) {
  Matrix y(rows.size(), n_cols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t t = 0; t < n_cols; ++t) y(r, t) = d.series.values(rows[r], t);
  return y;
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// Loads the model in --model, honoring a --config only as a consistency check.
ModelBundle open_model(const Common& c, const TrainConfig* expected) {
  if (c.model.empty()) throw ValidationError("--model is required");
  std::vector<std::string> warnings;
  auto b = load_bundle(c.model, expected, &warnings);
  warn_all(warnings);
  return b;
}

void write_krige_outputs(const fs::path& out, const Dataset& d, const ModelBundle& b, const KrigeResult& k) {
  write_predictions(out / "predictions.csv", d, k.unobserved, k.y_hat);
  auto rep = evaluate(k.y_hat, truth_cols(d, k.unobserved, k.y_hat.cols()));
  auto m = metrics_json(rep, k.unobserved.size(), k.n_windows, b.config);
  std::size_t isolated = 0;
  for (char f : k.isolated) isolated += f;
  m["isolated_nodes"] = isolated;
  write_json(out / "metrics.json", m);
  std::cout << "MAE " << rep.mae << "  RMSE " << rep.rmse << "  MAPE " << rep.mape << '\n';
}

int cmd_synth(const Common& c, SynthConfig s) {
  if (c.seed) s.seed = *c.seed;
  auto g = generate(s);
  fs::create_directories(c.out);
  save_dataset(c.out, {g.series, g.distances, g.xs, g.ys});
  std::cout << "wrote " << s.n_nodes << " nodes x " << s.t_total << " steps to " << c.out << " (d_avg "
            << g.graph.d_avg() << ")\n";
  return 0;
}

int cmd_pretrain(const Common& c) {
  const auto cfg = resolve_config(c);
  const auto d = require_data(c);
  const Graph g = dataset_graph(d, cfg.sigma, cfg.threshold);
  const auto split = split_for(d, cfg);
  auto b = ModelBundle::init(cfg);
  const Matrix obs = select_rows(d.series.values, split.observed);
  b.scaler = MinMaxScaler::fit(obs);
  TrainLog log;
  pretrain(b, b.scaler.transform(obs), subgraph(g, split.observed), &log);
  const fs::path out(c.out);
  fs::create_directories(out / "model");
  save_bundle(out / "model", b);
  save_split(out / "model", d, split);
  write_train_log(out / "train_log.csv", log);
  std::cout << "pretrained " << log.pretrain.size() << " steps; model in " << (out / "model") << '\n';
  return 0;
}

int cmd_finetune(const Common& c) {
  const auto d = require_data(c);
  std::optional<TrainConfig> expected;
  if (!c.config_path.empty() || c.seed || !c.set.empty()) expected = resolve_config(c);
  auto b = open_model(c, expected ? &*expected : nullptr);
  const auto split = load_split(c.model, d);
  const Graph g = dataset_graph(d, b.config.sigma, b.config.threshold);
  TrainLog log;
  finetune(b, b.scaler.transform(select_rows(d.series.values, split.observed)), subgraph(g, split.observed),
           &log);
  const fs::path out(c.out);
  fs::create_directories(out / "model");
  save_bundle(out / "model", b);
  save_split(out / "model", d, split);
  write_finetune_log(out / "train_log.csv", log);
  std::cout << "finetuned " << log.finetune.size() << " steps; model in " << (out / "model") << '\n';
  return 0;
}

int cmd_krige(const Common& c, const std::vector<std::string>& unobserved_ids) {
  const auto d = require_data(c);
  auto b = open_model(c, nullptr);
  const auto un = unobserved_ids.empty() ? load_split(c.model, d).unobserved : indices_of(d, unobserved_ids);
  const Graph g = dataset_graph(d, b.config.sigma, b.config.threshold);
  const auto k = krige(b, d.series.values, g, un);
  fs::create_directories(c.out);
  write_krige_outputs(c.out, d, b, k);
  return 0;
}

int cmd_evaluate(const Common& c, const std::string& experiment) {
  const auto cfg = resolve_config(c);
  const auto d = require_data(c);
  const Graph g = dataset_graph(d, cfg.sigma, cfg.threshold);
  const fs::path out(c.out);
  fs::create_directories(out);
  if (experiment == "ablation") {
    const auto rep = ablation(d.series.values, g, cfg);
    write_json(out / "ablation.json", to_json(rep));
    for (const auto& r : rep.rows) std::cout << std::setw(8) << r.name << "  MAE " << r.report.mae << '\n';
    std::cout << "largest degradation: " << rep.largest_degradation << '\n';
    return 0;
  }
  if (experiment == "ratio") {
    const auto rows = ratio_sweep(d.series.values, g, kSweepRatios, cfg);
    write_json(out / "ratio_sweep.json", to_json(rows));
    for (const auto& r : rows)
      std::cout << "unobserved " << r.unobserved_ratio << "  KCP " << r.kcp.mae << "  KNN-IDW " << r.idw.mae
                << "  (" << r.seconds << " s)\n";
    return 0;
  }
  if (experiment != "none" && experiment != "robustness")
    throw ValidationError("unknown experiment '" + experiment + "'");

  auto res = run_pipeline(d.series.values, g, cfg);
  save_bundle(out / "model", res.bundle);
  save_split(out / "model", d, res.split);
  write_train_log(out / "train_log.csv", res.log);
  write_finetune_log(out / "finetune_log.csv", res.log);
  write_krige_outputs(out, d, res.bundle, res.prediction);
  const auto idw = idw_report(d.series.values, g, res.split, cfg.idw_k, res.prediction.y_hat.cols());
  write_json(out / "baseline_metrics.json",
             metrics_json(idw, res.split.unobserved.size(), res.prediction.n_windows, cfg));
  std::cout << "KNN-IDW MAE " << idw.mae << '\n';
  if (experiment == "robustness") {
    const auto reps = robustness_eval(res.bundle, d.series.values, g, res.split.unobserved, kRobustnessRatios,
                                      cfg.seed);
    json arr = json::array();
    for (const auto& r : reps) {
      arr.push_back(to_json(r));
      std::cout << "missing " << r.meta["missing_ratio"] << "  MAE " << r.mae << '\n';
    }
    write_json(out / "robustness.json", arr);
  }
  return 0;
}

int cmd_baseline(const Common& c) {
  const auto cfg = resolve_config(c);
  const auto d = require_data(c);
  const Graph g = dataset_graph(d, cfg.sigma, cfg.threshold);
  const auto split = c.model.empty() ? split_for(d, cfg) : load_split(c.model, d);
  const auto r = knn_idw(d.series.values, g, split.observed, split.unobserved, cfg.idw_k);
  const auto rep = evaluate(r.y_hat, truth_cols(d, split.unobserved, r.y_hat.cols()));
  fs::create_directories(c.out);
  write_predictions(fs::path(c.out) / "predictions.csv", d, split.unobserved, r.y_hat);
  auto m = metrics_json(rep, split.unobserved.size(), 1, cfg);
  std::size_t fallback = 0;
  for (char f : r.fallback) fallback += f;
  m["fallback_nodes"] = fallback;
  write_json(fs::path(c.out) / "metrics.json", m);
  std::cout << "KNN-IDW (k=" << cfg.idw_k << ") MAE " << rep.mae << "  RMSE " << rep.rmse << '\n';
  return 0;
}

int cmd_augment_demo(const Common& c) {
  const auto cfg = resolve_config(c);
  const auto d = require_data(c);
  const Graph g = dataset_graph(d, cfg.sigma, cfg.threshold);
  const auto b = c.model.empty() ? ModelBundle::init(cfg) : open_model(c, nullptr);
  MinMaxScaler scaler = c.model.empty() ? MinMaxScaler::fit(d.series.values) : b.scaler;
  const Matrix xw = window_at(scaler.transform(d.series.values), 0, b.config.window);
  AugmentConfig ac;
  ac.n_select = static_cast<std::size_t>(std::llround(b.config.select_ratio * double(g.n_nodes())));
  ac.mask_ratio = b.config.mask_ratio;
  ac.tau = b.config.tau;
  const auto view = augment(g, xw, &b.selector, ac, derive_seed(cfg.seed, {600}));
  json nodes = json::array();
  for (std::size_t s = 0; s < view.selected.size(); ++s)
    nodes.push_back({{"node_id", d.series.node_ids[view.selected[s]]},
                     {"choice", view.choices[s] == MaskChoice::kNodeMask ? "node_mask" : "feature_mask"}});
  json dropped = json::array();
  for (auto [i, j] : view.dropped_edges) dropped.push_back({d.series.node_ids[i], d.series.node_ids[j]});
  const auto rho = edge_drop_probs(g);
  json j = {{"selected", nodes},
            {"dropped_edges", dropped},
            {"edges_before", g.n_edges()},
            {"edges_after", view.graph.n_edges()},
            {"d_avg", g.d_avg()},
            {"d_max", g.d_max()},
            {"drop_probability", rho}};
  fs::create_directories(c.out);
  write_json(fs::path(c.out) / "augment.json", j);
  std::size_t node_masks = 0;
  for (auto ch : view.choices) node_masks += ch == MaskChoice::kNodeMask;
  std::cout << view.selected.size() << " nodes corrupted (" << node_masks << " node masks), "
            << view.dropped_edges.size() << " of " << g.n_edges() << " edges dropped\n";
  return 0;
}

// Prototype co-membership of adjacent vs non-adjacent observed nodes.
int cmd_prototypes(const Common& c) {
  const auto d = require_data(c);
  const auto b = open_model(c, nullptr);
  const auto split = load_split(c.model, d);
  const Graph g = subgraph(dataset_graph(d, b.config.sigma, b.config.threshold), split.observed);
  const auto m =
      prototype_comembership(b, b.scaler.transform(select_rows(d.series.values, split.observed)), g);
  fs::create_directories(c.out);
  write_json(fs::path(c.out) / "prototypes.json", to_json(m));
  std::cout << "same prototype: neighbors " << m.neighbor_rate << ", non-neighbors " << m.non_neighbor_rate
            << ", chance " << m.chance << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inductive spatiotemporal kriging with graph contrastive pretraining"};
  app.require_subcommand(1);
  Common c;
  auto common = [&](CLI::App* sub, bool needs_data = true) {
    sub->add_option("--config", c.config_path, "flat key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "override the configured seed");
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--set", c.set, "override a configuration key (key=value), repeatable");
    if (needs_data) sub->add_option("--data", c.data, "dataset directory")->required();
  };

  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  SynthConfig s;
  common(synth, false);
  synth->add_option("--nodes", s.n_nodes)->capture_default_str();
  synth->add_option("--t-total", s.t_total)->capture_default_str();
  synth->add_option("--region", s.region)->capture_default_str();
  synth->add_option("--kernel-sigma", s.kernel_sigma)->capture_default_str();
  synth->add_option("--length-scale", s.length_scale)->capture_default_str();
  synth->add_option("--harmonics", s.n_harmonics)->capture_default_str();
  synth->add_option("--noise", s.noise_std)->capture_default_str();

  auto* pre = app.add_subcommand("pretrain", "self-supervised pretraining on the observed nodes");
  common(pre);
  auto* fine = app.add_subcommand("finetune", "decoder fit under MAE, starting from --model");
  common(fine);
  fine->add_option("--model", c.model, "model directory from pretrain")->required();
  auto* kr = app.add_subcommand("krige", "estimate unobserved nodes with a trained model");
  common(kr);
  std::vector<std::string> unobserved;
  kr->add_option("--model", c.model, "model directory")->required();
  kr->add_option("--unobserved", unobserved, "node ids to estimate (default: the training split)")
      ->delimiter(',');
  auto* ev = app.add_subcommand("evaluate", "train, krige and score against ground truth");
  common(ev);
  std::string experiment = "none";
  ev->add_option("--experiment", experiment, "none, robustness, ratio or ablation")
      ->check(CLI::IsMember({"none", "robustness", "ratio", "ablation"}))
      ->capture_default_str();
  auto* demo = app.add_subcommand("augment-demo", "apply one augmentation and report what changed");
  common(demo);
  demo->add_option("--model", c.model, "use the selector of a trained model");
  auto* base = app.add_subcommand("baseline", "KNN-IDW on the configured split");
  common(base);
  base->add_option("--model", c.model, "reuse the split stored with a model");

  auto* proto = app.add_subcommand("prototypes", "prototype co-membership of neighbors vs non-neighbors");
  common(proto);
  proto->add_option("--model", c.model, "model directory")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (synth->parsed()) return cmd_synth(c, s);
    if (pre->parsed()) return cmd_pretrain(c);
    if (fine->parsed()) return cmd_finetune(c);
    if (kr->parsed()) return cmd_krige(c, unobserved);
    if (ev->parsed()) return cmd_evaluate(c, experiment);
    if (demo->parsed()) return cmd_augment_demo(c);
    if (base->parsed()) return cmd_baseline(c);
    if (proto->parsed()) return cmd_prototypes(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
