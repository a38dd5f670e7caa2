#pragma once

// Flat `key = value` training configuration. Lines starting with '#' are
// comments. Every key has a default; unknown keys are rejected.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "checkpoint.hpp"
#include "errors.hpp"

namespace kriggraph {

struct TrainConfig {
  std::size_t epochs_pretrain = 50;
  std::size_t epochs_finetune = 50;
  double lr = 1e-3;
  std::size_t batch_windows = 1;
  std::uint64_t seed = 0;

  std::size_t window = 24;
  std::size_t stride = 24;
  double threshold = 0.1;
  double sigma = 0.0;  // 0: off-diagonal distance std
  double observed_ratio = 0.8;

  std::size_t hidden = 64;
  std::size_t embed = 64;
  std::size_t selector_hidden = 32;
  std::size_t decoder_hidden = 64;

  double mask_ratio = 0.25;
  double select_ratio = 0.5;
  double tau = 0.5;
  std::size_t k = 5;
  std::size_t n_neg = 5;
  std::size_t n_prototypes = 10;
  double sinkhorn_eps = 0.05;
  std::size_t sinkhorn_iters = 3;

  double finetune_mask_ratio = 0.2;
  std::size_t idw_k = 5;

  bool use_pretrain = true;
  bool use_adaptive_aug = true;
  bool use_contrast = true;
  bool use_prototype = true;

  bool operator==(const TrainConfig&) const = default;
};

namespace detail {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seed is stored as a count field");
using ConfigField =
    std::variant<std::size_t TrainConfig::*, double TrainConfig::*, bool TrainConfig::*>;

struct ConfigKey {
  const char* name;
  ConfigField field;
  const char* doc;
};

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"epochs_pretrain", &TrainConfig::epochs_pretrain, "passes over the training windows in pretraining"},
      {"epochs_finetune", &TrainConfig::epochs_finetune, "passes over the training windows in finetuning"},
      {"lr", &TrainConfig::lr, "Adam learning rate"},
      {"batch_windows", &TrainConfig::batch_windows, "windows averaged per optimizer step"},
      {"seed", &TrainConfig::seed, "master seed"},
      {"window", &TrainConfig::window, "window width in time steps"},
      {"stride", &TrainConfig::stride, "window stride"},
      {"threshold", &TrainConfig::threshold, "kernel weight below which an edge is absent"},
      {"sigma", &TrainConfig::sigma, "Gaussian kernel width; 0 uses the distance std"},
      {"observed_ratio", &TrainConfig::observed_ratio, "fraction of nodes observed during training"},
      {"hidden", &TrainConfig::hidden, "encoder hidden width"},
      {"embed", &TrainConfig::embed, "representation width E"},
      {"selector_hidden", &TrainConfig::selector_hidden, "augmentation selector hidden width"},
      {"decoder_hidden", &TrainConfig::decoder_hidden, "decoder hidden width"},
      {"mask_ratio", &TrainConfig::mask_ratio, "feature mask ratio r_m"},
      {"select_ratio", &TrainConfig::select_ratio, "fraction of nodes corrupted per view"},
      {"tau", &TrainConfig::tau, "Gumbel-Softmax temperature"},
      {"k", &TrainConfig::k, "neighbors in the contrast readout"},
      {"n_neg", &TrainConfig::n_neg, "negatives per anchor"},
      {"n_prototypes", &TrainConfig::n_prototypes, "prototype count H"},
      {"sinkhorn_eps", &TrainConfig::sinkhorn_eps, "Sinkhorn regularization"},
      {"sinkhorn_iters", &TrainConfig::sinkhorn_iters, "Sinkhorn iterations"},
      {"finetune_mask_ratio", &TrainConfig::finetune_mask_ratio, "fraction of observed nodes hidden per finetune step"},
      {"idw_k", &TrainConfig::idw_k, "neighbors for the KNN-IDW baseline"},
      {"use_pretrain", &TrainConfig::use_pretrain, "run self-supervised pretraining"},
      {"use_adaptive_aug", &TrainConfig::use_adaptive_aug, "learned mask choice and edge drop; false forces node masks"},
      {"use_contrast", &TrainConfig::use_contrast, "include the neighboring contrast loss"},
      {"use_prototype", &TrainConfig::use_prototype, "include the prototype loss"},
  };
  return keys;
}

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ValidationError("config: bad value '" + text + "' for " + key);
  return v;
}

}  // namespace detail

/// Sets one key from its text form.
inline void set_config_value(TrainConfig& cfg, const std::string& key, const std::string& text) {
  for (const auto& k : detail::config_keys()) {
    if (key != k.name) continue;
    std::visit(
        [&](auto member) {
          using T = std::remove_reference_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, bool>) {
            if (text == "true" || text == "1") cfg.*member = true;
            else if (text == "false" || text == "0") cfg.*member = false;
            else throw ValidationError("config: bad boolean '" + text + "' for " + key);
          } else {
            cfg.*member = detail::parse_number<T>(key, text);
          }
        },
        k.field);
    return;
  }
  throw ValidationError("config: unknown key '" + key + "'");
}

inline void validate(const TrainConfig& c) {
  auto fail = [](const std::string& m) { throw ValidationError("config: " + m); };
  if (!(c.lr >= 0.0)) fail("lr must be nonnegative");
  if (c.batch_windows == 0) fail("batch_windows must be >= 1");
  if (c.window == 0 || c.stride == 0) fail("window and stride must be >= 1");
  if (!(c.observed_ratio > 0.0 && c.observed_ratio < 1.0)) fail("observed_ratio must lie in (0, 1)");
  if (!(c.mask_ratio > 0.0 && c.mask_ratio <= 1.0)) fail("mask_ratio must lie in (0, 1]");
  if (!(c.select_ratio >= 0.0 && c.select_ratio <= 1.0)) fail("select_ratio must lie in [0, 1]");
  if (!(c.finetune_mask_ratio > 0.0 && c.finetune_mask_ratio < 1.0))
    fail("finetune_mask_ratio must lie in (0, 1)");
  if (!(c.tau > 0.0)) fail("tau must be positive");
  if (!(c.sinkhorn_eps > 0.0) || c.sinkhorn_iters == 0) fail("sinkhorn needs eps > 0 and iters >= 1");
  if (c.k == 0 || c.idw_k == 0) fail("k and idw_k must be >= 1");
  if (c.n_prototypes < 2) fail("n_prototypes must be >= 2");
  if (c.hidden == 0 || c.embed == 0 || c.selector_hidden == 0 || c.decoder_hidden == 0)
    fail("layer widths must be >= 1");
  if (!(c.sigma >= 0.0) || !(c.threshold >= 0.0)) fail("sigma and threshold must be nonnegative");
}

inline TrainConfig parse_config(std::istream& in) {
  TrainConfig cfg;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("config line " + std::to_string(lineno) + ": expected key = value");
    set_config_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  validate(cfg);
  return cfg;
}

inline TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path.string());
  return parse_config(in);
}

inline nlohmann::json to_json(const TrainConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : detail::config_keys())
    std::visit([&](auto member) { j[k.name] = cfg.*member; }, k.field);
  return j;
}

inline TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const auto& k : detail::config_keys()) {
      if (it.key() != k.name) continue;
      known = true;
      std::visit(
          [&](auto member) {
            using T = std::remove_reference_t<decltype(cfg.*member)>;
            cfg.*member = it.value().get<T>();
          },
          k.field);
    }
    if (!known) throw ValidationError("config: unknown key '" + it.key() + "'");
  }
  validate(cfg);
  return cfg;
}

/// `key = value  # doc` lines for every key, in declaration order.
inline std::string describe_config(const TrainConfig& cfg) {
  std::ostringstream out;
  const auto j = to_json(cfg);
  for (const auto& k : detail::config_keys()) out << k.name << " = " << j.at(k.name).dump() << "  # " << k.doc << "\n";
  return out.str();
}

/// CRC32 of the canonical JSON form; identifies a configuration in reports.
inline std::string config_hash(const TrainConfig& cfg) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", detail::crc32_of(to_json(cfg).dump()));
  return buf;
}

}  // namespace kriggraph
