#pragma once

// PipelineConfig: every tunable of the pipeline as one JSON document.
// Loading is strict: unknown keys are rejected by name, missing keys keep
// their defaults.

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ddosnet/error.hpp"
#include "ddosnet/flow_data.hpp"
#include "ddosnet/nn/losses.hpp"
#include "ddosnet/nn/model.hpp"
#include "ddosnet/smote.hpp"
#include "ddosnet/trainer.hpp"

namespace ddosnet {

/// Two Gaussian classes in flow-shaped columns, for desk-scale runs.
struct SyntheticSpec {
  std::size_t n_majority = 1000;  // benign
  std::size_t n_minority = 50;    // DDoS
  std::size_t n_features = 8;
  double separation = 6.0;  // distance between class means, in units of noise_scale
  double noise_scale = 1.0;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_minority < 2) throw ConfigError("synth.n_minority must be >= 2");
    if (n_majority < 1) throw ConfigError("synth.n_majority must be >= 1");
    if (n_features < 1) throw ConfigError("synth.n_features must be >= 1");
    if (!(separation > 0.0)) throw ConfigError("synth.separation must be > 0");
    if (!(noise_scale > 0.0)) throw ConfigError("synth.noise_scale must be > 0");
  }
};

struct GradCheckConfig {
  std::size_t n_features = 6;
  std::size_t width = 8;
  std::size_t blocks = 2;
  std::size_t batch = 16;
  double h = 1e-5;
  double tolerance = 1e-4;
  double lambda_anchor = 0.5;
  std::uint64_t seed = 7;
};

struct PipelineConfig {
  LoadOptions data;
  SplitConfig split;
  SmoteConfig smote;
  TrainConfig train;
  nn::ArchConfig model;
  SyntheticSpec synth;
  GradCheckConfig gradcheck;
  std::string data_path;
  std::string model_path;
  std::string out_path;

  void validate() const {
    split.validate();
    smote.validate();
    train.validate();
    model.validate();
    synth.validate();
    if (gradcheck.batch < 2) throw ConfigError("gradcheck.batch must be >= 2");
    if (!(gradcheck.h > 0.0)) throw ConfigError("gradcheck.h must be > 0");
  }

  /// Overrides every seed in the document.
  void set_seed(std::uint64_t s) {
    split.seed = smote.seed = train.seed = model.init_seed = synth.seed = gradcheck.seed = s;
  }
};

namespace detail {

using nlohmann::json;

class ObjectReader {
public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
    for (auto it = j_.begin(); it != j_.end(); ++it) unseen_.insert(it.key());
  }

  template <class T>
  void read(const char* key, T& out) {
    unseen_.erase(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + qualified(key) + "': " + e.what());
    }
  }

  void read_loss(const char* key, nn::LossKind& out) {
    std::string s(nn::to_string(out));
    read(key, s);
    out = nn::parse_loss_kind(s);
  }

  const json* child(const char* key) {
    unseen_.erase(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    if (!unseen_.empty()) throw ConfigError("config: unknown key '" + qualified(*unseen_.begin()) + "'");
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> unseen_;
};

}  // namespace detail

inline nlohmann::json to_json(const PipelineConfig& c) {
  using nlohmann::json;
  json j;
  j["data"] = {{"label_column", c.data.label_column},
               {"benign_token", c.data.benign_token},
               {"attack_token", c.data.attack_token}};
  j["split"] = {{"test_fraction", c.split.test_fraction}, {"seed", c.split.seed}, {"stratify", c.split.stratify}};
  j["smote"] = {{"k", c.smote.k}, {"seed", c.smote.seed}, {"target_ratio", c.smote.target_ratio}};
  j["train"] = {{"epochs_phase1", c.train.epochs_phase1},
                {"epochs_phase2", c.train.epochs_phase2},
                {"batch_size", c.train.batch_size},
                {"eta", c.train.eta},
                {"lambda_anchor", c.train.lambda_anchor},
                {"loss_phase1", nn::to_string(c.train.loss_phase1)},
                {"loss_phase2_base", nn::to_string(c.train.loss_phase2_base)},
                {"threshold", c.train.threshold},
                {"seed", c.train.seed},
                {"eps_dice", c.train.eps_dice},
                {"eps_opt", c.train.eps_opt},
                {"reset_optimizer_between_phases", c.train.reset_optimizer_between_phases}};
  j["model"] = {{"stem_width", c.model.stem_width},
                {"block_widths", c.model.block_widths},
                {"attention_every_block", c.model.attention_every_block},
                {"bn_momentum", c.model.bn_momentum},
                {"bn_eps", c.model.bn_eps},
                {"init_seed", c.model.init_seed}};
  j["synth"] = {{"n_majority", c.synth.n_majority},
                {"n_minority", c.synth.n_minority},
                {"n_features", c.synth.n_features},
                {"separation", c.synth.separation},
                {"noise_scale", c.synth.noise_scale},
                {"seed", c.synth.seed}};
  j["gradcheck"] = {{"n_features", c.gradcheck.n_features},
                    {"width", c.gradcheck.width},
                    {"blocks", c.gradcheck.blocks},
                    {"batch", c.gradcheck.batch},
                    {"h", c.gradcheck.h},
                    {"tolerance", c.gradcheck.tolerance},
                    {"lambda_anchor", c.gradcheck.lambda_anchor},
                    {"seed", c.gradcheck.seed}};
  j["paths"] = {{"data", c.data_path}, {"model", c.model_path}, {"out", c.out_path}};
  return j;
}

inline nlohmann::json to_json(const nn::ArchConfig& a) {
  return {{"stem_width", a.stem_width},
          {"block_widths", a.block_widths},
          {"attention_every_block", a.attention_every_block},
          {"bn_momentum", a.bn_momentum},
          {"bn_eps", a.bn_eps},
          {"init_seed", a.init_seed}};
}

inline void read_arch(detail::ObjectReader& r, nn::ArchConfig& a) {
  r.read("stem_width", a.stem_width);
  r.read("block_widths", a.block_widths);
  r.read("attention_every_block", a.attention_every_block);
  r.read("bn_momentum", a.bn_momentum);
  r.read("bn_eps", a.bn_eps);
  r.read("init_seed", a.init_seed);
  r.finish();
}

inline nn::ArchConfig arch_from_json(const nlohmann::json& j) {
  nn::ArchConfig a;
  detail::ObjectReader r(j, "model");
  read_arch(r, a);
  return a;
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  detail::ObjectReader root(j, "");
  if (const auto* s = root.child("data")) {
    detail::ObjectReader r(*s, "data");
    r.read("label_column", c.data.label_column);
    r.read("benign_token", c.data.benign_token);
    r.read("attack_token", c.data.attack_token);
    r.finish();
  }
  if (const auto* s = root.child("split")) {
    detail::ObjectReader r(*s, "split");
    r.read("test_fraction", c.split.test_fraction);
    r.read("seed", c.split.seed);
    r.read("stratify", c.split.stratify);
    r.finish();
  }
  if (const auto* s = root.child("smote")) {
    detail::ObjectReader r(*s, "smote");
    r.read("k", c.smote.k);
    r.read("seed", c.smote.seed);
    r.read("target_ratio", c.smote.target_ratio);
    r.finish();
  }
  if (const auto* s = root.child("train")) {
    detail::ObjectReader r(*s, "train");
    r.read("epochs_phase1", c.train.epochs_phase1);
    r.read("epochs_phase2", c.train.epochs_phase2);
    r.read("batch_size", c.train.batch_size);
    r.read("eta", c.train.eta);
    r.read("lambda_anchor", c.train.lambda_anchor);
    r.read_loss("loss_phase1", c.train.loss_phase1);
    r.read_loss("loss_phase2_base", c.train.loss_phase2_base);
    r.read("threshold", c.train.threshold);
    r.read("seed", c.train.seed);
    r.read("eps_dice", c.train.eps_dice);
    r.read("eps_opt", c.train.eps_opt);
    r.read("reset_optimizer_between_phases", c.train.reset_optimizer_between_phases);
    r.finish();
  }
  if (const auto* s = root.child("model")) {
    detail::ObjectReader r(*s, "model");
    read_arch(r, c.model);
  }
  if (const auto* s = root.child("synth")) {
    detail::ObjectReader r(*s, "synth");
    r.read("n_majority", c.synth.n_majority);
    r.read("n_minority", c.synth.n_minority);
    r.read("n_features", c.synth.n_features);
    r.read("separation", c.synth.separation);
    r.read("noise_scale", c.synth.noise_scale);
    r.read("seed", c.synth.seed);
    r.finish();
  }
  if (const auto* s = root.child("gradcheck")) {
    detail::ObjectReader r(*s, "gradcheck");
    r.read("n_features", c.gradcheck.n_features);
    r.read("width", c.gradcheck.width);
    r.read("blocks", c.gradcheck.blocks);
    r.read("batch", c.gradcheck.batch);
    r.read("h", c.gradcheck.h);
    r.read("tolerance", c.gradcheck.tolerance);
    r.read("lambda_anchor", c.gradcheck.lambda_anchor);
    r.read("seed", c.gradcheck.seed);
    r.finish();
  }
  if (const auto* s = root.child("paths")) {
    detail::ObjectReader r(*s, "paths");
    r.read("data", c.data_path);
    r.read("model", c.model_path);
    r.read("out", c.out_path);
    r.finish();
  }
  root.finish();
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace ddosnet
