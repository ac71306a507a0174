#pragma once

// End-to-end operations behind the command-line tool: synthetic data,
// training, evaluation, prediction and gradient checking.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ddosnet/config.hpp"
#include "ddosnet/csv.hpp"
#include "ddosnet/error.hpp"
#include "ddosnet/flow_data.hpp"
#include "ddosnet/metrics.hpp"
#include "ddosnet/model_io.hpp"
#include "ddosnet/nn/gradcheck.hpp"
#include "ddosnet/nn/model.hpp"
#include "ddosnet/random.hpp"
#include "ddosnet/smote.hpp"
#include "ddosnet/trainer.hpp"

namespace ddosnet {

// Re-throws data-level failures tagged with the pipeline stage they came from.
template <class F>
auto run_stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(std::string("stage '") + name + "': " + e.what());
  }
}

// --- synthetic flows --------------------------------------------------------

inline std::string synthetic_feature_name(std::size_t j) {
  static const char* const names[] = {"flow_duration",    "pk_len_std",       "fwd_subflow_bytes_mean",
                                      "bwd_pkt_len_mean", "bwd_pkt_len_tot",  "flag_rst",
                                      "fwd_pkt_len_mean", "flow_iat_mean",    "tot_fwd_pkts",
                                      "tot_bwd_pkts",     "flow_byts_s",      "flow_pkts_s"};
  constexpr std::size_t n = sizeof(names) / sizeof(names[0]);
  return j < n ? names[j] : "feature_" + std::to_string(j);
}

/// Two Gaussian classes. In noise units every feature of a DDoS row is
/// shifted by separation / sqrt(n_features), so the class means sit
/// `separation` noise-widths apart. Each column is then put on its own raw
/// scale (1, 10, 100, 1000, ...) so that standard scaling matters. The
/// non-numeric "Flow ID" and "Src IP" columns mimic exported flow records.
inline void write_synthetic_flows(std::ostream& out, const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, 0x5717));
  const std::size_t n = spec.n_majority + spec.n_minority;
  std::vector<int> labels(n, kBenign);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(spec.n_majority), labels.end(), kAttack);
  rng.shuffle(std::span(labels));

  const double shift = spec.separation / std::sqrt(static_cast<double>(spec.n_features));
  std::vector<std::string> row{"Flow ID", "Src IP"};
  for (std::size_t j = 0; j < spec.n_features; ++j) row.push_back(synthetic_feature_name(j));
  row.push_back("Label");
  csv::write_row(out, row);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    const std::string src = "192.168.10." + std::to_string(1 + i % 250);
    row.push_back(src + "-10.0.0." + std::to_string(1 + (i * 7) % 250) + "-" + std::to_string(1024 + i % 60000) +
                  "-80-6");
    row.push_back(src);
    for (std::size_t j = 0; j < spec.n_features; ++j) {
      const double scale = std::pow(10.0, static_cast<double>(j % 4));
      double z = spec.noise_scale * rng.normal();
      if (labels[i] == kAttack) z += shift * spec.noise_scale;
      row.push_back(csv::format_double(5.0 * scale + scale * z));
    }
    row.push_back(labels[i] == kAttack ? "DDoS" : "BENIGN");
    csv::write_row(out, row);
  }
}

inline void write_synthetic_flows(const std::string& path, const SyntheticSpec& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_synthetic_flows(out, spec);
  if (!out) throw DataError("write to '" + path + "' failed");
}

// --- training ---------------------------------------------------------------

struct TrainOutcome {
  ModelBundle bundle;
  TrainReport report;
  EvalReport test_eval;
  std::vector<std::string> dropped_columns;
  std::vector<std::string> warnings;
  std::size_t rows_loaded = 0;
  std::size_t rows_after_nan_drop = 0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::size_t test_attack = 0;
  std::size_t balanced_rows = 0;
  std::size_t synthetic_rows = 0;
};

/// load -> drop NaN rows -> split -> fill +-inf with train means -> fit the
/// scaler on train and apply to both parts -> SMOTE on scaled train ->
/// phase 1 -> anchors -> phase 2 -> evaluate on the held-out part.
inline TrainOutcome train_pipeline(const PipelineConfig& cfg, const std::string& data_path) {
  cfg.validate();
  TrainOutcome out;
  auto loaded = run_stage("load", [&] { return load_flow_csv(data_path, cfg.data); });
  out.dropped_columns = loaded.dropped_columns;
  out.rows_loaded = loaded.data.rows();

  const FlowDataset no_nan = run_stage("clean", [&] {
    auto ds = drop_nan_rows(loaded.data);
    if (ds.rows() == 0) throw DataError("empty dataset after cleaning");
    return ds;
  });
  out.rows_after_nan_drop = no_nan.rows();

  auto split = run_stage("split", [&] { return train_test_split(no_nan, cfg.split); });

  const auto fill = run_stage("clean", [&] { return finite_column_means(split.train); });
  split.train = replace_infinite(std::move(split.train), fill);
  split.test = replace_infinite(std::move(split.test), fill);

  const auto scaler = run_stage("scale", [&] { return fit_scaler(split.train); });
  const FlowDataset train = apply_scaler(split.train, scaler);
  const FlowDataset test = apply_scaler(split.test, scaler);
  out.train_rows = train.rows();
  out.test_rows = test.rows();
  out.test_attack = test.count(kAttack);

  auto smote = run_stage("smote", [&] { return oversample(train, cfg.smote); });
  out.warnings = smote.warnings;
  out.balanced_rows = smote.data.rows();
  out.synthetic_rows = smote.samples.size();

  nn::ModelParams model = nn::make_model(train.cols(), cfg.model);
  auto dual = run_stage("train", [&] { return train_dual_phase(model, train, smote.data, cfg.train); });
  out.report = std::move(dual.report);

  out.test_eval = run_stage("evaluate", [&] {
    const auto proba = nn::predict_proba(model, test.features);
    return evaluate(proba, test.labels, cfg.train.threshold);
  });

  out.bundle.arch = cfg.model;
  out.bundle.params = std::move(model);
  out.bundle.feature_names = train.feature_names;
  out.bundle.scaler = scaler;
  out.bundle.fill_values = fill;
  out.bundle.threshold = cfg.train.threshold;
  out.bundle.seed = cfg.train.seed;
  return out;
}

// --- scoring new data ---------------------------------------------------------

/// Reorders `ds` columns to `names`. Any difference in the column sets is an
/// error listing what is missing and what is unexpected.
inline FlowDataset align_features(const FlowDataset& ds, const std::vector<std::string>& names) {
  std::map<std::string, std::size_t> have;
  for (std::size_t c = 0; c < ds.feature_names.size(); ++c) have[ds.feature_names[c]] = c;
  std::vector<std::string> missing, unexpected;
  const std::set<std::string> want(names.begin(), names.end());
  for (const auto& n : names)
    if (!have.contains(n)) missing.push_back(n);
  for (const auto& n : ds.feature_names)
    if (!want.contains(n)) unexpected.push_back(n);
  if (!missing.empty() || !unexpected.empty()) {
    std::ostringstream msg;
    msg << "feature columns do not match the model";
    auto list = [&](const char* what, const std::vector<std::string>& v) {
      if (v.empty()) return;
      msg << "; " << what << ":";
      for (const auto& s : v) msg << " '" << s << "'";
    };
    list("missing", missing);
    list("unexpected", unexpected);
    throw DataError(msg.str());
  }
  FlowDataset out;
  out.feature_names = names;
  out.labels = ds.labels;
  out.features = Matrix(ds.rows(), names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    const std::size_t src = have.at(names[j]);
    for (std::size_t r = 0; r < ds.rows(); ++r) out.features(r, j) = ds.features(r, src);
  }
  return out;
}

struct PreparedRows {
  FlowDataset data;                   // scaled, model column order
  std::vector<std::size_t> row_index; // 1-based data-row numbers in the source CSV
};

/// NaN rows are dropped, +-inf replaced with the stored fill values, then
/// the stored scaler applied.
inline PreparedRows prepare_for_model(const ModelBundle& b, const FlowDataset& raw) {
  const FlowDataset aligned = align_features(raw, b.feature_names);
  PreparedRows out;
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < aligned.rows(); ++r) {
    const auto row = aligned.features.row(r);
    if (std::none_of(row.begin(), row.end(), [](double v) { return std::isnan(v); })) {
      keep.push_back(r);
      out.row_index.push_back(r + 1);
    }
  }
  out.data = apply_scaler(replace_infinite(aligned.select(keep), b.fill_values), b.scaler);
  return out;
}

inline EvalReport evaluate_file(const ModelBundle& b, const std::string& data_path, const LoadOptions& opt,
                                double threshold) {
  const auto loaded = run_stage("load", [&] { return load_flow_csv(data_path, opt); });
  if (loaded.data.rows() == 0) throw DataError("stage 'load': CSV has no data rows");
  const auto prepared = run_stage("prepare", [&] { return prepare_for_model(b, loaded.data); });
  if (prepared.data.rows() == 0) throw DataError("stage 'clean': empty dataset after cleaning");
  return run_stage("evaluate", [&] {
    const auto proba = nn::predict_proba(b.params, prepared.data.features);
    return evaluate(proba, prepared.data.labels, threshold);
  });
}

struct PredictSummary {
  std::size_t rows_in = 0;
  std::size_t rows_scored = 0;
  std::size_t flagged = 0;
};

/// Writes row,probability,label for every scoreable row.
inline PredictSummary predict_file(const ModelBundle& b, const std::string& data_path, const LoadOptions& opt,
                                   double threshold, std::ostream& out) {
  LoadOptions o = opt;
  o.require_labels = false;
  const auto loaded = run_stage("load", [&] { return load_flow_csv(data_path, o); });
  if (loaded.data.rows() == 0) throw DataError("stage 'load': CSV has no data rows");
  const auto prepared = run_stage("prepare", [&] { return prepare_for_model(b, loaded.data); });
  const auto proba = prepared.data.rows() ? nn::predict_proba(b.params, prepared.data.features) : std::vector<double>{};
  const auto labels = classify(proba, threshold);
  out << "row,probability,label\n";
  PredictSummary s{loaded.data.rows(), proba.size(), 0};
  for (std::size_t i = 0; i < proba.size(); ++i) {
    out << prepared.row_index[i] << ',' << csv::format_double(proba[i]) << ',' << labels[i] << '\n';
    s.flagged += static_cast<std::size_t>(labels[i]);
  }
  return s;
}

// --- gradient check -----------------------------------------------------------

struct NamedGradCheck {
  std::string loss;
  nn::GradCheckReport report;
};

/// Small random model (running statistics randomised too, so the infer-mode
/// batch norm is not the identity) checked under BCE, Dice and the anchored
/// loss over the phase-2 base.
inline std::vector<NamedGradCheck> run_gradcheck(const PipelineConfig& cfg, double tolerance) {
  const auto& gc = cfg.gradcheck;
  nn::ArchConfig arch = cfg.model;
  arch.stem_width = gc.width;
  arch.block_widths.assign(gc.blocks, gc.width);
  arch.init_seed = gc.seed;
  nn::ModelParams m = nn::make_model(gc.n_features, arch);
  Rng rng(derive_seed(gc.seed, 0x9c));
  for (auto& t : nn::buffers(m))
    for (auto& v : t.values) v = t.name.ends_with("running_var") ? rng.uniform(0.5, 2.0) : rng.uniform(-0.5, 0.5);
  for (auto& t : nn::parameters(m))
    if (!t.name.ends_with(".W") && !t.name.ends_with(".W_a"))
      for (auto& v : t.values) v += rng.uniform(-0.3, 0.3);

  Matrix x(gc.batch, gc.n_features);
  for (auto& v : x.flat()) v = rng.normal();
  std::vector<int> y(gc.batch);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  std::vector<double> anchors(gc.batch);
  for (auto& v : anchors) v = rng.uniform(0.05, 0.95);

  const double eps = cfg.train.eps_dice;
  std::vector<NamedGradCheck> out;
  out.push_back({"bce", nn::gradient_check(m, x, y, {nn::LossKind::bce, eps, 0.0, false}, {}, nn::Mode::infer,
                                           gc.h, tolerance)});
  out.push_back({"dice", nn::gradient_check(m, x, y, {nn::LossKind::dice, eps, 0.0, false}, {}, nn::Mode::infer,
                                            gc.h, tolerance)});
  out.push_back({"anchored_" + std::string(nn::to_string(cfg.train.loss_phase2_base)),
                 nn::gradient_check(m, x, y, {cfg.train.loss_phase2_base, eps, gc.lambda_anchor, true}, anchors,
                                    nn::Mode::infer, gc.h, tolerance)});
  return out;
}

}  // namespace ddosnet
