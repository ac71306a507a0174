#pragma once

// Dual-phase training: phase 1 fits the original (imbalanced) training set;
// phase 2 refines on the oversampled set while penalising drift away from
// the frozen phase-1 predictions.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "ddosnet/csv.hpp"
#include "ddosnet/error.hpp"
#include "ddosnet/flow_data.hpp"
#include "ddosnet/nn/adagrad.hpp"
#include "ddosnet/nn/losses.hpp"
#include "ddosnet/nn/model.hpp"
#include "ddosnet/random.hpp"

namespace ddosnet {

struct TrainConfig {
  std::size_t epochs_phase1 = 50;
  std::size_t epochs_phase2 = 50;
  std::size_t batch_size = 256;
  double eta = 0.01;
  double lambda_anchor = 0.1;
  nn::LossKind loss_phase1 = nn::LossKind::bce;
  nn::LossKind loss_phase2_base = nn::LossKind::dice;
  double threshold = 0.5;
  std::uint64_t seed = 42;
  double eps_dice = 1.0;
  double eps_opt = 1e-10;
  bool reset_optimizer_between_phases = true;

  void validate() const {
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (!(eta > 0.0)) throw ConfigError("train.eta must be > 0");
    if (!(lambda_anchor >= 0.0)) throw ConfigError("train.lambda_anchor must be >= 0");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("train.threshold must lie in (0,1)");
    if (!(eps_dice > 0.0)) throw ConfigError("train.eps_dice must be > 0");
    if (!(eps_opt >= 0.0)) throw ConfigError("train.eps_opt must be >= 0");
  }
};

struct EpochRecord {
  int phase = 1;
  std::size_t epoch = 0;  // 1-based within the phase
  double loss = 0.0;      // row-weighted mean of batch losses
  double accuracy = 0.0;  // of the train-mode predictions made during the epoch

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainReport {
  std::vector<EpochRecord> records;
  double wall_seconds = 0.0;

  void append(const TrainReport& other) {
    records.insert(records.end(), other.records.begin(), other.records.end());
    wall_seconds += other.wall_seconds;
  }
};

/// phase,epoch,loss,accuracy
inline void write_train_report_csv(std::ostream& out, const TrainReport& r) {
  out << "phase,epoch,loss,accuracy\n";
  for (const auto& e : r.records)
    out << e.phase << ',' << e.epoch << ',' << csv::format_double(e.loss) << ','
        << csv::format_double(e.accuracy) << '\n';
}

/// 1 iff proba > threshold.
inline std::vector<int> classify(std::span<const double> proba, double threshold) {
  std::vector<int> out(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i) out[i] = proba[i] > threshold ? 1 : 0;
  return out;
}

/// Shuffled mini-batches of `batch_size`; the trailing partial batch is kept,
/// except that a single leftover row joins the previous batch because
/// train-mode batch norm needs two rows. A batch size of 1 acts as 2.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  batch_size = std::max<std::size_t>(batch_size, 2);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    if (end - start == 1 && !batches.empty()) {
      batches.back().push_back(order[start]);
    } else {
      batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                           order.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  return batches;
}

/// Mini-batch Adagrad on `objective` for `epochs` epochs. Epoch e shuffles
/// with a stream derived from (cfg.seed, epoch_offset + e), so a run split
/// across calls follows the same schedule as one long run.
inline TrainReport run_epochs(nn::ModelParams& model, const FlowDataset& data,
                              const nn::Objective& objective, std::span<const double> anchors,
                              const TrainConfig& cfg, nn::OptimizerState& opt, int phase,
                              std::size_t epochs, std::size_t epoch_offset) {
  cfg.validate();
  TrainReport report;
  if (epochs == 0) return report;
  const std::size_t n = data.rows();
  if (n == 0) throw DataError("training set is empty");
  if (n < 2) throw DataError("training needs at least 2 rows");
  if (data.labels.size() != n) throw DataError("training set is unlabeled");
  if (data.cols() != model.input_width())
    throw ShapeError("model expects " + std::to_string(model.input_width()) + " features, dataset has " +
                     std::to_string(data.cols()));
  if (objective.anchored && anchors.size() != n)
    throw ShapeError("anchor vector has " + std::to_string(anchors.size()) + " entries for " +
                     std::to_string(n) + " rows");

  const auto t0 = std::chrono::steady_clock::now();
  nn::ForwardCache cache;
  std::vector<int> y;
  std::vector<double> a;
  for (std::size_t e = 0; e < epochs; ++e) {
    Rng rng(derive_seed(cfg.seed, 0xe90c0000ULL + epoch_offset + e));
    const auto batches = make_batches(n, cfg.batch_size, rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (const auto& idx : batches) {
      const Matrix xb = data.features.select_rows(idx);
      y.clear();
      a.clear();
      for (auto i : idx) {
        y.push_back(data.labels[i]);
        if (objective.anchored) a.push_back(anchors[i]);
      }
      const auto logits = nn::forward(model, xb, nn::Mode::train, &cache);
      const auto loss = objective(logits, y, a);
      if (!std::isfinite(loss.value)) throw DataError("training diverged: non-finite loss");
      const auto grads = nn::backward(model, cache, loss.grad);
      nn::update_running_stats(model, cache);
      nn::adagrad_step(opt, model, grads);
      loss_sum += loss.value * static_cast<double>(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i)
        if ((nn::sigmoid(logits[i]) > cfg.threshold ? 1 : 0) == y[i]) ++correct;
    }
    report.records.push_back({phase, e + 1, loss_sum / static_cast<double>(n),
                              static_cast<double>(correct) / static_cast<double>(n)});
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

inline nn::OptimizerState fresh_optimizer(const nn::ModelParams& model, const TrainConfig& cfg) {
  return nn::make_optimizer(model, cfg.eta, cfg.eps_opt);
}

/// Phase 1: plain `loss_phase1` training on the original training set.
inline TrainReport train_phase1(nn::ModelParams& model, const FlowDataset& data, const TrainConfig& cfg,
                                nn::OptimizerState* opt = nullptr) {
  if (data.rows() == 0) throw DataError("phase 1: empty dataset");
  auto local = fresh_optimizer(model, cfg);
  nn::Objective obj{cfg.loss_phase1, cfg.eps_dice, 0.0, false};
  return run_epochs(model, data, obj, {}, cfg, opt ? *opt : local, 1, cfg.epochs_phase1, 0);
}

/// Frozen phase-1 predictions on every row of the balanced set, synthetic
/// rows included.
inline std::vector<double> compute_anchors(const nn::ModelParams& phase1_model, const FlowDataset& balanced) {
  if (balanced.cols() != phase1_model.input_width())
    throw ShapeError("compute_anchors: model expects " + std::to_string(phase1_model.input_width()) +
                     " features, dataset has " + std::to_string(balanced.cols()));
  return nn::predict_proba(phase1_model, balanced.features);
}

/// Phase 2: anchored loss (base `loss_phase2_base`, weight lambda_anchor) on
/// the balanced set. Each batch penalises against its own anchor slice.
inline TrainReport train_phase2(nn::ModelParams& model, const FlowDataset& balanced,
                                std::span<const double> anchors, const TrainConfig& cfg,
                                nn::OptimizerState* opt = nullptr) {
  if (anchors.size() != balanced.rows())
    throw ShapeError("phase 2: " + std::to_string(anchors.size()) + " anchors for " +
                     std::to_string(balanced.rows()) + " rows");
  auto local = fresh_optimizer(model, cfg);
  nn::Objective obj{cfg.loss_phase2_base, cfg.eps_dice, cfg.lambda_anchor, true};
  return run_epochs(model, balanced, obj, anchors, cfg, opt ? *opt : local, 2, cfg.epochs_phase2,
                    cfg.epochs_phase1);
}

struct DualPhaseResult {
  TrainReport report;
  std::vector<double> anchors;
};

/// Phase 1 on `original`, anchors on `balanced`, phase 2 on `balanced`. The
/// Adagrad accumulator restarts at the phase boundary unless
/// cfg.reset_optimizer_between_phases is false.
inline DualPhaseResult train_dual_phase(nn::ModelParams& model, const FlowDataset& original,
                                        const FlowDataset& balanced, const TrainConfig& cfg) {
  DualPhaseResult res;
  auto opt = fresh_optimizer(model, cfg);
  res.report = train_phase1(model, original, cfg, &opt);
  res.anchors = compute_anchors(model, balanced);
  if (cfg.reset_optimizer_between_phases) opt = fresh_optimizer(model, cfg);
  res.report.append(train_phase2(model, balanced, res.anchors, cfg, &opt));
  return res;
}

}  // namespace ddosnet
