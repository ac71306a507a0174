#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ddosnet/csv.hpp"
#include "ddosnet/error.hpp"

namespace ddosnet {

/// Positive class is 1 (DDoS).
struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size())
    throw ShapeError("confusion: " + std::to_string(pred.size()) + " predictions for " +
                     std::to_string(truth.size()) + " labels");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (truth[i] == 1) {
      (pred[i] == 1 ? c.tp : c.fn)++;
    } else {
      (pred[i] == 1 ? c.fp : c.tn)++;
    }
  }
  return c;
}

/// A ratio whose denominator may vanish; such cases report 0 and set `degenerate`.
struct Ratio {
  double value = 0.0;
  bool degenerate = false;
};

inline Ratio safe_ratio(double num, double den) {
  if (den == 0.0) return {0.0, true};
  return {num / den, false};
}

inline Ratio precision(const ConfusionCounts& c) {
  return safe_ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
}
inline Ratio recall(const ConfusionCounts& c) {
  return safe_ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
}
inline Ratio f1(double p, double r) { return safe_ratio(2.0 * p * r, p + r); }
inline Ratio accuracy(const ConfusionCounts& c) {
  return safe_ratio(static_cast<double>(c.tp + c.tn), static_cast<double>(c.total()));
}

/// Area under the ROC curve: sweep thresholds over the distinct scores in
/// descending order and integrate TPR over FPR with the trapezoid rule.
/// Tied scores form one step, which is what counts tied pairs as 1/2.
inline double roc_auc(std::span<const double> scores, std::span<const int> truth) {
  if (scores.size() != truth.size()) throw ShapeError("roc_auc: length mismatch");
  const auto pos = static_cast<std::uint64_t>(std::count(truth.begin(), truth.end(), 1));
  const std::uint64_t neg = truth.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("AUC undefined: truth contains a single class");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // Accumulate in integer units: area * pos * neg.
  std::uint64_t tp = 0, fp = 0;
  std::uint64_t twice_area = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t dtp = 0, dfp = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (truth[order[j]] == 1 ? dtp : dfp)++;
      ++j;
    }
    twice_area += dfp * (2 * tp + dtp);  // trapezoid: width dfp, heights tp and tp + dtp
    tp += dtp;
    fp += dfp;
    i = j;
  }
  return static_cast<double>(twice_area) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

struct EvalReport {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double roc_auc = 0.0;
  bool roc_auc_defined = true;
  bool precision_degenerate = false;
  bool recall_degenerate = false;
  bool f1_degenerate = false;
};

inline EvalReport evaluate(std::span<const double> proba, std::span<const int> truth, double threshold) {
  if (proba.empty()) throw DataError("cannot evaluate an empty prediction set");
  EvalReport r;
  std::vector<int> pred(proba.size());
  for (std::size_t i = 0; i < proba.size(); ++i) pred[i] = proba[i] > threshold ? 1 : 0;
  r.counts = confusion(pred, truth);
  r.accuracy = ddosnet::accuracy(r.counts).value;
  const auto p = ddosnet::precision(r.counts);
  const auto rc = ddosnet::recall(r.counts);
  const auto f = ddosnet::f1(p.value, rc.value);
  r.precision = p.value;
  r.recall = rc.value;
  r.f1 = f.value;
  r.precision_degenerate = p.degenerate;
  r.recall_degenerate = rc.degenerate;
  r.f1_degenerate = f.degenerate;
  const auto pos = std::count(truth.begin(), truth.end(), 1);
  if (pos == 0 || static_cast<std::size_t>(pos) == truth.size()) {
    r.roc_auc_defined = false;
    r.roc_auc = 0.0;
  } else {
    r.roc_auc = ddosnet::roc_auc(proba, truth);
  }
  return r;
}

/// key=value lines, full precision.
inline void write_eval_kv(std::ostream& out, const EvalReport& r) {
  out << "tp=" << r.counts.tp << '\n'
      << "fp=" << r.counts.fp << '\n'
      << "tn=" << r.counts.tn << '\n'
      << "fn=" << r.counts.fn << '\n'
      << "accuracy=" << csv::format_double(r.accuracy) << '\n'
      << "precision=" << csv::format_double(r.precision) << '\n'
      << "recall=" << csv::format_double(r.recall) << '\n'
      << "f1=" << csv::format_double(r.f1) << '\n'
      << "roc_auc=" << (r.roc_auc_defined ? csv::format_double(r.roc_auc) : std::string("undefined")) << '\n'
      << "precision_degenerate=" << r.precision_degenerate << '\n'
      << "recall_degenerate=" << r.recall_degenerate << '\n'
      << "f1_degenerate=" << r.f1_degenerate << '\n';
}

inline void write_eval_table(std::ostream& out, const EvalReport& r) {
  auto pct = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << 100.0 * v;
    return s.str();
  };
  out << "Metric      Value (%)\n"
      << "----------  ---------\n"
      << "Accuracy    " << pct(r.accuracy) << '\n'
      << "Precision   " << pct(r.precision) << (r.precision_degenerate ? "  (no positive predictions)" : "") << '\n'
      << "Recall      " << pct(r.recall) << (r.recall_degenerate ? "  (no positive samples)" : "") << '\n'
      << "F1-Score    " << pct(r.f1) << '\n'
      << "ROC-AUC     " << (r.roc_auc_defined ? pct(r.roc_auc) : std::string("undefined")) << '\n'
      << "Confusion   tp=" << r.counts.tp << " fp=" << r.counts.fp << " tn=" << r.counts.tn
      << " fn=" << r.counts.fn << '\n';
}

}  // namespace ddosnet
