#pragma once

// Flow-record datasets: CSV ingestion, cleaning, train/test splitting and
// standard scaling.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ddosnet/csv.hpp"
#include "ddosnet/error.hpp"
#include "ddosnet/matrix.hpp"
#include "ddosnet/random.hpp"

namespace ddosnet {

inline constexpr int kBenign = 0;
inline constexpr int kAttack = 1;

/// Feature matrix (one row per flow) with named columns and a binary label
/// per row: 0 = benign, 1 = DDoS. An unlabeled dataset has empty `labels`.
struct FlowDataset {
  std::vector<std::string> feature_names;
  Matrix features;
  std::vector<int> labels;

  std::size_t rows() const { return features.rows(); }
  std::size_t cols() const { return features.cols(); }
  bool labeled() const { return !labels.empty() || features.rows() == 0; }

  std::size_t count(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
  }

  FlowDataset select(std::span<const std::size_t> indices) const {
    FlowDataset out;
    out.feature_names = feature_names;
    out.features = features.select_rows(indices);
    if (!labels.empty()) {
      out.labels.reserve(indices.size());
      for (auto i : indices) out.labels.push_back(labels[i]);
    }
    return out;
  }

  friend bool operator==(const FlowDataset&, const FlowDataset&) = default;
};

struct LoadOptions {
  std::string label_column = "Label";
  std::string benign_token = "BENIGN";
  std::string attack_token = "DDoS";
  // When false, a missing label column is accepted and labels stay empty.
  bool require_labels = true;
};

struct LoadedFlows {
  FlowDataset data;
  std::vector<std::string> dropped_columns;  // judged non-numeric
  std::size_t unparsed_cells = 0;            // numeric-column cells that became NaN
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool token_equals(std::string_view cell, std::string_view token) {
  return lower(csv::trim(cell)) == lower(csv::trim(token));
}

// Trims header names and disambiguates repeats as name.1, name.2, ...
inline std::vector<std::string> normalize_header(const std::vector<std::string>& raw) {
  std::vector<std::string> names;
  std::unordered_set<std::string> seen;
  for (const auto& r : raw) {
    std::string base(csv::trim(r));
    std::string name = base;
    for (int k = 1; seen.contains(name); ++k) name = base + "." + std::to_string(k);
    seen.insert(name);
    names.push_back(std::move(name));
  }
  return names;
}

}  // namespace detail

/// Reads a flow CSV. Columns whose non-empty cells mostly fail to parse as
/// numbers (addresses, timestamps, flow ids) are dropped and reported; in
/// numeric columns an unparseable or empty cell becomes NaN.
inline LoadedFlows load_flow_csv(std::istream& in, const LoadOptions& opt = {}) {
  csv::Reader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw DataError("empty CSV: no header row");
  const auto header = detail::normalize_header(fields);

  std::ptrdiff_t label_idx = -1;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (detail::lower(header[c]) == detail::lower(csv::trim(opt.label_column))) label_idx = static_cast<std::ptrdiff_t>(c);
  if (label_idx < 0 && opt.require_labels)
    throw DataError("label column '" + opt.label_column + "' not found in header");

  const std::size_t ncol = header.size();
  std::vector<std::vector<double>> columns(ncol);
  std::vector<std::size_t> parsed(ncol, 0), failed(ncol, 0);
  std::vector<int> labels;
  std::size_t row = 0;
  while (reader.next(fields)) {
    if (fields.size() == 1 && csv::trim(fields[0]).empty()) continue;  // blank line
    ++row;
    if (fields.size() != ncol)
      throw DataError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(ncol));
    for (std::size_t c = 0; c < ncol; ++c) {
      if (static_cast<std::ptrdiff_t>(c) == label_idx) {
        if (!opt.require_labels) continue;
        if (detail::token_equals(fields[c], opt.benign_token)) {
          labels.push_back(kBenign);
        } else if (detail::token_equals(fields[c], opt.attack_token)) {
          labels.push_back(kAttack);
        } else {
          throw DataError("row " + std::to_string(row) + ": unknown label token '" + fields[c] +
                          "' (expected '" + opt.benign_token + "' or '" + opt.attack_token + "')");
        }
        continue;
      }
      const auto v = csv::parse_double(fields[c]);
      if (v) {
        ++parsed[c];
        columns[c].push_back(*v);
      } else {
        if (!csv::trim(fields[c]).empty()) ++failed[c];
        columns[c].push_back(std::numeric_limits<double>::quiet_NaN());
      }
    }
  }

  LoadedFlows out;
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < ncol; ++c) {
    if (static_cast<std::ptrdiff_t>(c) == label_idx) continue;
    if (parsed[c] > failed[c]) {
      keep.push_back(c);
      out.unparsed_cells += row - parsed[c];
    } else {
      out.dropped_columns.push_back(header[c]);
    }
  }
  if (keep.empty()) throw DataError("no numeric feature columns in CSV");

  out.data.features = Matrix(row, keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.data.feature_names.push_back(header[keep[j]]);
    for (std::size_t r = 0; r < row; ++r) out.data.features(r, j) = columns[keep[j]][r];
  }
  out.data.labels = std::move(labels);
  return out;
}

inline LoadedFlows load_flow_csv(const std::string& path, const LoadOptions& opt = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return load_flow_csv(in, opt);
}

/// Writes features plus the encoded label column (0/1) under `label_column`.
inline void write_flow_csv(std::ostream& out, const FlowDataset& ds,
                           const std::string& label_column = "Label") {
  auto header = ds.feature_names;
  if (!ds.labels.empty()) header.push_back(label_column);
  csv::write_row(out, header);
  std::vector<std::string> cells;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    cells.clear();
    for (double v : ds.features.row(r)) cells.push_back(csv::format_double(v));
    if (!ds.labels.empty()) cells.push_back(std::to_string(ds.labels[r]));
    csv::write_row(out, cells);
  }
}

inline void write_flow_csv(const std::string& path, const FlowDataset& ds,
                           const std::string& label_column = "Label") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_flow_csv(out, ds, label_column);
}

// --- cleaning ---------------------------------------------------------------

inline FlowDataset drop_nan_rows(const FlowDataset& ds) {
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto row = ds.features.row(r);
    if (std::none_of(row.begin(), row.end(), [](double v) { return std::isnan(v); }))
      keep.push_back(r);
  }
  return ds.select(keep);
}

/// Per-column mean of the finite entries. Throws if a column has none.
inline std::vector<double> finite_column_means(const FlowDataset& ds) {
  std::vector<double> means(ds.cols(), 0.0);
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      const double v = ds.features(r, c);
      if (std::isfinite(v)) {
        sum += v;
        ++n;
      }
    }
    if (n == 0) throw DataError("column '" + ds.feature_names[c] + "' has no finite values");
    means[c] = sum / static_cast<double>(n);
  }
  return means;
}

inline FlowDataset replace_infinite(FlowDataset ds, std::span<const double> fill) {
  if (fill.size() != ds.cols()) throw ShapeError("replace_infinite: fill width mismatch");
  for (std::size_t r = 0; r < ds.rows(); ++r)
    for (std::size_t c = 0; c < ds.cols(); ++c)
      if (std::isinf(ds.features(r, c))) ds.features(r, c) = fill[c];
  return ds;
}

/// Drops rows holding any NaN, then replaces each +-inf by the mean of the
/// finite values remaining in its column.
inline FlowDataset clean(const FlowDataset& ds) {
  auto out = drop_nan_rows(ds);
  if (out.rows() == 0) throw DataError("empty dataset after cleaning");
  const auto means = finite_column_means(out);
  return replace_infinite(std::move(out), means);
}

// --- splitting --------------------------------------------------------------

struct SplitConfig {
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
  bool stratify = false;

  void validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
      throw ConfigError("test_fraction must lie in (0,1)");
  }
};

struct Split {
  FlowDataset train;
  FlowDataset test;
  std::vector<std::size_t> train_rows;  // indices into the input
  std::vector<std::size_t> test_rows;
};

namespace detail {
inline std::size_t test_count(std::size_t n, double fraction) {
  auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * fraction));
  return std::clamp<std::size_t>(k, 1, n - 1);
}
}  // namespace detail

/// Seeded shuffle split. The test part gets round(n * test_fraction) rows,
/// clamped so both parts are non-empty.
inline Split train_test_split(const FlowDataset& ds, const SplitConfig& cfg) {
  cfg.validate();
  const std::size_t n = ds.rows();
  if (n < 2) throw DataError("train_test_split needs at least 2 rows");
  Rng rng(derive_seed(cfg.seed, 0x5b117));
  Split out;
  if (!cfg.stratify || ds.labels.empty()) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    const std::size_t nt = detail::test_count(n, cfg.test_fraction);
    out.test_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nt));
    out.train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(nt), order.end());
  } else {
    for (int label : {kBenign, kAttack}) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < n; ++i)
        if (ds.labels[i] == label) members.push_back(i);
      rng.shuffle(std::span(members));
      auto nt = static_cast<std::size_t>(
          std::llround(static_cast<double>(members.size()) * cfg.test_fraction));
      nt = std::min(nt, members.size());
      out.test_rows.insert(out.test_rows.end(), members.begin(),
                           members.begin() + static_cast<std::ptrdiff_t>(nt));
      out.train_rows.insert(out.train_rows.end(),
                            members.begin() + static_cast<std::ptrdiff_t>(nt), members.end());
    }
    if (out.test_rows.empty() || out.train_rows.empty())
      throw DataError("stratified split produced an empty partition");
  }
  out.train = ds.select(out.train_rows);
  out.test = ds.select(out.test_rows);
  return out;
}

// --- standard scaling -------------------------------------------------------

struct ScalerParams {
  std::vector<double> means;
  std::vector<double> stds;
  std::size_t fitted_on = 0;

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;
};

/// Population mean and standard deviation (divisor n) per column, two-pass.
inline ScalerParams fit_scaler(const FlowDataset& train) {
  if (train.rows() == 0) throw DataError("fit_scaler: empty training set");
  const auto n = static_cast<double>(train.rows());
  ScalerParams s;
  s.fitted_on = train.rows();
  s.means.assign(train.cols(), 0.0);
  s.stds.assign(train.cols(), 0.0);
  for (std::size_t c = 0; c < train.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < train.rows(); ++r) sum += train.features(r, c);
    const double mu = sum / n;
    double ss = 0.0;
    for (std::size_t r = 0; r < train.rows(); ++r) {
      const double d = train.features(r, c) - mu;
      ss += d * d;
    }
    s.means[c] = mu;
    s.stds[c] = std::sqrt(ss / n);
  }
  return s;
}

/// x' = (x - mean) / std per column; zero-variance columns map to 0.
inline FlowDataset apply_scaler(FlowDataset ds, const ScalerParams& s) {
  if (s.means.size() != ds.cols() || s.stds.size() != ds.cols())
    throw ShapeError("apply_scaler: dataset has " + std::to_string(ds.cols()) +
                     " columns, scaler has " + std::to_string(s.means.size()));
  for (std::size_t r = 0; r < ds.rows(); ++r)
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      double& v = ds.features(r, c);
      v = s.stds[c] > 0.0 ? (v - s.means[c]) / s.stds[c] : 0.0;
    }
  return ds;
}

}  // namespace ddosnet
