#pragma once

// Synthetic minority oversampling: new minority rows are drawn on the
// segment between a minority row and one of its k nearest minority
// neighbours.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "ddosnet/csv.hpp"
#include "ddosnet/error.hpp"
#include "ddosnet/flow_data.hpp"
#include "ddosnet/matrix.hpp"
#include "ddosnet/random.hpp"

namespace ddosnet {

struct SmoteConfig {
  std::size_t k = 5;
  std::uint64_t seed = 42;
  double target_ratio = 1.0;  // minority / majority after balancing

  void validate() const {
    if (k < 1) throw ConfigError("smote.k must be >= 1");
    if (!(target_ratio > 0.0 && target_ratio <= 1.0))
      throw ConfigError("smote.target_ratio must lie in (0,1]");
  }
};

struct SyntheticSample {
  std::vector<double> vector;
  std::size_t parent_index = 0;    // row within the input dataset
  std::size_t neighbor_index = 0;  // row within the input dataset
  double lambda_interp = 0.0;
};

struct NeighborTable {
  std::size_t k = 0;                         // neighbours per row actually used
  bool clamped = false;                      // k was reduced to rows - 1
  std::vector<std::vector<std::size_t>> at;  // at[i] = k nearest rows of row i, nearest first
};

/// Brute-force k nearest neighbours among the rows of `points` (self
/// excluded), by squared Euclidean distance with ties going to the lower row.
inline NeighborTable minority_neighbors(const Matrix& points, std::size_t k) {
  const std::size_t n = points.rows();
  if (n < 2) throw DataError("SMOTE requires >=2 minority samples");
  if (k < 1) throw ConfigError("k must be >= 1");
  NeighborTable table;
  table.clamped = k > n - 1;
  table.k = std::min(k, n - 1);
  table.at.resize(n);

  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    const auto xi = points.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto xj = points.row(j);
      double d = 0.0;
      for (std::size_t c = 0; c < xi.size(); ++c) {
        const double t = xi[c] - xj[c];
        d += t * t;
      }
      dist.emplace_back(d, j);
    }
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(table.k), dist.end());
    auto& out = table.at[i];
    out.reserve(table.k);
    for (std::size_t m = 0; m < table.k; ++m) out.push_back(dist[m].second);
  }
  return table;
}

/// x_i + lambda * (x_zi - x_i), elementwise.
inline std::vector<double> synthesize(std::span<const double> x_i, std::span<const double> x_zi,
                                      double lambda_interp) {
  if (x_i.size() != x_zi.size()) throw ShapeError("synthesize: dimension mismatch");
  std::vector<double> out(x_i.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = x_i[c] + lambda_interp * (x_zi[c] - x_i[c]);
  return out;
}

struct SmoteResult {
  FlowDataset data;  // original rows first, synthetic rows appended
  std::vector<SyntheticSample> samples;
  int minority_label = kAttack;
  std::size_t k_used = 0;
  std::vector<std::string> warnings;
};

/// Raises the minority class to round(target_ratio * majority) rows.
/// Parents are visited cyclically in minority-row order; each visit draws
/// one of the parent's k neighbours and lambda ~ U[0,1) from the seeded stream.
inline SmoteResult oversample(const FlowDataset& ds, const SmoteConfig& cfg) {
  cfg.validate();
  if (ds.labels.size() != ds.rows()) throw DataError("oversample: dataset is unlabeled");
  const std::size_t n_attack = ds.count(kAttack);
  const std::size_t n_benign = ds.count(kBenign);
  if (n_attack == 0 || n_benign == 0) throw DataError("oversample: both classes must be present");

  SmoteResult res;
  res.data = ds;
  res.minority_label = n_attack <= n_benign ? kAttack : kBenign;
  const std::size_t n_min = std::min(n_attack, n_benign);
  const std::size_t n_maj = std::max(n_attack, n_benign);
  const auto target =
      static_cast<std::size_t>(std::llround(cfg.target_ratio * static_cast<double>(n_maj)));
  if (n_min >= target) return res;

  std::vector<std::size_t> minority_rows;
  for (std::size_t r = 0; r < ds.rows(); ++r)
    if (ds.labels[r] == res.minority_label) minority_rows.push_back(r);
  const Matrix minority = ds.features.select_rows(minority_rows);
  const auto table = minority_neighbors(minority, cfg.k);
  res.k_used = table.k;
  if (table.clamped)
    res.warnings.push_back("SMOTE k=" + std::to_string(cfg.k) + " clamped to " +
                           std::to_string(table.k) + " (only " + std::to_string(n_min) +
                           " minority rows)");

  Rng rng(derive_seed(cfg.seed, 0x53307e));
  const std::size_t needed = target - n_min;
  res.samples.reserve(needed);
  for (std::size_t s = 0; s < needed; ++s) {
    const std::size_t p = s % n_min;
    const std::size_t q = table.at[p][static_cast<std::size_t>(rng.below(table.k))];
    const double lambda = rng.uniform();
    SyntheticSample sample;
    sample.vector = synthesize(minority.row(p), minority.row(q), lambda);
    sample.parent_index = minority_rows[p];
    sample.neighbor_index = minority_rows[q];
    sample.lambda_interp = lambda;
    res.data.features.append_row(sample.vector);
    res.data.labels.push_back(res.minority_label);
    res.samples.push_back(std::move(sample));
  }
  return res;
}

/// Audit trail: one line per synthetic row.
inline void write_smote_audit(const std::string& path, const std::vector<SyntheticSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "parent_index,neighbor_index,lambda_interp\n";
  for (const auto& s : samples)
    out << s.parent_index << ',' << s.neighbor_index << ',' << csv::format_double(s.lambda_interp)
        << '\n';
}

}  // namespace ddosnet
