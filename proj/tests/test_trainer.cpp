#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ddosnet/random.hpp"
#include "ddosnet/smote.hpp"
#include "ddosnet/trainer.hpp"

using namespace ddosnet;
using namespace ddosnet::nn;

namespace {

FlowDataset gaussian_blobs(std::size_t n, double gap, std::uint64_t seed, std::size_t n_attack = 0) {
  if (n_attack == 0) n_attack = n / 2;
  Rng rng(seed);
  FlowDataset ds;
  ds.feature_names = {"a", "b"};
  for (std::size_t i = 0; i < n; ++i) {
    const bool attack = i >= n - n_attack;
    const double c = attack ? gap / 2 : -gap / 2;
    ds.features.append_row(std::vector<double>{c + rng.normal(), c + rng.normal()});
    ds.labels.push_back(attack ? kAttack : kBenign);
  }
  return ds;
}

ArchConfig tiny_arch() {
  ArchConfig a;
  a.stem_width = 8;
  a.block_widths = {8};
  a.init_seed = 11;
  return a;
}

TrainConfig quick_cfg(std::size_t e1, std::size_t e2) {
  TrainConfig c;
  c.epochs_phase1 = e1;
  c.epochs_phase2 = e2;
  c.batch_size = 32;
  c.eta = 0.05;
  c.seed = 9;
  return c;
}

double mean_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

}  // namespace

TEST(Classify, StrictThreshold) {
  const std::vector<double> p{0.7, 0.5, 0.49, 0.0, 1e-300};
  EXPECT_EQ(classify(p, 0.5), (std::vector<int>{1, 0, 0, 0, 0}));
  EXPECT_EQ(classify(p, 0.0), (std::vector<int>{1, 1, 1, 0, 1}));
}

TEST(Batches, CoverEveryRowOnce) {
  Rng rng(1);
  for (std::size_t n : {2u, 7u, 64u, 65u, 100u}) {
    for (std::size_t bs : {1u, 3u, 32u, 64u, 256u}) {
      const auto batches = make_batches(n, bs, rng);
      std::multiset<std::size_t> seen;
      for (const auto& b : batches) {
        EXPECT_GE(b.size(), 2u) << "n=" << n << " bs=" << bs;
        EXPECT_LE(b.size(), std::max<std::size_t>(bs, 2) + 1);
        seen.insert(b.begin(), b.end());
      }
      ASSERT_EQ(seen.size(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(seen.count(i), 1u);
    }
  }
}

TEST(Batches, SingletonTailMergesIntoPrevious) {
  Rng rng(2);
  const auto b = make_batches(65, 32, rng);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b[0].size(), 32u);
  EXPECT_EQ(b[1].size(), 33u);
  Rng rng2(2);
  const auto c = make_batches(70, 32, rng2);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[2].size(), 6u);
}

TEST(TrainConfigValidation, RejectsBadValues) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.threshold = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.lambda_anchor = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.eta = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Phase1, ZeroEpochsIsNoOp) {
  const auto d = gaussian_blobs(40, 4, 1);
  auto m = make_model(2, tiny_arch());
  const auto before = m;
  const auto r = train_phase1(m, d, quick_cfg(0, 0));
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(m, before);
}

TEST(Phase1, SeparableBlobsReachHighAccuracy) {
  const auto d = gaussian_blobs(200, 8, 2);
  auto m = make_model(2, tiny_arch());
  const auto r = train_phase1(m, d, quick_cfg(200, 0));
  ASSERT_EQ(r.records.size(), 200u);
  std::size_t reached = 0;
  for (const auto& e : r.records) {
    EXPECT_TRUE(std::isfinite(e.loss));
    if (e.accuracy >= 0.99 && reached == 0) reached = e.epoch;
  }
  EXPECT_GT(reached, 0u) << "final train accuracy " << r.records.back().accuracy;
  const auto pred = classify(predict_proba(m, d.features), 0.5);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == d.labels[i];
  EXPECT_GE(static_cast<double>(ok) / 200.0, 0.99);
}

TEST(Phase1, DeterministicUnderSeed) {
  const auto d = gaussian_blobs(90, 3, 3);
  auto a = make_model(2, tiny_arch());
  auto b = make_model(2, tiny_arch());
  const auto ra = train_phase1(a, d, quick_cfg(5, 0));
  const auto rb = train_phase1(b, d, quick_cfg(5, 0));
  EXPECT_EQ(a, b);
  EXPECT_EQ(ra.records, rb.records);
  auto c = make_model(2, tiny_arch());
  auto cfg = quick_cfg(5, 0);
  cfg.seed = 10;
  train_phase1(c, d, cfg);
  EXPECT_NE(a, c);
}

TEST(Phase1, Errors) {
  auto m = make_model(2, tiny_arch());
  EXPECT_THROW(train_phase1(m, FlowDataset{}, quick_cfg(1, 0)), DataError);
  auto wide = gaussian_blobs(10, 2, 1);
  wide.features = Matrix(10, 3, 0.0);
  wide.feature_names.push_back("c");
  EXPECT_THROW(train_phase1(m, wide, quick_cfg(1, 0)), ShapeError);
}

TEST(Anchors, RangeAndDeterminism) {
  const auto d = gaussian_blobs(80, 3, 4, 10);
  auto m = make_model(2, tiny_arch());
  train_phase1(m, d, quick_cfg(3, 0));
  const auto bal = oversample(d, {5, 1, 1.0}).data;
  const auto a = compute_anchors(m, bal);
  ASSERT_EQ(a.size(), bal.rows());
  for (double v : a) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_EQ(a, compute_anchors(m, bal));
  // original rows come first in the balanced set
  const auto direct = predict_proba(m, d.features);
  for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(a[i], direct[i]);
}

TEST(Phase2, ReportTagsAndLengthChecks) {
  const auto d = gaussian_blobs(60, 3, 5, 12);
  const auto bal = oversample(d, {3, 1, 1.0}).data;
  auto m = make_model(2, tiny_arch());
  const auto res = train_dual_phase(m, d, bal, quick_cfg(2, 4));
  ASSERT_EQ(res.report.records.size(), 6u);
  std::size_t p2 = 0;
  for (const auto& e : res.report.records)
    if (e.phase == 2) ++p2;
  EXPECT_EQ(p2, 4u);
  EXPECT_EQ(res.report.records[2].epoch, 1u);
  const std::vector<double> short_anchors(3, 0.5);
  EXPECT_THROW(train_phase2(m, bal, short_anchors, quick_cfg(1, 1)), ShapeError);
}

TEST(Phase2, ZeroLambdaEqualsPlainTraining) {
  const auto d = gaussian_blobs(70, 3, 6, 14);
  const auto bal = oversample(d, {3, 1, 1.0}).data;
  auto cfg = quick_cfg(3, 5);
  cfg.lambda_anchor = 0.0;
  auto start = make_model(2, tiny_arch());
  train_phase1(start, d, cfg);
  const auto anchors = compute_anchors(start, bal);

  auto anchored = start;
  const auto ra = train_phase2(anchored, bal, anchors, cfg);

  auto plain = start;
  auto opt = fresh_optimizer(plain, cfg);
  const Objective obj{cfg.loss_phase2_base, cfg.eps_dice, 0.0, false};
  const auto rp = run_epochs(plain, bal, obj, {}, cfg, opt, 2, cfg.epochs_phase2, cfg.epochs_phase1);
  EXPECT_EQ(anchored, plain);
  EXPECT_EQ(ra.records, rp.records);
}

TEST(Phase2, DegeneratesToSinglePhaseForTwiceTheEpochs) {
  const auto d = gaussian_blobs(64, 3, 7, 20);
  const auto bal = oversample(d, {3, 1, 1.0}).data;
  auto cfg = quick_cfg(4, 4);
  cfg.lambda_anchor = 0.0;
  cfg.loss_phase2_base = cfg.loss_phase1;
  cfg.reset_optimizer_between_phases = false;

  auto dual = make_model(2, tiny_arch());
  const auto rd = train_dual_phase(dual, bal, bal, cfg);

  auto single = make_model(2, tiny_arch());
  auto long_cfg = cfg;
  long_cfg.epochs_phase1 = 8;
  const auto rs = train_phase1(single, bal, long_cfg);
  EXPECT_EQ(dual, single);
  ASSERT_EQ(rd.report.records.size(), rs.records.size());
  for (std::size_t i = 0; i < rs.records.size(); ++i) EXPECT_EQ(rd.report.records[i].loss, rs.records[i].loss);

  // With the accumulator reset the trajectories part ways.
  cfg.reset_optimizer_between_phases = true;
  auto reset = make_model(2, tiny_arch());
  train_dual_phase(reset, bal, bal, cfg);
  EXPECT_NE(reset, single);
}

TEST(Phase2, StrongAnchorLimitsDrift) {
  const auto d = gaussian_blobs(120, 2, 8, 15);
  const auto bal = oversample(d, {5, 1, 1.0}).data;
  auto cfg = quick_cfg(10, 50);
  auto phase1 = make_model(2, tiny_arch());
  train_phase1(phase1, d, cfg);
  const auto anchors = compute_anchors(phase1, bal);

  auto drift_for = [&](double lambda) {
    auto c = cfg;
    c.lambda_anchor = lambda;
    auto m = phase1;
    train_phase2(m, bal, anchors, c);
    return mean_abs_diff(predict_proba(m, bal.features), anchors);
  };
  const double free_drift = drift_for(0.0);
  const double anchored_drift = drift_for(1e6);
  EXPECT_LT(anchored_drift, free_drift);
}

TEST(Report, CsvLayout) {
  TrainReport r;
  r.records = {{1, 1, 0.5, 0.75}, {2, 1, 0.25, 1.0}};
  std::ostringstream out;
  write_train_report_csv(out, r);
  EXPECT_EQ(out.str(), "phase,epoch,loss,accuracy\n1,1,0.5,0.75\n2,1,0.25,1\n");
}
