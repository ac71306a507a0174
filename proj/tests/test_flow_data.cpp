#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "ddosnet/flow_data.hpp"
#include "ddosnet/random.hpp"

using namespace ddosnet;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

LoadedFlows load_string(const std::string& text, LoadOptions opt = {}) {
  std::istringstream in(text);
  return load_flow_csv(in, opt);
}

FlowDataset make(std::vector<std::vector<double>> rows, std::vector<int> labels = {}) {
  FlowDataset ds;
  for (std::size_t c = 0; c < (rows.empty() ? 0 : rows[0].size()); ++c) ds.feature_names.push_back("f" + std::to_string(c));
  for (const auto& r : rows) ds.features.append_row(r);
  if (labels.empty()) labels.assign(rows.size(), 0);
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace

TEST(LoadFlowCsv, EncodesLabels) {
  const auto r = load_string("a,b,Label\n1,2,BENIGN\n3,4,DDoS\n5,6,BENIGN\n");
  EXPECT_EQ(r.data.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(r.data.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(r.data.features(2, 1), 6.0);
}

TEST(LoadFlowCsv, LabelTokensAreTrimmedAndCaseInsensitive) {
  const auto r = load_string("a, Label\n1, benign \n2,  ddos\n");
  EXPECT_EQ(r.data.labels, (std::vector<int>{0, 1}));
}

TEST(LoadFlowCsv, AllZeroCells) {
  const auto r = load_string("a,b,Label\n0,0,BENIGN\n0,0,DDoS\n");
  for (double v : r.data.features.flat()) EXPECT_EQ(v, 0.0);
}

TEST(LoadFlowCsv, DropsNonNumericColumnsAndReportsThem) {
  const auto r = load_string(
      "Flow ID,Src IP,Timestamp,Flow Duration,Label\n"
      "192.168.10.5-104.16.207.165-54865-443-6,192.168.10.5,7/7/2017 3:30,100,BENIGN\n"
      "192.168.10.9-104.16.207.165-54866-443-6,192.168.10.9,7/7/2017 3:31,200,DDoS\n");
  EXPECT_EQ(r.data.feature_names, (std::vector<std::string>{"Flow Duration"}));
  EXPECT_EQ(r.dropped_columns, (std::vector<std::string>{"Flow ID", "Src IP", "Timestamp"}));
}

TEST(LoadFlowCsv, UnparseableCellBecomesNaNAndCleanRemovesRow) {
  const auto r = load_string("a,b,Label\n1,2,BENIGN\n3,abc,DDoS\n5,6,BENIGN\n7,8,DDoS\n9,10,BENIGN\n");
  ASSERT_EQ(r.data.rows(), 5u);
  EXPECT_TRUE(std::isnan(r.data.features(1, 1)));
  EXPECT_EQ(r.unparsed_cells, 1u);
  EXPECT_EQ(clean(r.data).rows(), 4u);
}

TEST(LoadFlowCsv, InfinityAndNaNSpellings) {
  const auto r = load_string("a,Label\nInfinity,BENIGN\n-inf,DDoS\nNaN,BENIGN\n1,DDoS\n");
  EXPECT_EQ(r.data.features(0, 0), kInf);
  EXPECT_EQ(r.data.features(1, 0), -kInf);
  EXPECT_TRUE(std::isnan(r.data.features(2, 0)));
}

TEST(LoadFlowCsv, QuotedFieldsAndCrlf) {
  const auto r = load_string("\"x,y\",\"Label\"\r\n\"1.5\",\"DDoS\"\r\n2,BENIGN\r\n");
  EXPECT_EQ(r.data.feature_names[0], "x,y");
  EXPECT_EQ(r.data.features(0, 0), 1.5);
  EXPECT_EQ(r.data.labels, (std::vector<int>{1, 0}));
}

TEST(LoadFlowCsv, DuplicateHeaderNamesAreDisambiguated) {
  const auto r = load_string(" Fwd Header Length,Fwd Header Length,Label\n1,2,BENIGN\n");
  EXPECT_EQ(r.data.feature_names, (std::vector<std::string>{"Fwd Header Length", "Fwd Header Length.1"}));
}

TEST(LoadFlowCsv, Errors) {
  EXPECT_THROW(load_flow_csv(std::string("/nonexistent/flows.csv")), DataError);
  EXPECT_THROW(load_string("a,b\n1,2\n"), DataError);  // no label column
  try {
    load_string("a,Label\n1,BENIGN\n2,PortScan\n");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("PortScan"), std::string::npos);
  }
  EXPECT_THROW(load_string("ip,Label\n1.2.3.4,BENIGN\n"), DataError);  // no numeric columns
  EXPECT_THROW(load_string(""), DataError);
}

TEST(LoadFlowCsv, UnlabeledWhenLabelsNotRequired) {
  LoadOptions opt;
  opt.require_labels = false;
  const auto r = load_string("a,b\n1,2\n", opt);
  EXPECT_TRUE(r.data.labels.empty());
  EXPECT_EQ(r.data.cols(), 2u);
}

TEST(WriteFlowCsv, RoundTripsEncodedLabels) {
  const auto ds = make({{1.25, -3.0}, {0.1, 1e300}}, {0, 1});
  std::ostringstream out;
  write_flow_csv(out, ds);
  LoadOptions opt;
  opt.benign_token = "0";
  opt.attack_token = "1";
  EXPECT_EQ(load_string(out.str(), opt).data, ds);
}

TEST(Clean, DropsNaNRows) {
  const auto out = clean(make({{1, 2}, {kNaN, 3}, {4, 5}}));
  EXPECT_EQ(out.features, (Matrix{{1, 2}, {4, 5}}));
}

TEST(Clean, ReplacesInfinityWithFiniteColumnMean) {
  const auto out = clean(make({{1}, {kInf}, {3}}));
  EXPECT_EQ(out.features, (Matrix{{1}, {2}, {3}}));
}

TEST(Clean, DropsNaNRowsBeforeComputingMeans) {
  // Oracle: drop row 1 (NaN) first; column 0 finite values left are {2, 10}
  // -> mean 6; column 1 finite values {4, 8} -> mean 6.
  const auto in = make({{2, kInf}, {100, kNaN}, {kInf, 4}, {10, 8}});
  const auto out = clean(in);
  EXPECT_EQ(out.features, (Matrix{{2, 6}, {6, 4}, {10, 8}}));
}

TEST(Clean, Errors) {
  EXPECT_THROW(clean(make({{kNaN}, {kNaN}})), DataError);
  try {
    clean(make({{1, kInf}, {2, -kInf}}));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("f1"), std::string::npos);
  }
}

TEST(Clean, Idempotent) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<double>> rows(12, std::vector<double>(3));
    for (auto& r : rows)
      for (auto& v : r) {
        const double u = rng.uniform();
        v = u < 0.05 ? kNaN : u < 0.1 ? kInf : u < 0.15 ? -kInf : rng.normal();
      }
    FlowDataset once;
    try {
      once = clean(make(rows));
    } catch (const DataError&) {
      continue;
    }
    EXPECT_EQ(clean(once), once);
    EXPECT_TRUE(all_finite(once.features.flat()));
  }
}

TEST(Split, EightyTwenty) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({double(i)});
  const auto s = train_test_split(make(rows), {0.2, 1, false});
  EXPECT_EQ(s.train.rows(), 8u);
  EXPECT_EQ(s.test.rows(), 2u);
}

TEST(Split, DeterministicForSeed) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({double(i)});
  const auto a = train_test_split(make(rows), {0.2, 99, false});
  const auto b = train_test_split(make(rows), {0.2, 99, false});
  EXPECT_EQ(a.train_rows, b.train_rows);
  EXPECT_EQ(a.test_rows, b.test_rows);
  const auto c = train_test_split(make(rows), {0.2, 100, false});
  EXPECT_NE(a.test_rows, c.test_rows);
}

TEST(Split, PartitionsRowsForAnySeed) {
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 100; ++i) rows.push_back({double(i), double(i * i)});
  const auto ds = make(rows);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = train_test_split(ds, {0.2, seed, false});
    ASSERT_EQ(s.test.rows(), 20u);
    std::vector<double> all;
    for (std::size_t r = 0; r < s.train.rows(); ++r) all.push_back(s.train.features(r, 0));
    for (std::size_t r = 0; r < s.test.rows(); ++r) all.push_back(s.test.features(r, 0));
    std::sort(all.begin(), all.end());
    for (int i = 0; i < 100; ++i) ASSERT_EQ(all[i], double(i));
  }
}

TEST(Split, TinyInputsKeepBothPartsNonEmpty) {
  const auto s = train_test_split(make({{1}, {2}}), {0.9, 0, false});
  EXPECT_EQ(s.train.rows(), 1u);
  EXPECT_EQ(s.test.rows(), 1u);
  EXPECT_THROW(train_test_split(make({{1}}), {0.2, 0, false}), DataError);
  EXPECT_THROW(train_test_split(make({{1}, {2}}), {1.0, 0, false}), ConfigError);
}

TEST(Split, StratifiedKeepsClassRatio) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int i = 0; i < 100; ++i) {
    rows.push_back({double(i)});
    labels.push_back(i < 10 ? 1 : 0);
  }
  const auto s = train_test_split(make(rows, labels), {0.2, 5, true});
  EXPECT_EQ(s.test.count(1), 2u);
  EXPECT_EQ(s.test.count(0), 18u);
}

TEST(Scaler, PopulationStatistics) {
  const auto s = fit_scaler(make({{2}, {4}, {6}}));
  // Two-pass oracle: mean 4, squared deviations 4+0+4 over n=3.
  EXPECT_EQ(s.means[0], 4.0);
  EXPECT_NEAR(s.stds[0], std::sqrt(8.0 / 3.0), 1e-15);
  EXPECT_NEAR(s.stds[0], 1.63299, 1e-5);
  EXPECT_EQ(s.fitted_on, 3u);
}

TEST(Scaler, ApplyArithmeticAndConstantColumns) {
  ScalerParams s{{4.0}, {2.0}, 1};
  EXPECT_EQ(apply_scaler(make({{6}}), s).features(0, 0), 1.0);

  const auto constant = make({{5}, {5}, {5}});
  const auto cs = fit_scaler(constant);
  EXPECT_EQ(cs.means[0], 5.0);
  EXPECT_EQ(cs.stds[0], 0.0);
  const auto scaled = apply_scaler(constant, cs);
  for (double v : scaled.features.flat()) EXPECT_EQ(v, 0.0);

  EXPECT_THROW(apply_scaler(make({{1, 2}}), s), ShapeError);
}

TEST(Scaler, IdentityOnStandardizedColumn) {
  const auto ds = make({{-1}, {1}});
  const auto s = fit_scaler(ds);
  EXPECT_EQ(s.means[0], 0.0);
  EXPECT_EQ(s.stds[0], 1.0);
  EXPECT_EQ(apply_scaler(ds, s), ds);
}

TEST(Scaler, TransformedTrainingColumnsAreStandardized) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> rows(40, std::vector<double>(4));
    for (auto& r : rows) {
      r[0] = 1000.0 + 50.0 * rng.normal();
      r[1] = rng.uniform(-3, 3);
      r[2] = 7.0;
      r[3] = 1e-3 * rng.normal();
    }
    const auto ds = make(rows);
    const auto out = apply_scaler(ds, fit_scaler(ds));
    const auto check = fit_scaler(out);
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_NEAR(check.means[c], 0.0, 1e-9);
      if (c != 2) {
        EXPECT_NEAR(check.stds[c], 1.0, 1e-9);
      }
    }
  }
}
