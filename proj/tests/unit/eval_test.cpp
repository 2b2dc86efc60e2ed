#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "malmas/eval/evaluator.hpp"
#include "malmas/eval/folds.hpp"
#include "malmas/eval/metrics.hpp"
#include "malmas/eval/model.hpp"
#include "support.hpp"

using namespace malmas;
using namespace malmas::eval;

namespace {

// Hand ranking: 1 + #better + #tied/2 (the tied count excludes the entry itself).
std::vector<double> hand_mean_rank(const std::vector<std::vector<double>>& v) {
  const std::size_t m = v.front().size();
  std::vector<double> sum(m, 0.0);
  for (const auto& row : v) {
    for (std::size_t i = 0; i < m; ++i) {
      double better = 0, tied = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        if (row[j] > row[i]) ++better;
        else if (row[j] == row[i]) ++tied;
      }
      sum[i] += 1.0 + better + tied / 2.0;
    }
  }
  for (auto& s : sum) s /= static_cast<double>(v.size());
  return sum;
}

Dataset dataset_of(const data::Table& t) { return to_dataset(t); }

}  // namespace

TEST(Auc, Examples) {
  const std::vector<int> labels = {0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, labels), 0.75);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.1, 0.2, 0.3, 0.4}, labels), 1.0);
  EXPECT_DOUBLE_EQ(auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, labels), 0.5);
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), MetricError);
}

TEST(Auc, MatchesPairwiseCounting) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    std::vector<double> s(n);
    std::vector<int> l(n);
    const double grid = static_cast<double>(1 + rng.below(20));  // coarse grids force ties
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::floor(rng.uniform() * grid) / grid;
      l[i] = static_cast<int>(rng.below(2));
    }
    l[0] = 0;
    l[1] = 1;
    ASSERT_EQ(auc(s, l), fixture::brute_auc(s, l)) << "trial " << trial;
  }
}

TEST(Nrmse, Examples) {
  const std::vector<double> t = {0, 2, 4};
  EXPECT_DOUBLE_EQ(nrmse(t, t), 0.0);
  EXPECT_DOUBLE_EQ(nrmse(std::vector<double>{1, 1, 5}, t), 0.25);
  EXPECT_DOUBLE_EQ(nrmse(std::vector<double>{2, 2}, std::vector<double>{0, 4}), 0.5);
  EXPECT_THROW(nrmse(std::vector<double>{1, 2}, std::vector<double>{3, 3}), MetricError);
}

TEST(Nrmse, SquaredErrorIdentity) {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(150);
    std::vector<double> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = (rng.uniform() - 0.5) * 100;
      t[i] = (rng.uniform() - 0.5) * 100;
    }
    const double range = *std::max_element(t.begin(), t.end()) - *std::min_element(t.begin(), t.end());
    double sse = 0;
    for (std::size_t i = 0; i < n; ++i) sse += (p[i] - t[i]) * (p[i] - t[i]);
    const double v = nrmse(p, t);
    ASSERT_NEAR(v * v * range * range * static_cast<double>(n), sse, 1e-9 * std::max(1.0, sse));
  }
}

TEST(Accuracy, FractionOfMatches) {
  EXPECT_DOUBLE_EQ(accuracy(std::vector<int>{1, 0, 2, 2}, std::vector<int>{1, 1, 2, 0}), 0.5);
}

TEST(MeanRank, Examples) {
  const auto r = mean_rank({{0.9, 0.85}, {0.8, 0.85}}, Direction::maximize);
  EXPECT_EQ(r.means, (std::vector<double>{1.5, 1.5}));
  EXPECT_EQ(mean_rank({{0.3}, {0.7}}, Direction::maximize).means, (std::vector<double>{1.0}));
  EXPECT_EQ(mean_rank({{0.5, 0.5}}, Direction::maximize).means, (std::vector<double>{1.5, 1.5}));
  EXPECT_EQ(mean_rank({{0.1, 0.2}}, Direction::minimize).means, (std::vector<double>{1.0, 2.0}));
}

TEST(MeanRank, MatchesHandRanking) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.below(8), m = 1 + rng.below(6);
    std::vector<std::vector<double>> v(d, std::vector<double>(m));
    for (auto& row : v)
      for (auto& x : row) x = static_cast<double>(rng.below(5)) / 4.0;
    const auto got = mean_rank(v, Direction::maximize).means;
    const auto want = hand_mean_rank(v);
    for (std::size_t i = 0; i < m; ++i) ASSERT_DOUBLE_EQ(got[i], want[i]);
  }
}

TEST(Folds, StratifiedAssignmentFollowsDocumentedAlgorithm) {
  Rng rng(4);
  std::vector<double> y(97);
  for (auto& v : y) v = static_cast<double>(rng.below(3));
  const auto plan = make_folds(y, data::Task::classification, 5, 42);
  // Oracle: ascending classes, one shuffle stream, running counter.
  Rng s(42);
  std::vector<int> want(y.size());
  int counter = 0;
  for (int c = 0; c < 3; ++c) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == c) rows.push_back(i);
    s.shuffle(std::span(rows));
    for (auto r : rows) want[r] = counter++ % 5;
  }
  EXPECT_EQ(plan.fold_of, want);
  EXPECT_EQ(plan.k, 5);
  EXPECT_EQ(plan.hash(), make_folds(y, data::Task::classification, 5, 42).hash());
  EXPECT_NE(plan.hash(), make_folds(y, data::Task::classification, 5, 43).hash());
}

TEST(Folds, ReducesKForSmallClasses) {
  const std::vector<double> y = {0, 0, 0, 0, 0, 0, 1, 1, 1};
  const auto plan = make_folds(y, data::Task::classification, 5, 0);
  EXPECT_EQ(plan.k, 3);
  EXPECT_FALSE(plan.warnings.empty());
}

TEST(Gbdt, TrainingLossNeverIncreases) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + rng.below(200);
    std::vector<std::vector<double>> cols(3, std::vector<double>(n));
    std::vector<double> y(n);
    for (auto& c : cols)
      for (auto& v : c) v = std::round(rng.uniform() * 20.0);
    const bool logistic = trial % 2 == 0;
    for (auto& v : y) v = logistic ? static_cast<double>(rng.below(2)) : rng.uniform() * 10.0;
    Columns x(cols.begin(), cols.end());
    ModelParams params;
    params.trees = 30;
    const auto model = Gbdt::fit(x, y, logistic, params);
    const auto& h = model.loss_history();
    ASSERT_EQ(h.size(), 31u);
    for (std::size_t i = 1; i < h.size(); ++i) ASSERT_LE(h[i], h[i - 1] + 1e-12) << trial << " step " << i;
  }
}

TEST(TrainEval, SeparableDataWithLogreg) {
  Rng rng(6);
  const std::size_t n = 300;
  auto a = fixture::normals(rng, n), b = fixture::normals(rng, n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(a[i] + b[i]) < 0.2) a[i] += a[i] + b[i] > 0 ? 0.2 : -0.2;  // margin
    y[i] = a[i] + b[i] > 0 ? 1.0 : 0.0;
  }
  // The separator w = (1, 1) classifies every row.
  for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(a[i] + b[i] > 0, y[i] == 1.0);
  const auto ds = dataset_of(fixture::numeric_table({"a", "b"}, {a, b}, y));
  EXPECT_GE(train_eval(ds, ModelSpec::builtin_logreg(), Metric::auc, 5, 0), 0.99);
}

// A single noise draw lands outside [0.4, 0.6] about 5% of the time, so check the null distribution.
TEST(TrainEval, NoiseIsNearChance) {
  int inside = 0;
  double sum = 0;
  const int draws = 60;
  for (int d = 0; d < draws; ++d) {
    Rng rng(100 + d);
    const std::size_t n = 200;
    const auto a = fixture::normals(rng, n), b = fixture::normals(rng, n);
    std::vector<double> y(n);
    for (auto& v : y) v = static_cast<double>(rng.below(2));
    const auto ds = dataset_of(fixture::numeric_table({"a", "b"}, {a, b}, y));
    const double v = train_eval(ds, ModelSpec::builtin_logreg(), Metric::auc, 5, 0);
    ASSERT_EQ(v, train_eval(ds, ModelSpec::builtin_logreg(), Metric::auc, 5, 0));
    sum += v;
    if (v >= 0.4 && v <= 0.6) ++inside;
  }
  EXPECT_GE(inside, draws * 9 / 10);
  EXPECT_NEAR(sum / draws, 0.5, 0.03);
}

TEST(TrainEval, RegressionAndMulticlass) {
  const auto reg = dataset_of(fixture::linear_regression_table(300, 8));
  EXPECT_LT(train_eval(reg, ModelSpec::builtin_logreg(), Metric::nrmse, 5, 0), 0.05);
  EXPECT_LT(train_eval(reg, ModelSpec::builtin_gbdt(), Metric::nrmse, 5, 0), 0.1);

  Rng rng(9);
  const std::size_t n = 300;
  const auto a = fixture::normals(rng, n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = a[i] < -0.5 ? 0 : (a[i] < 0.5 ? 1 : 2);
  auto ds = dataset_of(fixture::numeric_table({"a"}, {a}, y));
  ds.problem.classes = 3;
  EXPECT_GE(train_eval(ds, ModelSpec::builtin_gbdt(), Metric::auc, 5, 0), 0.95);
  EXPECT_GE(train_eval(ds, ModelSpec::builtin_gbdt(), Metric::accuracy, 5, 0), 0.9);
}

TEST(MarginalGain, DuplicateColumnGivesNoGain) {
  const auto table = fixture::product_table(400, 10);
  const auto base = dataset_of(table);
  for (const auto& model : {ModelSpec::builtin_gbdt(), ModelSpec::builtin_logreg()}) {
    const Evaluator ev(model, Metric::auc, 5, 1);
    const auto baseline = ev.train_eval(base);
    const auto r = ev.marginal_gain(base, baseline, "x1_copy", table.column("x1").values);
    EXPECT_TRUE(r.duplicate);
    EXPECT_NEAR(r.gain, 0.0, 0.005);
    EXPECT_FALSE(r.effective);
    EXPECT_EQ(r.fold_hash, baseline.fold_hash);
  }
  // Without the guard, trees never split on a later identical column.
  const Evaluator gbdt(ModelSpec::builtin_gbdt(), Metric::auc, 5, 1);
  const double with_copy = gbdt.train_eval(base.with_column("x1_copy", table.column("x1").values)).value;
  EXPECT_NEAR(with_copy, gbdt.train_eval(base).value, 0.005);
}

TEST(MarginalGain, LeakedLabelIsEffective) {
  const auto table = fixture::product_table(400, 11);
  const auto base = dataset_of(table);
  const Evaluator ev(ModelSpec::builtin_gbdt(), Metric::auc, 5, 1);
  const auto baseline = ev.train_eval(base);
  std::vector<double> leak = table.target_column().values;
  for (auto& v : leak) v = v * 3.0 - 1.0;
  const auto r = ev.marginal_gain(base, baseline, "leak", leak);
  EXPECT_GT(r.gain, 0.0);
  EXPECT_TRUE(r.effective);
  EXPECT_GE(r.value, 0.99);
}

TEST(MarginalGain, GainArithmeticAndPairing) {
  EXPECT_NEAR(gain_of(Metric::auc, 0.80, 0.82), 0.02, 1e-12);
  EXPECT_NEAR(gain_of(Metric::nrmse, 0.30, 0.20), 0.10, 1e-12);
  const auto table = fixture::product_table(200, 12);
  const auto base = dataset_of(table);
  const Evaluator a(ModelSpec::builtin_gbdt(), Metric::auc, 5, 1), b(ModelSpec::builtin_gbdt(), Metric::auc, 5, 2);
  const auto other = b.train_eval(base);
  std::vector<double> fresh(base.rows());
  for (std::size_t i = 0; i < fresh.size(); ++i) fresh[i] = static_cast<double>(i % 7);
  EXPECT_THROW(a.marginal_gain(base, other, "z", fresh), std::logic_error);
}
