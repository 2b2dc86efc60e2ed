#include <thread>

#include <gtest/gtest.h>

#include "malmas/eval/evaluator.hpp"
#include "malmas/eval/external.hpp"
#include "support.hpp"

using namespace malmas;
using namespace malmas::eval;
using namespace std::chrono_literals;

namespace {

std::string adapter(const std::string& mode) { return std::string(FAKE_ADAPTER) + " " + mode; }

ExternalError::Kind failure_kind(ExternalEvaluator& ev, nlohmann::json req = {{"op", "evaluate"}}) {
  try {
    ev.call(std::move(req));
  } catch (const ExternalError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an ExternalError";
  return ExternalError::Kind::spawn;
}

}  // namespace

TEST(External, ResponseCarriesRequestId) {
  ExternalEvaluator ev(adapter("id"));
  for (int i = 1; i <= 6; ++i) ev.call({{"op", "evaluate"}});
  EXPECT_EQ(ev.call({{"op", "evaluate"}}), 7.0);
  EXPECT_EQ(ev.requests_sent(), 7u);
}

TEST(External, PipelinedRepliesRoutedById) {
  ExternalEvaluator ev(adapter("reverse 4"));
  std::vector<std::shared_future<double>> fs;
  for (int i = 0; i < 100; ++i) fs.push_back(ev.submit({{"op", "evaluate"}}));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(fs[i].get(), static_cast<double>(i + 1));
}

TEST(External, ConcurrentSubmitters) {
  ExternalEvaluator ev(adapter("id"));
  std::vector<std::thread> threads;
  std::vector<int> wrong(4, 0);
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i) {
        const double v = ev.call({{"op", "evaluate"}});
        if (v < 1.0 || v > 100.0) ++wrong[t];
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(wrong, std::vector<int>(4, 0));
  EXPECT_EQ(ev.requests_sent(), 100u);
}

TEST(External, AdapterErrorSurfacesText) {
  ExternalEvaluator ev(adapter("error"));
  try {
    ev.call({{"op", "evaluate"}});
    FAIL();
  } catch (const ExternalError& e) {
    EXPECT_EQ(e.kind(), ExternalError::Kind::adapter);
    EXPECT_NE(std::string(e.what()).find("bad fold"), std::string::npos);
  }
  // An adapter error is per request; the channel stays usable.
  EXPECT_EQ(failure_kind(ev), ExternalError::Kind::adapter);
}

TEST(External, ProtocolViolationsPoisonTheChannel) {
  {
    ExternalEvaluator ev(adapter("garbage"));
    EXPECT_EQ(failure_kind(ev), ExternalError::Kind::protocol);
    EXPECT_EQ(failure_kind(ev), ExternalError::Kind::protocol);
  }
  {
    ExternalEvaluator ev(adapter("unknown-id"));
    EXPECT_EQ(failure_kind(ev), ExternalError::Kind::protocol);
  }
  {
    ExternalEvaluator ev(adapter("exit"));
    const auto k = failure_kind(ev);
    EXPECT_TRUE(k == ExternalError::Kind::protocol || k == ExternalError::Kind::spawn);
  }
}

TEST(External, TimeoutAndSpawnFailure) {
  {
    ExternalEvaluator ev(adapter("silent"), 200ms);
    EXPECT_EQ(failure_kind(ev), ExternalError::Kind::timeout);
  }
  ExternalEvaluator missing("/nonexistent/adapter-binary");
  EXPECT_EQ(failure_kind(missing), ExternalError::Kind::spawn);
}

TEST(External, ConstantOracleThroughEvaluator) {
  const auto table = fixture::product_table(120, 1);
  const auto ds = to_dataset(table);
  const auto spec = ModelSpec::external(adapter("constant"));
  EXPECT_EQ(train_eval(ds, spec, Metric::auc, 5, 0), 0.5);
  const Evaluator ev(spec, Metric::auc, 5, 0);
  const auto baseline = ev.train_eval(ds);
  const auto r = ev.marginal_gain(ds, baseline, "p", table.column("n1").values);
  EXPECT_EQ(r.gain, 0.0);
  EXPECT_FALSE(r.effective);
  const auto h = ev.holdout(ds, ds);
  EXPECT_EQ(h.value, 0.5);
  EXPECT_TRUE(h.note.empty());
}

TEST(External, HoldoutFallsBackWithoutAdapterSupport) {
  const auto ds = to_dataset(fixture::product_table(120, 2));
  const Evaluator ev(ModelSpec::external(adapter("no-holdout")), Metric::auc, 5, 0);
  const auto h = ev.holdout(ds, ds);
  EXPECT_EQ(h.model, "builtin-gbdt");
  EXPECT_FALSE(h.note.empty());
}

TEST(External, RequestShape) {
  const auto ds = to_dataset(fixture::product_table(50, 3));
  const auto req = external_request(ds, Metric::auc, 5, 9, ModelSpec::external("x").params);
  EXPECT_EQ(req.at("op"), "evaluate");
  EXPECT_EQ(req.at("rows").size(), 50u);
  EXPECT_EQ(req.at("columns").size(), ds.names.size());
  EXPECT_EQ(req.at("model").at("trees"), 500);
  EXPECT_EQ(req.at("model").at("learning_rate"), 0.02);
  EXPECT_EQ(req.at("seed"), 9);
  ExternalEvaluator ev(adapter("rows"));
  EXPECT_EQ(ev.call(req), 50.0);
}
