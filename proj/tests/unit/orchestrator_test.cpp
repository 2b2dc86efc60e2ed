#include <fstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "malmas/data/metadata.hpp"
#include "malmas/dsl/canonical.hpp"
#include "malmas/dsl/parser.hpp"
#include "malmas/llm/heuristic.hpp"
#include "malmas/memory/memory.hpp"
#include "malmas/orchestrator/config.hpp"
#include "malmas/orchestrator/report.hpp"
#include "malmas/orchestrator/run.hpp"
#include "malmas/orchestrator/run_dir.hpp"
#include "support.hpp"

using namespace malmas;
using namespace malmas::orchestrator;
using agents::Role;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Candidate candidate(Role role, const std::string& name, double gain) {
  const std::vector<data::ColumnSchema> schema = {{"a", data::ColumnKind::numeric}, {"b", data::ColumnKind::numeric}};
  Candidate c;
  c.spec.typed = dsl::typecheck(dsl::parse("FEATURE " + name + " = a * b"), schema);
  c.spec.role = role;
  c.report.feature_name = name;
  c.report.gain = gain;
  return c;
}

std::vector<std::string> names(const std::vector<Candidate>& cs) {
  std::vector<std::string> out;
  for (const auto& c : cs) out.push_back(c.spec.name());
  return out;
}

RunConfig small_config(int rounds) {
  RunConfig c;
  c.rounds = rounds;
  c.top_n = 2;
  c.proposals_per_agent = 3;
  c.folds = 3;
  c.seed = 5;
  c.router = agents::RouterStrategy::parse("all");
  c.model.params.trees = 20;
  return c;
}

DataSource csv_source(const data::Table& t, const std::string& dir) {
  return {fixture::write_csv(t, fixture::temp_dir(dir) / "data.csv").string(), "y", data::Task::classification};
}

// Replies with one zscore proposal to every agent request and remembers
// each first-turn prompt.
class CaptureBackend final : public llm::ChatBackend {
 public:
  CaptureBackend() : ChatBackend(std::make_shared<llm::TokenLedger>()) {}
  std::string kind() const override { return "capture"; }
  std::map<std::string, std::vector<llm::Message>> first_turns;

 protected:
  llm::ChatResponse do_complete(const llm::ChatRequest& r) override {
    const auto tag = llm::Tag::parse(r.tag);
    if (tag && tag->seq == 0) {
      std::lock_guard lock(mutex_);
      first_turns[fmt::format("{}:{}", tag->round, tag->agent)] = r.messages;
    }
    return {"```dsl\n# rescale\nFEATURE z1 = zscore(col(\"x1\"))\n```\n", 10, 5};
  }

 private:
  std::mutex mutex_;
};

}  // namespace

TEST(SelectTopN, Examples) {
  std::vector<Candidate> cs = {candidate(Role::cross, "g1", 0.02), candidate(Role::cross, "g2", -0.01),
                               candidate(Role::cross, "g3", 0.005), candidate(Role::cross, "g4", 0.0)};
  EXPECT_EQ(names(select_top_n(cs, 3, true)), (std::vector<std::string>{"g1", "g3"}));
  EXPECT_EQ(names(select_top_n(cs, 3, false)), (std::vector<std::string>{"g1", "g3", "g4"}));
  EXPECT_TRUE(select_top_n({}, 3, true).empty());
  const std::vector<Candidate> ties = {candidate(Role::cross, "a", 0.01), candidate(Role::unary, "z", 0.01),
                                       candidate(Role::unary, "y", 0.01)};
  EXPECT_EQ(names(select_top_n(ties, 3, true)), (std::vector<std::string>{"y", "z", "a"}));
  std::vector<Candidate> with_nan = {candidate(Role::unary, "n", std::nan("")), candidate(Role::unary, "m", -1.0)};
  EXPECT_EQ(names(select_top_n(with_nan, 2, false)), (std::vector<std::string>{"m", "n"}));
}

TEST(UpdateMetadata, SectionsAccumulateByRound) {
  const auto t = fixture::numeric_table({"a", "b"}, {{1, 2, 3}, {4, 5, 6}}, {0, 1, 0});
  const std::string base = data::metadata_text(t);
  EXPECT_EQ(update_metadata(base, t, {}), base);
  const DerivedFeature ab{"ab", "mul(col(\"a\"), col(\"b\"))", "product", Role::cross, 1, 0.02, 0.9};
  const auto t1 = t.with_column("ab", data::ColumnKind::numeric, {4, 10, 18});
  const std::string m1 = update_metadata(base, t1, {ab});
  EXPECT_NE(m1.find("Derived features (round 1):"), std::string::npos);
  EXPECT_NE(m1.find("ab = mul(col(\"a\"), col(\"b\"))"), std::string::npos);
  const DerivedFeature sq{"a2", "sq(col(\"a\"))", "square", Role::unary, 2, 0.01, 0.91};
  const std::string m2 = update_metadata(m1, t1.with_column("a2", data::ColumnKind::numeric, {1, 4, 9}), {sq});
  const auto r1 = m2.find("Derived features (round 1):"), r2 = m2.find("Derived features (round 2):");
  ASSERT_NE(r1, std::string::npos);
  ASSERT_NE(r2, std::string::npos);
  EXPECT_LT(r1, r2);
  EXPECT_NE(m2.find("a2"), std::string::npos);
  EXPECT_EQ(m2.find("Derived features (round 1):", r1 + 1), std::string::npos);
}

TEST(Config, JsonRoundTripAndValidation) {
  RunConfig c = small_config(3);
  c.metric = eval::Metric::accuracy;
  c.memory_flags.global = false;
  c.per_agent_selection = true;
  c.backend = BackendConfig::parse("scripted:/tmp/s.json");
  const json j = c.to_json();
  EXPECT_EQ(RunConfig::from_json(j), c);
  EXPECT_EQ(RunConfig::from_json(j).to_json(), j);
  EXPECT_THROW(RunConfig::from_json({{"roundz", 2}}), ConfigError);
  EXPECT_THROW(RunConfig::from_json({{"rounds", 0}}).validate(), ConfigError);
  EXPECT_THROW(c.metric_for(data::Task::regression), ConfigError);
  EXPECT_EQ(RunConfig{}.metric_for(data::Task::regression), eval::Metric::nrmse);
  EXPECT_EQ(RunConfig{}.metric_for(data::Task::classification), eval::Metric::auc);
  EXPECT_EQ(parse_model("builtin-logreg").kind, eval::ModelKind::builtin_logreg);
  EXPECT_EQ(parse_model("external:python x.py").external_cmd, "python x.py");
}

TEST(Run, NoPositiveGainLeavesMetricUnchanged) {
  const auto raw = fixture::product_table(300, 3);
  RunConfig c = small_config(2);
  c.memory_flags = {false, false, false, false};
  CaptureBackend backend;
  const auto r = run(c, prepare(raw, c), backend);
  ASSERT_EQ(r.rounds.size(), 2u);
  for (const auto& round : r.rounds) {
    EXPECT_TRUE(round.selected_features.empty());
    EXPECT_EQ(round.metric_after, round.metric_before);
  }
  EXPECT_EQ(r.train_cv, r.baseline_cv);
  EXPECT_TRUE(r.features.empty());
  EXPECT_EQ(r.test_reads, 1);
}

TEST(Run, DisabledMemoryMakesPromptsRoundIndependent) {
  const auto raw = fixture::product_table(300, 4);
  for (const bool on : {false, true}) {
    RunConfig c = small_config(3);
    c.memory_flags = {on, on, on, on};
    CaptureBackend backend;
    run(c, prepare(raw, c), backend);
    for (Role role : agents::eligible_roles(raw.feature_schema())) {
      const std::string name(agents::to_string(role));
      ASSERT_TRUE(backend.first_turns.count("1:" + name));
      const bool same = backend.first_turns.at("1:" + name) == backend.first_turns.at("3:" + name);
      if (!on) EXPECT_TRUE(same) << name;
      if (on && role == Role::unary) EXPECT_FALSE(same);  // attempted keys are listed
    }
  }
}

TEST(Run, InvariantsOverSeeds) {
  std::size_t total_admitted = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto raw = fixture::two_pair_table(300, 10 + seed);
    RunConfig c = small_config(3);
    c.seed = seed;
    auto prepared = prepare(raw, c);
    const std::size_t base_cols = prepared.train.feature_schema().size();
    auto backend = make_backend(c.backend, prepared.train.feature_schema(), c.seed);
    const auto r = run(c, std::move(prepared), *backend);
    EXPECT_EQ(r.test_reads, 1);
    std::size_t admitted = 0;
    double last = r.baseline_cv;
    for (const auto& round : r.rounds) {
      admitted += round.selected_features.size();
      EXPECT_LE(round.selected_features.size(), static_cast<std::size_t>(c.top_n));
      EXPECT_LE(admitted, static_cast<std::size_t>(round.round * c.top_n));
      EXPECT_EQ(round.metric_before, last);
      EXPECT_GE(round.metric_after, round.metric_before);
      for (const auto& f : round.selected_features) EXPECT_GT(f.gain, 0.0);
      last = round.metric_after;
    }
    EXPECT_EQ(r.final_columns.size(), base_cols + admitted);
    total_admitted += admitted;
    EXPECT_EQ(r.train_cv, last);
    std::set<std::string> keys;
    for (const auto& f : r.features) EXPECT_TRUE(keys.insert(dsl::canonicalize(dsl::parse_expr(f.program)).key).second);
    // One feedback record per accepted proposal of each agent.
    const auto mem = memory::MemoryState::load(r.memory);
    for (Role role : agents::kAllRoles) {
      std::size_t accepted = 0;
      for (const auto& p : mem.proc(role)) accepted += p.outcome == memory::Outcome::accepted;
      EXPECT_EQ(mem.feed(role).size(), accepted);
    }
  }
  EXPECT_GT(total_admitted, 0u);
}

TEST(Run, DeterministicAcrossWorkerCounts) {
  const auto raw = fixture::two_pair_table(300, 20);
  const auto source = csv_source(raw, "orch_det");
  RunConfig c = small_config(1);
  const auto a = execute(c, source, 1), b = execute(c, source, 1), p = execute(c, source, 4);
  EXPECT_EQ(a.files, b.files);
  EXPECT_EQ(a.files, p.files);
  EXPECT_TRUE(a.files.count("rounds/round-1.json"));
  for (const char* f : {"config.json", "memory.json", "ledger.json", "result.json", "transcript.json"})
    EXPECT_TRUE(a.files.count(f)) << f;
}

TEST(Run, ReplayDetectsTampering) {
  const auto raw = fixture::two_pair_table(300, 21);
  const auto source = csv_source(raw, "orch_replay_data");
  const auto e = execute(small_config(2), source, 1);
  const fs::path dir = fixture::temp_dir("orch_replay_run");
  write_files(dir, e.files);
  EXPECT_TRUE(replay(dir, 2).identical);
  {
    std::ofstream out(dir / "rounds/round-1.json", std::ios::app);
    out << " ";
  }
  const auto bad = replay(dir, 1);
  EXPECT_FALSE(bad.identical);
  EXPECT_EQ(bad.mismatch, "rounds/round-1.json");
}

TEST(Report, TablesAndTokenTotals) {
  const auto raw = fixture::product_table(240, 22);
  const auto e = execute(small_config(4), csv_source(raw, "orch_report"), 1);
  const json result = json::parse(e.files.at("result.json")), ledger = json::parse(e.files.at("ledger.json"));
  const json r = report_json(result, ledger);
  EXPECT_EQ(r.at("rounds").size(), 4u);
  EXPECT_TRUE(r.at("test").at("value").is_number());
  EXPECT_EQ(r.at("token_total").at("prompt_tokens"), 0);  // heuristic backend
  EXPECT_EQ(r.at("token_total").at("completion_tokens"), 0);
  const std::string text = report_text(result, ledger);
  std::size_t metric_rows = 0;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line) && !line.empty();) ++metric_rows;
  EXPECT_EQ(metric_rows, 1u + 4u + 1u);  // header, rounds, test
  EXPECT_NE(text.find("\ntest "), std::string::npos);
  EXPECT_NE(text.find("\ntotal "), std::string::npos);
}

TEST(Report, MeanRankAcrossDatasetsAndDirections) {
  const auto a = mean_rank_json({"A", "B"}, {"d1", "d2"}, {"auc", "nrmse"}, {{0.9, 0.8}, {0.2, 0.1}});
  EXPECT_EQ(a.at("mean_rank"), json::array({1.5, 1.5}));
  const auto b = mean_rank_json({"A", "B"}, {"d1", "d2"}, {"auc", "nrmse"}, {{0.9, 0.8}, {0.1, 0.2}});
  EXPECT_EQ(b.at("mean_rank"), json::array({1.0, 2.0}));
  const std::string text = mean_rank_text(b);
  EXPECT_NE(text.find("mean rank"), std::string::npos);
}

TEST(Report, BenchTwoByTwo) {
  const auto d1 = csv_source(fixture::product_table(200, 30), "orch_bench_d1");
  const auto d2 = csv_source(fixture::two_pair_table(200, 31), "orch_bench_d2");
  BenchSuite suite;
  suite.datasets = {{"prod", d1}, {"pairs", d2}};
  RunConfig one = small_config(1), logreg = small_config(1);
  logreg.model = eval::ModelSpec::builtin_logreg();
  suite.methods = {{"gbdt", one}, {"logreg", logreg}};
  const auto bench = run_bench(suite, 1);
  ASSERT_EQ(bench.at("values").size(), 2u);
  ASSERT_EQ(bench.at("mean_rank").size(), 2u);
  // Hand ranking of the reported test values.
  std::vector<double> want(2, 0.0);
  for (const auto& row : bench.at("values")) {
    const double g = row[0], l = row[1];
    want[0] += g > l ? 1.0 : (g == l ? 1.5 : 2.0);
    want[1] += l > g ? 1.0 : (g == l ? 1.5 : 2.0);
  }
  EXPECT_DOUBLE_EQ(bench.at("mean_rank")[0].get<double>(), want[0] / 2);
  EXPECT_DOUBLE_EQ(bench.at("mean_rank")[1].get<double>(), want[1] / 2);
}
