#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malmas/agents/agents.hpp"
#include "malmas/data/preprocess.hpp"
#include "malmas/data/table.hpp"
#include "malmas/dsl/interpreter.hpp"
#include "malmas/eval/evaluator.hpp"
#include "malmas/llm/backend.hpp"
#include "malmas/orchestrator/config.hpp"

namespace malmas::orchestrator {

class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Where the raw data came from; recorded so a run directory can be replayed.
struct DataSource {
  std::string path;
  std::string target;
  data::Task task = data::Task::classification;

  nlohmann::json to_json() const;
  static DataSource from_json(const nlohmann::json& j);
};

/// Holds the test split and counts reads of it.
class TestVault {
 public:
  explicit TestVault(data::Table test) : test_(std::move(test)) {}
  /// Throws std::logic_error on a second read.
  const data::Table& open();
  int reads() const { return reads_; }

 private:
  data::Table test_;
  int reads_ = 0;
};

/// Encoded train split plus the sequestered test split.
struct Prepared {
  data::Table train;
  std::shared_ptr<TestVault> test;
  data::TargetClasses classes;
  std::vector<std::string> warnings;
};

/// encode_target, stratified split, preprocessor fitted on train only.
Prepared prepare(const data::Table& raw, const RunConfig& config);

struct Candidate {
  agents::TransformationSpec spec;
  eval::EvalReport report;
};

/// Gain descending, then role order, then name. With `require_positive`
/// candidates with gain <= 0 are dropped first. At most `n` are returned.
std::vector<Candidate> select_top_n(std::vector<Candidate> candidates, int n, bool require_positive);

struct DerivedFeature {
  std::string name;
  std::string program;  // rendered
  std::string description;
  agents::Role role = agents::Role::unary;
  int round = 0;
  double gain = 0.0;
  double value = 0.0;  // CV metric with the feature admitted

  nlohmann::json to_json() const;
};

/// Metadata of `extended` followed by every earlier "Derived features"
/// section of `metadata` and one for this round's `selected`. An empty
/// selection returns `metadata` unchanged.
std::string update_metadata(const std::string& metadata, const data::Table& extended,
                            const std::vector<DerivedFeature>& selected);

struct RoundReport {
  int round = 0;
  std::vector<agents::Role> selected_roles;
  std::string router_rationale;
  int candidates = 0;  // blocks seen across active agents
  int accepted = 0;    // proposals that passed validation and dedup
  int effective = 0;   // accepted with gain > 0
  std::vector<DerivedFeature> selected_features;
  std::vector<std::string> not_admitted;  // selected but rejected by the joint check
  double metric_before = 0.0;
  double metric_after = 0.0;
  llm::Usage tokens;
  std::map<std::string, std::string> agent_errors;  // role -> message
  std::vector<nlohmann::json> evaluations;

  nlohmann::json to_json() const;
};

struct RunResult {
  RunConfig config;
  eval::Metric metric = eval::Metric::auc;
  std::vector<RoundReport> rounds;
  std::vector<DerivedFeature> features;
  std::vector<nlohmann::json> fitted;  // statistics of each derived feature
  std::vector<std::string> final_columns;
  double train_cv = 0.0;
  double baseline_cv = 0.0;
  eval::Evaluator::Holdout test;
  int test_reads = 0;
  llm::Usage tokens;
  std::vector<std::string> warnings;
  nlohmann::json memory;  // snapshot
  nlohmann::json ledger;

  /// result.json: everything except the memory snapshot and ledger rows.
  nlohmann::json to_json() const;
};

struct RunOptions {
  unsigned workers = 1;
  std::shared_ptr<eval::ExternalEvaluator> external;  // spawned from the config when null
};

/// The full feature generation loop on prepared data.
RunResult run(const RunConfig& config, Prepared data, llm::ChatBackend& backend, const RunOptions& options = {});

/// Wraps a backend and records every reply (or error) by tag, in the shape
/// the scripted backend reads back.
class RecordingBackend final : public llm::ChatBackend {
 public:
  RecordingBackend(std::unique_ptr<llm::ChatBackend> inner, std::shared_ptr<llm::TokenLedger> ledger);
  std::string kind() const override { return inner_->kind(); }
  nlohmann::json transcript() const;

 protected:
  llm::ChatResponse do_complete(const llm::ChatRequest& request) override;

 private:
  void store(const std::string& tag, nlohmann::json entry);

  std::unique_ptr<llm::ChatBackend> inner_;
  mutable std::mutex mutex_;
  nlohmann::json transcript_ = nlohmann::json::object();
};

/// Backend described by the config. Each backend owns a private ledger.
std::unique_ptr<llm::ChatBackend> make_backend(const BackendConfig& config, const std::vector<data::ColumnSchema>& schema,
                                               std::uint64_t seed);

}  // namespace malmas::orchestrator
