#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "malmas/agents/agents.hpp"
#include "malmas/eval/metrics.hpp"
#include "malmas/eval/model.hpp"
#include "malmas/memory/memory.hpp"

namespace malmas::orchestrator {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class BackendKind { heuristic, scripted, openai };

struct BackendConfig {
  BackendKind kind = BackendKind::heuristic;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string script;  // path, scripted only

  /// "heuristic" | "openai" | "scripted:FILE"
  static BackendConfig parse(std::string_view text);
  bool operator==(const BackendConfig&) const = default;
};

struct RunConfig {
  int rounds = 4;
  int top_n = 3;
  int proposals_per_agent = 5;
  int min_effective = 2;
  agents::RouterStrategy router;
  eval::ModelSpec model = eval::ModelSpec::builtin_gbdt();
  std::optional<eval::Metric> metric;  // auc or nrmse by task when unset
  int folds = 5;
  std::uint64_t seed = 0;
  memory::MemoryFlags memory_flags;
  bool require_positive_gain = true;
  bool per_agent_selection = false;
  bool batch_evaluation = false;
  double train_fraction = 0.6;
  BackendConfig backend;

  /// Throws ConfigError for out-of-range values.
  void validate() const;
  eval::Metric metric_for(data::Task task) const;

  nlohmann::json to_json() const;
  /// Starts from the defaults and overrides every key present. Unknown keys
  /// are errors.
  static RunConfig from_json(const nlohmann::json& j);
  bool operator==(const RunConfig&) const = default;
};

/// "builtin-gbdt" | "builtin-logreg" | "external:CMD"
eval::ModelSpec parse_model(std::string_view text);

}  // namespace malmas::orchestrator
