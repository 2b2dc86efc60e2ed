#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malmas/orchestrator/run_dir.hpp"

namespace malmas::orchestrator {

/// Per-round metric table, token table by round and agent, test row.
/// Inputs are the parsed result.json and ledger.json of a run directory.
nlohmann::json report_json(const nlohmann::json& result, const nlohmann::json& ledger);
std::string report_text(const nlohmann::json& result, const nlohmann::json& ledger);

struct BenchSuite {
  struct Dataset {
    std::string name;
    DataSource source;
  };
  struct Method {
    std::string name;
    RunConfig config;
  };
  std::vector<Dataset> datasets;
  std::vector<Method> methods;

  /// {"datasets": [{name, path, target, task}], "configs": [{name, ...RunConfig keys}]}.
  /// Relative data paths are resolved against `base`.
  static BenchSuite parse(const nlohmann::json& j, const std::filesystem::path& base = {});
  static BenchSuite load(const std::filesystem::path& path);
};

/// values[dataset][method] of the held-out test metric, plus mean ranks.
/// Each run directory is written under out/<dataset>/<method> when `out`
/// is non-empty.
nlohmann::json run_bench(const BenchSuite& suite, unsigned workers, const std::filesystem::path& out = {});

/// Mean-rank table from the same values; minimize metrics are ranked
/// ascending.
nlohmann::json mean_rank_json(const std::vector<std::string>& methods, const std::vector<std::string>& datasets,
                              const std::vector<std::string>& metrics, const std::vector<std::vector<double>>& values);
std::string mean_rank_text(const nlohmann::json& bench);

}  // namespace malmas::orchestrator
