#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "malmas/orchestrator/run.hpp"

namespace malmas::orchestrator {

/// A config file: RunConfig keys plus an optional "data" section.
struct ConfigFile {
  RunConfig config;
  std::optional<DataSource> data;

  static ConfigFile parse(const nlohmann::json& j);
  static ConfigFile load(const std::filesystem::path& path);
};

/// Relative path -> file content. Every file is a pure function of the
/// config, data and backend replies.
using RunFiles = std::map<std::string, std::string>;

/// config.json, rounds/round-<r>.json, memory.json, ledger.json,
/// result.json, transcript.json.
RunFiles render_run(const RunResult& result, const DataSource& source, const nlohmann::json& transcript);

struct Execution {
  RunResult result;
  RunFiles files;
};

/// Loads and prepares the data, builds the backend (or replays
/// `transcript` through a scripted backend), runs, renders.
Execution execute(const RunConfig& config, const DataSource& source, unsigned workers,
                  const nlohmann::json* transcript = nullptr);

/// Creates `dir` and writes the files under it.
void write_files(const std::filesystem::path& dir, const RunFiles& files);

struct ReplayOutcome {
  bool identical = false;
  std::string mismatch;  // first differing relative path
};

/// Re-executes a run directory from its config.json and transcript.json and
/// compares every file byte for byte.
ReplayOutcome replay(const std::filesystem::path& dir, unsigned workers);

std::string read_text(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace malmas::orchestrator
