#include "malmas/orchestrator/run_dir.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "malmas/data/csv.hpp"
#include "malmas/llm/scripted.hpp"
#include "malmas/memory/memory.hpp"

namespace malmas::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RunError(fmt::format("cannot open {}", path.string()));
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& path) {
  json j = json::parse(read_text(path), nullptr, false);
  if (j.is_discarded()) throw RunError(fmt::format("{} is not valid JSON", path.string()));
  return j;
}

ConfigFile ConfigFile::parse(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ConfigFile f;
  json rest = j;
  if (auto it = rest.find("data"); it != rest.end()) {
    f.data = DataSource::from_json(*it);
    rest.erase("data");
  }
  f.config = RunConfig::from_json(rest);
  return f;
}

ConfigFile ConfigFile::load(const fs::path& path) {
  ConfigFile f = parse(read_json(path));
  if (f.data && fs::path(f.data->path).is_relative())
    f.data->path = (path.parent_path() / f.data->path).lexically_normal().string();
  return f;
}

RunFiles render_run(const RunResult& result, const DataSource& source, const json& transcript) {
  RunFiles files;
  json config = result.config.to_json();
  config["data"] = source.to_json();
  files["config.json"] = memory::dump_canonical(config);
  for (const auto& r : result.rounds)
    files[fmt::format("rounds/round-{}.json", r.round)] = memory::dump_canonical(r.to_json());
  files["memory.json"] = memory::dump_canonical(result.memory);
  files["ledger.json"] = memory::dump_canonical(result.ledger);
  files["result.json"] = memory::dump_canonical(result.to_json());
  files["transcript.json"] = memory::dump_canonical(transcript);
  return files;
}

Execution execute(const RunConfig& config, const DataSource& source, unsigned workers, const json* transcript) {
  config.validate();
  const data::Table raw = data::load_csv(source.path, source.target, source.task);
  Prepared prepared = prepare(raw, config);
  std::unique_ptr<llm::ChatBackend> inner;
  if (transcript) inner = std::make_unique<llm::ScriptedBackend>(*transcript, std::make_shared<llm::TokenLedger>());
  else inner = make_backend(config.backend, prepared.train.feature_schema(), config.seed);
  RecordingBackend backend(std::move(inner), std::make_shared<llm::TokenLedger>());
  Execution e;
  e.result = run(config, std::move(prepared), backend, {workers, nullptr});
  e.files = render_run(e.result, source, backend.transcript());
  return e;
}

void write_files(const fs::path& dir, const RunFiles& files) {
  for (const auto& [rel, content] : files) {
    const fs::path path = dir / rel;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw RunError(fmt::format("cannot write {}", path.string()));
  }
}

ReplayOutcome replay(const fs::path& dir, unsigned workers) {
  const ConfigFile cf = ConfigFile::parse(read_json(dir / "config.json"));
  if (!cf.data) throw RunError(fmt::format("{} has no data section", (dir / "config.json").string()));
  const json transcript = read_json(dir / "transcript.json");
  const Execution e = execute(cf.config, *cf.data, workers, &transcript);
  for (const auto& [rel, content] : e.files) {
    const fs::path path = dir / rel;
    if (!fs::exists(path) || read_text(path) != content) return {false, rel};
  }
  return {true, {}};
}

}  // namespace malmas::orchestrator
