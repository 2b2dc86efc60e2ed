// malmas: command-line front end for the feature generation loop.

#include <cctype>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "malmas/data/csv.hpp"
#include "malmas/data/preprocess.hpp"
#include "malmas/dsl/interpreter.hpp"
#include "malmas/dsl/parser.hpp"
#include "malmas/dsl/render.hpp"
#include "malmas/dsl/typecheck.hpp"
#include "malmas/orchestrator/report.hpp"

namespace fs = std::filesystem;
namespace orch = malmas::orchestrator;
using nlohmann::json;

namespace {

constexpr int kOk = 0, kUsage = 1, kRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, std::string_view what) {
  if (!fs::is_regular_file(path)) throw UsageError(fmt::format("{} not found: {}", what, path));
}

// Splits a .dsl file into programs, one per FEATURE header. '#' lines are comments.
std::vector<std::string> split_programs(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i == line.size() || line[i] == '#') continue;
    std::string head = line.substr(i, 7);
    for (char& c : head) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (head == "FEATURE" || out.empty()) out.emplace_back();
    out.back() += line + "\n";
  }
  return out;
}

std::optional<malmas::data::Table> load_table(const std::string& path, const std::string& target, const std::string& task) {
  if (path.empty()) return std::nullopt;
  require_file(path, "data file");
  if (target.empty()) throw UsageError("--target is required with --data");
  const auto raw = malmas::data::load_csv(path, target, malmas::data::parse_task(task));
  return malmas::data::preprocess(malmas::data::encode_target(raw));
}

json check_program(const std::string& text, const malmas::data::Table* table, std::optional<malmas::dsl::TypedProgram>* typed) {
  json errors = json::array();
  try {
    auto program = malmas::dsl::parse(text);
    if (table) {
      try {
        const auto schema = table->feature_schema();
        auto t = malmas::dsl::typecheck(program, schema);
        if (typed) *typed = std::move(t);
      } catch (const malmas::dsl::TypeError& e) {
        for (const auto& d : e.diagnostics()) errors.push_back(d.message);
      }
    }
  } catch (const malmas::dsl::ParseError& e) {
    errors.push_back(e.what());
  }
  return errors;
}

// Flag values that fail to parse are usage errors.
template <typename F>
auto flag_value(std::string_view flag, F parse) {
  try {
    return parse();
  } catch (const std::exception& e) {
    throw UsageError(fmt::format("{}: {}", flag, e.what()));
  }
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  CLI::App app{"Memory-augmented multi-agent feature generation for tabular data"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  bool verbose = false;
  app.add_option("--workers", workers, "Worker threads for concurrent agents and evaluations")->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "Log progress to stderr");

  const orch::RunConfig defaults;

  // run
  auto* run = app.add_subcommand("run", "Run the feature generation loop and write a run directory");
  std::string data_path, target, task = "classification", config_path, out = "malmas-run";
  int rounds = defaults.rounds, top_n = defaults.top_n, proposals = defaults.proposals_per_agent,
      min_effective = defaults.min_effective, folds = defaults.folds;
  std::string router = defaults.router.str(), backend = "heuristic", model = "builtin-gbdt", metric;
  std::uint64_t seed = defaults.seed;
  double train_fraction = defaults.train_fraction;
  bool no_proc = false, no_feed = false, no_con = false, no_global = false, allow_nonpositive = false,
       per_agent = false, batch = false, simple = false;
  run->add_option("--data", data_path, "CSV file")->required();
  run->add_option("--target", target, "Target column")->required();
  run->add_option("--task", task, "classification | regression")->capture_default_str()->check(CLI::IsMember({"classification", "regression"}));
  run->add_option("--config", config_path, "JSON config file (RunConfig keys); flags given here override it");
  run->add_option("--rounds", rounds, "Interaction rounds")->capture_default_str();
  run->add_option("--top-n", top_n, "Features kept per round")->capture_default_str();
  run->add_option("--proposals", proposals, "Proposals requested per agent per round")->capture_default_str();
  run->add_option("--min-effective", min_effective, "Effective features needed before an agent summary")->capture_default_str();
  run->add_option("--router", router, "llm | all | fixed:K | random:K")->capture_default_str();
  run->add_option("--backend", backend, "heuristic | openai | scripted:FILE")->capture_default_str();
  run->add_option("--model", model, "builtin-gbdt | builtin-logreg | external:CMD")->capture_default_str();
  run->add_flag("--simple", simple, "External model: 50 trees instead of 500");
  run->add_option("--metric", metric, "auc | accuracy | nrmse (default: auc, or nrmse for regression)");
  run->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
  run->add_option("--seed", seed, "Base seed")->capture_default_str();
  run->add_option("--train-fraction", train_fraction, "Share of rows in the training split")->capture_default_str();
  run->add_flag("--no-proc-mem", no_proc, "Disable procedural memory");
  run->add_flag("--no-feed-mem", no_feed, "Disable feedback memory");
  run->add_flag("--no-con-mem", no_con, "Disable per-agent conceptual memory");
  run->add_flag("--no-global-mem", no_global, "Disable global conceptual memory");
  run->add_flag("--allow-nonpositive", allow_nonpositive, "Admit top-N features even with gain <= 0");
  run->add_flag("--per-agent-selection", per_agent, "Apply top-N within each agent instead of globally");
  run->add_flag("--batch-evaluation", batch, "Score each agent's proposals jointly instead of one by one");
  run->add_option("--out", out, "Run directory; nothing is written elsewhere")->capture_default_str();

  auto* replay = app.add_subcommand("replay", "Re-execute a run directory and verify it byte for byte");
  std::string dir;
  replay->add_option("DIR", dir, "Run directory")->required();

  auto* report = app.add_subcommand("report", "Print the metric and token tables of a run (or bench) directory");
  bool as_json = false;
  report->add_option("DIR", dir, "Run directory")->required();
  report->add_flag("--json", as_json, "Emit JSON");

  auto* inspect = app.add_subcommand("inspect-memory", "Print slices of a run's memory snapshot");
  std::optional<int> round;
  std::string agent;
  inspect->add_option("DIR", dir, "Run directory")->required();
  inspect->add_option("--round", round, "Only records of this round");
  inspect->add_option("--agent", agent, "Only this agent role");

  auto* dsl = app.add_subcommand("dsl", "Check or evaluate DSL programs");
  dsl->require_subcommand(1);
  auto* check = dsl->add_subcommand("check", "Parse (and with --data, typecheck) every program in a file");
  std::string program_file, program;
  check->add_option("FILE", program_file, "File of FEATURE programs")->required();
  check->add_option("--data", data_path, "CSV file to typecheck against");
  check->add_option("--target", target, "Target column of --data");
  check->add_option("--task", task, "classification | regression")->capture_default_str();
  auto* deval = dsl->add_subcommand("eval", "Evaluate one program on a dataset");
  deval->add_option("--data", data_path, "CSV file")->required();
  deval->add_option("--target", target, "Target column")->required();
  deval->add_option("--task", task, "classification | regression")->capture_default_str();
  deval->add_option("--program", program, "Program text, or @FILE")->required();
  deval->add_option("--seed", seed, "Seed for cluster initialisation")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Run configs x datasets and print the mean-rank table");
  std::string suite;
  std::string bench_out;
  bench->add_option("--suite", suite, "Suite JSON file")->required();
  bench->add_option("--out", bench_out, "Directory for the run directories and bench.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (*run) {
      require_file(data_path, "data file");
      orch::ConfigFile cf;
      if (!config_path.empty()) {
        require_file(config_path, "config file");
        cf = orch::ConfigFile::load(config_path);
      }
      orch::RunConfig& c = cf.config;
      auto given = [&](const char* flag) { return run->count(flag) > 0; };
      if (given("--rounds")) c.rounds = rounds;
      if (given("--top-n")) c.top_n = top_n;
      if (given("--proposals")) c.proposals_per_agent = proposals;
      if (given("--min-effective")) c.min_effective = min_effective;
      if (given("--router")) c.router = flag_value("--router", [&] { return malmas::agents::RouterStrategy::parse(router); });
      if (given("--backend")) c.backend = orch::BackendConfig::parse(backend);
      if (given("--model")) c.model = orch::parse_model(model);
      if (simple) {
        if (c.model.kind != malmas::eval::ModelKind::external) throw UsageError("--simple needs an external model");
        c.model = malmas::eval::ModelSpec::external(c.model.external_cmd, true);
      }
      if (given("--metric")) c.metric = flag_value("--metric", [&] { return malmas::eval::parse_metric(metric); });
      if (given("--folds")) c.folds = folds;
      if (given("--seed")) c.seed = seed;
      if (given("--train-fraction")) c.train_fraction = train_fraction;
      if (no_proc) c.memory_flags.proc = false;
      if (no_feed) c.memory_flags.feed = false;
      if (no_con) c.memory_flags.con = false;
      if (no_global) c.memory_flags.global = false;
      if (allow_nonpositive) c.require_positive_gain = false;
      if (per_agent) c.per_agent_selection = true;
      if (batch) c.batch_evaluation = true;
      if (c.backend.kind == orch::BackendKind::scripted) {
        if (!config_path.empty() && fs::path(c.backend.script).is_relative() && !given("--backend"))
          c.backend.script = (fs::path(config_path).parent_path() / c.backend.script).string();
        require_file(c.backend.script, "script file");
        c.backend.script = fs::absolute(c.backend.script).lexically_normal().string();
      }
      c.validate();
      const orch::DataSource source{fs::absolute(data_path).lexically_normal().string(), target,
                                    flag_value("--task", [&] { return malmas::data::parse_task(task); })};
      c.metric_for(source.task);
      const orch::Execution e = orch::execute(c, source, workers);
      orch::write_files(out, e.files);
      std::cout << orch::report_text(e.result.to_json(), e.result.ledger);
      std::cout << "run directory: " << out << "\n";
      return kOk;
    }
    if (*replay) {
      if (!fs::is_regular_file(fs::path(dir) / "config.json")) throw UsageError("not a run directory: " + dir);
      const auto outcome = orch::replay(dir, workers);
      if (!outcome.identical) {
        std::cerr << "replay mismatch: " << outcome.mismatch << "\n";
        return kRuntime;
      }
      std::cout << "replay identical\n";
      return kOk;
    }
    if (*report) {
      if (fs::is_regular_file(fs::path(dir) / "bench.json")) {
        const json bench_j = orch::read_json(fs::path(dir) / "bench.json");
        if (as_json) print(bench_j);
        else std::cout << orch::mean_rank_text(bench_j);
        return kOk;
      }
      if (!fs::is_regular_file(fs::path(dir) / "result.json")) throw UsageError("not a run directory: " + dir);
      const json result = orch::read_json(fs::path(dir) / "result.json");
      const json ledger = orch::read_json(fs::path(dir) / "ledger.json");
      if (as_json) print(orch::report_json(result, ledger));
      else std::cout << orch::report_text(result, ledger);
      return kOk;
    }
    if (*inspect) {
      const fs::path path = fs::path(dir) / "memory.json";
      if (!fs::is_regular_file(path)) throw UsageError("no memory.json in " + dir);
      json snap = orch::read_json(path);
      if (!agent.empty()) {
        if (!malmas::agents::parse_role(agent)) throw UsageError("unknown agent role: " + agent);
        snap["agents"] = json{{agent, snap.at("agents").at(agent)}};
      }
      if (round) {
        auto keep = [&](json& arr) {
          json kept = json::array();
          for (auto& r : arr)
            if (r.value("round", -1) == *round) kept.push_back(r);
          arr = kept;
        };
        for (auto& [_, a] : snap["agents"].items())
          for (const char* key : {"proc", "feed", "concepts"}) keep(a[key]);
        keep(snap["global"]);
      }
      print(snap);
      return kOk;
    }
    if (*check) {
      require_file(program_file, "program file");
      const auto table = load_table(data_path, target, task);
      const auto programs = split_programs(orch::read_text(program_file));
      json errors = json::array();
      for (std::size_t i = 0; i < programs.size(); ++i)
        for (auto& msg : check_program(programs[i], table ? &*table : nullptr, nullptr))
          errors.push_back({{"program", i}, {"message", msg}});
      if (programs.empty()) errors.push_back({{"program", 0}, {"message", "no programs found"}});
      const bool ok = errors.empty();
      print({{"ok", ok}, {"programs", programs.size()}, {"errors", errors}});
      return ok ? kOk : kRuntime;
    }
    if (*deval) {
      std::string text = program;
      if (text.starts_with("@")) {
        require_file(text.substr(1), "program file");
        text = orch::read_text(text.substr(1));
      }
      const auto table = load_table(data_path, target, task);
      std::optional<malmas::dsl::TypedProgram> typed;
      json errors = check_program(text, &*table, &typed);
      json preview = json::array();
      if (errors.empty()) {
        const auto values = malmas::dsl::evaluate(*typed, *table, seed);
        for (std::size_t i = 0; i < std::min<std::size_t>(5, values.size()); ++i) preview.push_back(values[i]);
      }
      const bool ok = errors.empty();
      print({{"ok", ok}, {"errors", errors}, {"preview", preview}});
      return ok ? kOk : kRuntime;
    }
    if (*bench) {
      require_file(suite, "suite file");
      const auto s = orch::BenchSuite::load(suite);
      const json result = orch::run_bench(s, workers, bench_out);
      std::cout << orch::mean_rank_text(result);
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const orch::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
