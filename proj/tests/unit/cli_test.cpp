#include <sys/wait.h>

#include <cstdio>
#include <fstream>

#include <fmt/format.h>
#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support.hpp"

using namespace malmas;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

// Runs the CLI through the shell; stderr is discarded.
Outcome cli(const std::string& args, const fs::path& cwd = {}) {
  std::string cmd = fmt::format("\"{}\" {} 2>/dev/null", MALMAS_CLI, args);
  if (!cwd.empty()) cmd = fmt::format("cd \"{}\" && {}", cwd.string(), cmd);
  Outcome o;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return o;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, pipe)) > 0;) o.out.append(buf, n);
  const int status = pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path data_file(const std::string& name) {
  static const fs::path dir = fixture::temp_dir("cli_data");
  const fs::path p = dir / (name + ".csv");
  if (!fs::exists(p)) fixture::write_csv(fixture::product_table(200, 8), p);
  return p;
}

std::string run_args(const fs::path& out) {
  return fmt::format("run --data \"{}\" --target y --task classification --rounds 1 --folds 3 --proposals 2 "
                     "--router fixed:2 --seed 3 --out \"{}\" --workers 1",
                     data_file("prod").string(), out.string());
}

}  // namespace

TEST(Cli, HelpListsFlagsWithDefaults) {
  const auto o = cli("run --help");
  EXPECT_EQ(o.code, 0);
  for (const char* flag : {"--rounds", "--top-n", "--router", "--backend", "--model", "--seed", "--out", "--no-feed-mem"})
    EXPECT_NE(o.out.find(flag), std::string::npos) << flag;
  EXPECT_NE(o.out.find("malmas-run"), std::string::npos);
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli(run_args("/tmp/never") + " --rounds abc").code, 1);
  EXPECT_EQ(cli(run_args("/tmp/never") + " --router sometimes").code, 1);
  EXPECT_EQ(cli("run --target y").code, 1);
  EXPECT_FALSE(fs::exists("/tmp/never"));
}

TEST(Cli, MissingInputsAreUsageErrors) {
  EXPECT_EQ(cli("run --data /nonexistent.csv --target y --out /tmp/never2").code, 1);
  EXPECT_EQ(cli("replay /nonexistent-dir").code, 1);
  EXPECT_FALSE(fs::exists("/tmp/never2"));
}

TEST(Cli, RuntimeErrorsExitTwo) {
  const fs::path dir = fixture::temp_dir("cli_runtime");
  std::ofstream(dir / "ragged.csv") << "a,b,y\n1,2,0\n3,1\n";
  EXPECT_EQ(cli(fmt::format("run --data \"{}\" --target y --out \"{}\"", (dir / "ragged.csv").string(),
                            (dir / "out").string()))
                .code,
            2);
  fs::create_directories(dir / "broken");
  std::ofstream(dir / "broken/config.json") << "{not json";
  EXPECT_EQ(cli(fmt::format("replay \"{}\"", (dir / "broken").string())).code, 2);
}

TEST(Cli, DslCheck) {
  const fs::path dir = fixture::temp_dir("cli_dsl");
  std::ofstream(dir / "good.dsl") << "FEATURE ab = a * b\nFEATURE s = sq(a)\n";
  std::ofstream(dir / "bad.dsl") << "FEATURE ab = a *\n";
  const auto good = cli(fmt::format("dsl check \"{}\"", (dir / "good.dsl").string()));
  EXPECT_EQ(good.code, 0);
  const auto j = nlohmann::json::parse(good.out);
  EXPECT_EQ(j.at("ok"), true);
  EXPECT_EQ(j.at("programs"), 2);
  const auto bad = cli(fmt::format("dsl check \"{}\"", (dir / "bad.dsl").string()));
  EXPECT_EQ(bad.code, 2);
  EXPECT_EQ(nlohmann::json::parse(bad.out).at("ok"), false);
}

TEST(Cli, DslEvalPreview) {
  const auto o = cli(fmt::format("dsl eval --data \"{}\" --target y --program \"FEATURE p = x1 * x2\"",
                                 data_file("prod").string()));
  ASSERT_EQ(o.code, 0);
  const auto j = nlohmann::json::parse(o.out);
  EXPECT_EQ(j.at("ok"), true);
  EXPECT_EQ(j.at("preview").size(), 5u);
}

TEST(Cli, RunIsDeterministicAndConfinedToOut) {
  const fs::path cwd = fixture::temp_dir("cli_run_cwd");
  const auto a = cli(run_args("out_a"), cwd);
  const auto b = cli(run_args("out_b"), cwd);
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  std::set<std::string> entries;
  for (const auto& e : fs::directory_iterator(cwd)) entries.insert(e.path().filename().string());
  EXPECT_EQ(entries, (std::set<std::string>{"out_a", "out_b"}));
  EXPECT_EQ(slurp(cwd / "out_a/result.json"), slurp(cwd / "out_b/result.json"));
  EXPECT_FALSE(slurp(cwd / "out_a/result.json").empty());
  for (const char* f : {"config.json", "memory.json", "ledger.json", "rounds/round-1.json"})
    EXPECT_TRUE(fs::exists(cwd / "out_a" / f)) << f;
}

TEST(Cli, ReplayReportInspect) {
  const fs::path dir = fixture::temp_dir("cli_replay") / "run";
  ASSERT_EQ(cli(run_args(dir.string())).code, 0);
  EXPECT_EQ(cli(fmt::format("replay \"{}\"", dir.string())).code, 0);

  const auto report = cli(fmt::format("report \"{}\"", dir.string()));
  EXPECT_EQ(report.code, 0);
  EXPECT_NE(report.out.find("\ntest "), std::string::npos);
  const auto rj = cli(fmt::format("report \"{}\" --json", dir.string()));
  EXPECT_EQ(nlohmann::json::parse(rj.out).at("rounds").size(), 1u);

  const auto mem = cli(fmt::format("inspect-memory \"{}\" --agent unary", dir.string()));
  EXPECT_EQ(mem.code, 0);
  EXPECT_NO_THROW((void)nlohmann::json::parse(mem.out));
  EXPECT_EQ(cli(fmt::format("inspect-memory \"{}\" --agent nobody", dir.string())).code, 1);

  std::ofstream(dir / "rounds/round-1.json", std::ios::app) << "\n";
  EXPECT_EQ(cli(fmt::format("replay \"{}\"", dir.string())).code, 2);
}
