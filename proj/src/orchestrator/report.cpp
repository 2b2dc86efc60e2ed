#include "malmas/orchestrator/report.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

#include "malmas/eval/metrics.hpp"
#include "malmas/llm/backend.hpp"
#include "malmas/memory/memory.hpp"

namespace malmas::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string join(const json& arr) {
  std::string out;
  for (const auto& v : arr) {
    if (!out.empty()) out += ",";
    out += v.get<std::string>();
  }
  return out;
}

std::string num(const json& v) { return v.is_number() ? fmt::format("{:.4f}", v.get<double>()) : "nan"; }

}  // namespace

json report_json(const json& result, const json& ledger) {
  json rounds = json::array();
  for (const auto& r : result.at("rounds")) {
    rounds.push_back({{"round", r.at("round")},
                      {"roles", r.at("selected_roles")},
                      {"candidates", r.at("candidates")},
                      {"effective", r.at("effective")},
                      {"admitted", r.at("selected_features").size()},
                      {"metric_before", r.at("metric_before")},
                      {"metric_after", r.at("metric_after")}});
  }
  // Tokens grouped by (round, agent); malformed tags fall into round 0.
  std::map<std::pair<int, std::string>, llm::Usage> groups;
  for (const auto& row : ledger.at("rows")) {
    const auto tag = llm::Tag::parse(row.at("tag").get<std::string>());
    auto& u = groups[tag ? std::pair{tag->round, tag->agent} : std::pair{0, row.at("tag").get<std::string>()}];
    u += {row.at("prompt_tokens").get<long>(), row.at("completion_tokens").get<long>(), row.at("calls").get<long>()};
  }
  json tokens = json::array();
  llm::Usage total;
  for (const auto& [key, u] : groups) {
    tokens.push_back({{"round", key.first}, {"agent", key.second}, {"prompt_tokens", u.prompt},
                      {"completion_tokens", u.completion}, {"calls", u.calls}});
    total += u;
  }
  return {{"metric", result.at("metric")},
          {"baseline_cv", result.at("baseline_cv")},
          {"rounds", rounds},
          {"test", {{"value", result.at("test").at("value")}, {"model", result.at("test").at("model")}}},
          {"tokens", tokens},
          {"token_total", {{"prompt_tokens", total.prompt}, {"completion_tokens", total.completion}, {"calls", total.calls}}}};
}

std::string report_text(const json& result, const json& ledger) {
  const json r = report_json(result, ledger);
  const std::string metric = r.at("metric").get<std::string>();
  std::string out = fmt::format("{:<6} {:<40} {:>10} {:>9} {:>8} {:>10} {:>10}\n", "round", "roles", "candidates",
                                "effective", "admitted", metric + "_before", metric + "_after");
  for (const auto& row : r.at("rounds")) {
    out += fmt::format("{:<6} {:<40} {:>10} {:>9} {:>8} {:>10} {:>10}\n", row.at("round").get<int>(), join(row.at("roles")),
                       row.at("candidates").get<int>(), row.at("effective").get<int>(), row.at("admitted").get<int>(),
                       num(row.at("metric_before")), num(row.at("metric_after")));
  }
  out += fmt::format("{:<6} {:<40} {:>10} {:>9} {:>8} {:>10} {:>10}\n", "test", r.at("test").at("model").get<std::string>(), "",
                     "", "", "", num(r.at("test").at("value")));
  out += fmt::format("\n{:<6} {:<24} {:>8} {:>14} {:>18}\n", "round", "agent", "calls", "prompt_tokens", "completion_tokens");
  for (const auto& row : r.at("tokens")) {
    out += fmt::format("{:<6} {:<24} {:>8} {:>14} {:>18}\n", row.at("round").get<int>(), row.at("agent").get<std::string>(),
                       row.at("calls").get<long>(), row.at("prompt_tokens").get<long>(),
                       row.at("completion_tokens").get<long>());
  }
  const auto& t = r.at("token_total");
  out += fmt::format("{:<6} {:<24} {:>8} {:>14} {:>18}\n", "total", "", t.at("calls").get<long>(),
                     t.at("prompt_tokens").get<long>(), t.at("completion_tokens").get<long>());
  return out;
}

BenchSuite BenchSuite::parse(const json& j, const fs::path& base) {
  if (!j.is_object() || !j.contains("datasets") || !j.contains("configs"))
    throw ConfigError("bench suite needs \"datasets\" and \"configs\"");
  BenchSuite s;
  for (const auto& d : j.at("datasets")) {
    DataSource src = DataSource::from_json(d);
    if (fs::path(src.path).is_relative() && !base.empty()) src.path = (base / src.path).lexically_normal().string();
    s.datasets.push_back({d.value("name", fs::path(src.path).stem().string()), src});
  }
  for (const auto& c : j.at("configs")) {
    if (!c.is_object() || !c.contains("name")) throw ConfigError("every bench config needs a name");
    json rest = c;
    rest.erase("name");
    s.methods.push_back({c.at("name").get<std::string>(), RunConfig::from_json(rest)});
  }
  if (s.datasets.empty() || s.methods.empty()) throw ConfigError("bench suite is empty");
  return s;
}

BenchSuite BenchSuite::load(const fs::path& path) { return parse(read_json(path), path.parent_path()); }

json mean_rank_json(const std::vector<std::string>& methods, const std::vector<std::string>& datasets,
                    const std::vector<std::string>& metrics, const std::vector<std::vector<double>>& values) {
  std::vector<std::vector<double>> oriented = values;
  for (std::size_t d = 0; d < oriented.size(); ++d) {
    if (eval::direction(eval::parse_metric(metrics[d])) == eval::Direction::minimize)
      for (double& v : oriented[d]) v = -v;
  }
  const eval::MeanRank mr = eval::mean_rank(oriented, eval::Direction::maximize);
  json ranks = json::array();
  for (double m : mr.means) ranks.push_back(std::isnan(m) ? json(nullptr) : json(m));
  json vals = json::array();
  for (const auto& row : values) {
    json r = json::array();
    for (double v : row) r.push_back(std::isnan(v) ? json(nullptr) : json(v));
    vals.push_back(r);
  }
  return {{"methods", methods}, {"datasets", datasets}, {"metrics", metrics},
          {"values", vals},     {"mean_rank", ranks},   {"notes", mr.notes}};
}

json run_bench(const BenchSuite& suite, unsigned workers, const fs::path& out) {
  std::vector<std::string> methods, datasets, metrics;
  for (const auto& m : suite.methods) methods.push_back(m.name);
  std::vector<std::vector<double>> values;
  for (const auto& d : suite.datasets) {
    datasets.push_back(d.name);
    std::vector<double> row;
    std::string metric;
    for (const auto& m : suite.methods) {
      const Execution e = execute(m.config, d.source, workers);
      const std::string this_metric(eval::to_string(e.result.metric));
      if (!metric.empty() && metric != this_metric)
        throw ConfigError(fmt::format("dataset {}: methods disagree on the metric", d.name));
      metric = this_metric;
      row.push_back(e.result.test.value);
      if (!out.empty()) write_files(out / d.name / m.name, e.files);
    }
    metrics.push_back(metric);
    values.push_back(std::move(row));
  }
  json bench = mean_rank_json(methods, datasets, metrics, values);
  if (!out.empty()) write_files(out, {{"bench.json", memory::dump_canonical(bench)}});
  return bench;
}

std::string mean_rank_text(const json& bench) {
  const auto& methods = bench.at("methods");
  const auto& datasets = bench.at("datasets");
  std::string out = fmt::format("{:<20}", "dataset");
  for (const auto& m : methods) out += fmt::format(" {:>14}", m.get<std::string>());
  out += "\n";
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    out += fmt::format("{:<20}", fmt::format("{} ({})", datasets[d].get<std::string>(), bench.at("metrics")[d].get<std::string>()));
    for (const auto& v : bench.at("values")[d]) out += fmt::format(" {:>14}", num(v));
    out += "\n";
  }
  out += fmt::format("{:<20}", "mean rank");
  for (const auto& v : bench.at("mean_rank")) out += fmt::format(" {:>14}", v.is_number() ? fmt::format("{:.2f}", v.get<double>()) : "nan");
  out += "\n";
  return out;
}

}  // namespace malmas::orchestrator
