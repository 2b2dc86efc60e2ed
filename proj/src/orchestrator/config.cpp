#include "malmas/orchestrator/config.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace malmas::orchestrator {

using nlohmann::json;

namespace {

std::string_view backend_name(BackendKind kind) {
  switch (kind) {
    case BackendKind::heuristic: return "heuristic";
    case BackendKind::scripted: return "scripted";
    case BackendKind::openai: return "openai";
  }
  return "?";
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("config key \"{}\": {}", key, e.what()));
    }
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", where));
  for (const auto& [key, _] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError(fmt::format("unknown key \"{}\" in {}", key, where));
  }
}

}  // namespace

BackendConfig BackendConfig::parse(std::string_view text) {
  BackendConfig b;
  if (text == "heuristic") {
    b.kind = BackendKind::heuristic;
  } else if (text == "openai") {
    b.kind = BackendKind::openai;
  } else if (text.starts_with("scripted:") && text.size() > 9) {
    b.kind = BackendKind::scripted;
    b.script = std::string(text.substr(9));
  } else {
    throw ConfigError(fmt::format("bad backend \"{}\" (heuristic | openai | scripted:FILE)", text));
  }
  return b;
}

eval::ModelSpec parse_model(std::string_view text) {
  if (text == "builtin-gbdt") return eval::ModelSpec::builtin_gbdt();
  if (text == "builtin-logreg") return eval::ModelSpec::builtin_logreg();
  if (text.starts_with("external:") && text.size() > 9) return eval::ModelSpec::external(std::string(text.substr(9)));
  throw ConfigError(fmt::format("bad model \"{}\" (builtin-gbdt | builtin-logreg | external:CMD)", text));
}

void RunConfig::validate() const {
  auto need = [](bool ok, std::string_view what) {
    if (!ok) throw ConfigError(std::string(what));
  };
  need(rounds >= 1, "rounds must be >= 1");
  need(top_n >= 1, "top_n must be >= 1");
  need(proposals_per_agent >= 1, "proposals_per_agent must be >= 1");
  need(min_effective >= 0, "min_effective must be >= 0");
  need(folds >= 2, "folds must be >= 2");
  if (router.kind == agents::RouterKind::fixed_k || router.kind == agents::RouterKind::random_k)
    need(router.k >= 1 && router.k <= static_cast<int>(agents::kAllRoles.size()), "router k must be in [1, 6]");
  need(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must be in (0, 1)");
  need(model.params.trees >= 1 && model.params.max_depth >= 1 && model.params.learning_rate > 0.0,
       "model parameters must be positive");
  need(model.kind != eval::ModelKind::external || !model.external_cmd.empty(), "external model needs a command");
  need(backend.kind != BackendKind::scripted || !backend.script.empty(), "scripted backend needs a script file");
}

eval::Metric RunConfig::metric_for(data::Task task) const {
  if (metric) {
    const bool regression_metric = *metric == eval::Metric::nrmse;
    if (regression_metric != (task == data::Task::regression))
      throw ConfigError(fmt::format("metric {} does not fit a {} task", eval::to_string(*metric), data::to_string(task)));
    return *metric;
  }
  return task == data::Task::regression ? eval::Metric::nrmse : eval::Metric::auc;
}

json RunConfig::to_json() const {
  json model_j = {{"kind", eval::to_string(model.kind)},
                  {"trees", model.params.trees},
                  {"learning_rate", model.params.learning_rate},
                  {"max_depth", model.params.max_depth},
                  {"l2", model.params.l2}};
  if (model.kind == eval::ModelKind::external) model_j["command"] = model.external_cmd;
  json backend_j = {{"kind", backend_name(backend.kind)}};
  if (backend.kind == BackendKind::scripted) backend_j["script"] = backend.script;
  if (backend.kind == BackendKind::openai) {
    backend_j["endpoint"] = backend.endpoint;
    backend_j["model"] = backend.model;
  }
  return {{"rounds", rounds},
          {"top_n", top_n},
          {"proposals_per_agent", proposals_per_agent},
          {"min_effective", min_effective},
          {"router", router.str()},
          {"model", model_j},
          {"metric", metric ? json(eval::to_string(*metric)) : json(nullptr)},
          {"folds", folds},
          {"seed", seed},
          {"memory_flags", {{"proc", memory_flags.proc}, {"feed", memory_flags.feed}, {"con", memory_flags.con}, {"global", memory_flags.global}}},
          {"require_positive_gain", require_positive_gain},
          {"per_agent_selection", per_agent_selection},
          {"batch_evaluation", batch_evaluation},
          {"train_fraction", train_fraction},
          {"backend", backend_j}};
}

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"rounds", "top_n", "proposals_per_agent", "min_effective", "router", "model", "metric", "folds", "seed",
                  "memory_flags", "require_positive_gain", "per_agent_selection", "batch_evaluation", "train_fraction",
                  "backend"},
                 "config");
  RunConfig c;
  take(j, "rounds", c.rounds);
  take(j, "top_n", c.top_n);
  take(j, "proposals_per_agent", c.proposals_per_agent);
  take(j, "min_effective", c.min_effective);
  take(j, "folds", c.folds);
  take(j, "seed", c.seed);
  take(j, "require_positive_gain", c.require_positive_gain);
  take(j, "per_agent_selection", c.per_agent_selection);
  take(j, "batch_evaluation", c.batch_evaluation);
  take(j, "train_fraction", c.train_fraction);
  if (j.contains("router")) {
    std::string text;
    take(j, "router", text);
    try {
      c.router = agents::RouterStrategy::parse(text);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  if (auto it = j.find("metric"); it != j.end() && !it->is_null()) {
    try {
      c.metric = eval::parse_metric(it->get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("config key \"metric\": {}", e.what()));
    }
  }
  if (auto it = j.find("model"); it != j.end()) {
    if (it->is_string()) {
      c.model = parse_model(it->get<std::string>());
    } else {
      reject_unknown(*it, {"kind", "trees", "learning_rate", "max_depth", "l2", "command", "simple"}, "model");
      std::string kind = "builtin-gbdt", command;
      bool simple = false;
      take(*it, "kind", kind);
      take(*it, "command", command);
      take(*it, "simple", simple);
      if (kind == "builtin-gbdt") c.model = eval::ModelSpec::builtin_gbdt();
      else if (kind == "builtin-logreg") c.model = eval::ModelSpec::builtin_logreg();
      else if (kind == "external") c.model = eval::ModelSpec::external(command, simple);
      else throw ConfigError(fmt::format("unknown model kind \"{}\"", kind));
      take(*it, "trees", c.model.params.trees);
      take(*it, "learning_rate", c.model.params.learning_rate);
      take(*it, "max_depth", c.model.params.max_depth);
      take(*it, "l2", c.model.params.l2);
    }
  }
  if (auto it = j.find("memory_flags"); it != j.end()) {
    reject_unknown(*it, {"proc", "feed", "con", "global"}, "memory_flags");
    take(*it, "proc", c.memory_flags.proc);
    take(*it, "feed", c.memory_flags.feed);
    take(*it, "con", c.memory_flags.con);
    take(*it, "global", c.memory_flags.global);
  }
  if (auto it = j.find("backend"); it != j.end()) {
    if (it->is_string()) {
      c.backend = BackendConfig::parse(it->get<std::string>());
    } else {
      reject_unknown(*it, {"kind", "script", "endpoint", "model"}, "backend");
      std::string kind = "heuristic";
      take(*it, "kind", kind);
      if (kind == "heuristic") c.backend.kind = BackendKind::heuristic;
      else if (kind == "scripted") c.backend.kind = BackendKind::scripted;
      else if (kind == "openai") c.backend.kind = BackendKind::openai;
      else throw ConfigError(fmt::format("unknown backend kind \"{}\"", kind));
      take(*it, "script", c.backend.script);
      take(*it, "endpoint", c.backend.endpoint);
      take(*it, "model", c.backend.model);
    }
  }
  c.validate();
  return c;
}

}  // namespace malmas::orchestrator
