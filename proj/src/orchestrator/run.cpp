#include "malmas/orchestrator/run.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "malmas/common/parallel.hpp"
#include "malmas/common/rng.hpp"
#include "malmas/data/metadata.hpp"
#include "malmas/data/split.hpp"
#include "malmas/dsl/render.hpp"
#include "malmas/llm/heuristic.hpp"
#include "malmas/llm/openai.hpp"
#include "malmas/llm/scripted.hpp"

namespace malmas::orchestrator {

using nlohmann::json;
using agents::Role;

constexpr std::string_view kDerivedHeader = "Derived features (round ";

json DataSource::to_json() const { return {{"path", path}, {"target", target}, {"task", data::to_string(task)}}; }

DataSource DataSource::from_json(const json& j) {
  try {
    return {j.at("path").get<std::string>(), j.at("target").get<std::string>(),
            data::parse_task(j.at("task").get<std::string>())};
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("bad data section: {}", e.what()));
  }
}

const data::Table& TestVault::open() {
  if (reads_++ > 0) throw std::logic_error("the test split may be read only once");
  return test_;
}

Prepared prepare(const data::Table& raw, const RunConfig& config) {
  Prepared p;
  const data::Table encoded = data::encode_target(raw, &p.classes);
  auto parts = data::split(encoded, {config.train_fraction, derive_seed(config.seed, "split"), config.folds});
  const auto pre = data::Preprocessor::fit(parts.train);
  p.train = pre.transform(parts.train);
  p.test = std::make_shared<TestVault>(pre.transform(parts.test));
  p.warnings = std::move(parts.warnings);
  return p;
}

std::vector<Candidate> select_top_n(std::vector<Candidate> candidates, int n, bool require_positive) {
  auto gain = [](const Candidate& c) {
    return std::isnan(c.report.gain) ? -std::numeric_limits<double>::infinity() : c.report.gain;
  };
  if (require_positive)
    std::erase_if(candidates, [&](const Candidate& c) { return !(gain(c) > 0.0); });
  std::stable_sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
    if (gain(a) != gain(b)) return gain(a) > gain(b);
    if (a.spec.role != b.spec.role) return a.spec.role < b.spec.role;
    return a.spec.name() < b.spec.name();
  });
  if (candidates.size() > static_cast<std::size_t>(std::max(n, 0))) candidates.resize(std::max(n, 0));
  return candidates;
}

json DerivedFeature::to_json() const {
  return {{"name", name},         {"program", program}, {"description", description},
          {"role", agents::to_string(role)}, {"round", round}, {"gain", gain}, {"value", value}};
}

std::string update_metadata(const std::string& metadata, const data::Table& extended,
                            const std::vector<DerivedFeature>& selected) {
  if (selected.empty()) return metadata;
  std::string out = data::metadata_text(extended);
  if (!out.empty() && out.back() != '\n') out += '\n';
  for (std::size_t at = metadata.find(kDerivedHeader); at != std::string::npos;) {
    if (at == 0 || metadata[at - 1] == '\n') {
      out += '\n';
      out += metadata.substr(at);
      if (out.back() != '\n') out += '\n';
      break;
    }
    at = metadata.find(kDerivedHeader, at + 1);
  }
  out += fmt::format("\n{}{}):\n", kDerivedHeader, selected.front().round);
  for (const auto& f : selected) {
    out += fmt::format("- {} = {}", f.name, f.program);
    if (!f.description.empty()) out += fmt::format("  # {}", f.description);
    out += fmt::format(" (role={}, gain={:.4f})\n", agents::to_string(f.role), f.gain);
  }
  return out;
}

json RoundReport::to_json() const {
  json roles = json::array();
  for (Role r : selected_roles) roles.push_back(agents::to_string(r));
  json features = json::array();
  for (const auto& f : selected_features) features.push_back(f.to_json());
  return {{"round", round},
          {"selected_roles", roles},
          {"router_rationale", router_rationale},
          {"candidates", candidates},
          {"accepted", accepted},
          {"effective", effective},
          {"selected_features", features},
          {"not_admitted", not_admitted},
          {"metric_before", metric_before},
          {"metric_after", metric_after},
          {"tokens", {{"prompt", tokens.prompt}, {"completion", tokens.completion}, {"calls", tokens.calls}}},
          {"agent_errors", agent_errors},
          {"evaluations", evaluations}};
}

json RunResult::to_json() const {
  json rounds_j = json::array();
  for (const auto& r : rounds) rounds_j.push_back(r.to_json());
  json features_j = json::array();
  for (const auto& f : features) features_j.push_back(f.to_json());
  return {{"config", config.to_json()},
          {"metric", eval::to_string(metric)},
          {"rounds", rounds_j},
          {"features", features_j},
          {"fitted", fitted},
          {"final_columns", final_columns},
          {"baseline_cv", baseline_cv},
          {"train_cv", train_cv},
          {"test", {{"value", test.value}, {"model", test.model}, {"note", test.note}, {"reads", test_reads}}},
          {"tokens", {{"prompt", tokens.prompt}, {"completion", tokens.completion}, {"calls", tokens.calls}}},
          {"warnings", warnings},
          {"memory_snapshot", "memory.json"},
          {"ledger", "ledger.json"}};
}

RecordingBackend::RecordingBackend(std::unique_ptr<llm::ChatBackend> inner, std::shared_ptr<llm::TokenLedger> ledger)
    : ChatBackend(std::move(ledger)), inner_(std::move(inner)) {}

void RecordingBackend::store(const std::string& tag, json entry) {
  std::lock_guard lock(mutex_);
  auto it = transcript_.find(tag);
  if (it == transcript_.end()) transcript_[tag] = std::move(entry);
  else if (it->is_array()) it->push_back(std::move(entry));
  else *it = json::array({*it, std::move(entry)});
}

llm::ChatResponse RecordingBackend::do_complete(const llm::ChatRequest& request) {
  try {
    llm::ChatResponse r = inner_->complete(request);
    store(request.tag, {{"content", r.content}, {"prompt_tokens", r.prompt_tokens}, {"completion_tokens", r.completion_tokens}});
    return r;
  } catch (const llm::BackendError& e) {
    store(request.tag, {{"error", e.what()}, {"kind", llm::to_string(e.kind())}});
    throw;
  }
}

json RecordingBackend::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

std::unique_ptr<llm::ChatBackend> make_backend(const BackendConfig& config, const std::vector<data::ColumnSchema>& schema,
                                               std::uint64_t seed) {
  auto ledger = std::make_shared<llm::TokenLedger>();
  switch (config.kind) {
    case BackendKind::heuristic:
      return std::make_unique<llm::HeuristicBackend>(schema, derive_seed(seed, "heuristic"), ledger);
    case BackendKind::scripted:
      return llm::ScriptedBackend::from_file(config.script, ledger);
    case BackendKind::openai: {
      llm::OpenAiConfig c;
      c.endpoint = config.endpoint;
      c.model = config.model;
      return std::make_unique<llm::OpenAiBackend>(c, ledger);
    }
  }
  throw ConfigError("unknown backend kind");
}

namespace {

std::vector<std::string> texts(const std::vector<memory::ConceptNote>& notes) {
  std::vector<std::string> out;
  for (const auto& n : notes) out.push_back(n.text);
  return out;
}

std::string strip_feature_prefix(const std::string& detail, const std::string& name) {
  const std::string prefix = fmt::format("FEATURE {} = ", name);
  return detail.starts_with(prefix) ? detail.substr(prefix.size()) : detail;
}

agents::PromptContext context_for(Role role, const memory::MemoryState& mem, const std::string& metadata,
                                  eval::Metric metric) {
  agents::PromptContext ctx;
  ctx.metadata = metadata;
  ctx.metric = std::string(eval::to_string(metric));
  const auto proc = mem.proc(role);
  std::map<std::pair<int, std::string>, std::string> programs;
  for (const auto& rec : proc) {
    if (rec.outcome == memory::Outcome::accepted)
      programs[{rec.round, rec.feature_name}] = strip_feature_prefix(rec.detail, rec.feature_name);
    if (!rec.canonical_key.empty()) ctx.attempted_keys.push_back(rec.canonical_key);
  }
  for (const auto& f : mem.feed(role)) {
    if (!f.effective) continue;
    auto it = programs.find({f.round, f.feature_name});
    ctx.effective_features.push_back({f.feature_name, it == programs.end() ? std::string() : it->second, f.value});
  }
  ctx.concept_notes = texts(mem.concepts(role));
  ctx.global_concepts = texts(mem.global());
  return ctx;
}

struct AgentWork {
  Role role = Role::unary;
  agents::ProposalBatch batch;
  std::vector<std::size_t> candidates;  // indices into the round's pending list
  std::string error;
};

struct Pending {
  std::size_t agent = 0;
  agents::TransformationSpec spec;
  std::vector<double> column;
  std::optional<dsl::FittedProgram> fitted;
  std::optional<eval::EvalReport> report;
  std::string error;
};

llm::Usage round_tokens(const llm::TokenLedger& ledger, int round) {
  llm::Usage u;
  for (const auto& row : ledger.report().rows) {
    const auto tag = llm::Tag::parse(row.key);
    if (tag && tag->round == round) u += row.usage;
  }
  return u;
}

}  // namespace

RunResult run(const RunConfig& config, Prepared data, llm::ChatBackend& backend, const RunOptions& options) {
  config.validate();
  const unsigned workers = std::max(1u, options.workers);
  const eval::Metric metric = config.metric_for(data.train.task());
  auto external = options.external;
  if (config.model.kind == eval::ModelKind::external && !external)
    external = std::make_shared<eval::ExternalEvaluator>(config.model.external_cmd);
  const eval::Evaluator evaluator(config.model, metric, config.folds, derive_seed(config.seed, "folds"), external);

  RunResult result;
  result.config = config;
  result.metric = metric;
  result.warnings = data.warnings;

  memory::MemoryState mem(config.memory_flags);
  std::set<std::string> registry;  // keys of every proposal evaluated so far, independent of memory flags
  data::Table train = std::move(data.train);
  std::string metadata = data::metadata_text(train);
  std::vector<dsl::FittedProgram> fitted;
  eval::Dataset ds = eval::to_dataset(train);
  eval::CvResult current = evaluator.train_eval(ds);
  for (const auto& w : current.warnings) result.warnings.push_back(w);
  result.baseline_cv = current.value;

  for (int r = 1; r <= config.rounds; ++r) {
    mem.begin_round(r);
    RoundReport rep;
    rep.round = r;
    rep.metric_before = current.value;
    const auto schema = train.feature_schema();

    agents::RouterDecision decision;
    try {
      decision = agents::route(metadata, schema, texts(mem.global()), config.router,
                               derive_seed(config.seed, fmt::format("round:{}:router", r)), &backend, r);
    } catch (const std::runtime_error& e) {
      throw RunError(fmt::format("round {}: routing failed: {}", r, e.what()));
    }
    rep.selected_roles = decision.selected;
    rep.router_rationale = decision.rationale;

    std::vector<AgentWork> agents_(decision.selected.size());
    std::vector<agents::PromptContext> contexts;
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      agents_[i].role = decision.selected[i];
      contexts.push_back(context_for(agents_[i].role, mem, metadata, metric));
    }
    parallel_for(agents_.size(), workers, [&](std::size_t i) {
      try {
        agents_[i].batch = agents::propose(agents_[i].role, contexts[i], backend, schema, config.proposals_per_agent, r,
                                           registry);
      } catch (const llm::BackendError& e) {
        agents_[i].error = e.what();
      }
    });

    // Barrier: cross-agent dedup in role order and final names.
    std::vector<Pending> pending;
    std::set<std::string> taken;
    for (const auto& s : train.schema()) taken.insert(s.name);
    std::map<std::string, std::string> round_keys;  // key -> "role:name"
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      auto& a = agents_[i];
      if (!a.error.empty()) continue;
      rep.candidates += static_cast<int>(a.batch.records.size());
      for (auto& spec : a.batch.specs) {
        auto rec = std::find_if(a.batch.records.begin(), a.batch.records.end(), [&](const memory::ProcRecord& p) {
          return p.outcome == memory::Outcome::accepted && p.canonical_key == spec.canonical_key;
        });
        if (auto it = round_keys.find(spec.canonical_key); it != round_keys.end()) {
          if (rec != a.batch.records.end()) {
            rec->outcome = memory::Outcome::duplicate;
            rec->detail = fmt::format("duplicate of {} in this round", it->second);
          }
          continue;
        }
        const std::string name = agents::unique_name(spec.name(), taken);
        if (name != spec.name()) {
          spec.typed.program.feature_name = name;
          if (rec != a.batch.records.end()) {
            rec->feature_name = name;
            rec->detail = dsl::render(spec.typed.program);
          }
        }
        round_keys[spec.canonical_key] = fmt::format("{}:{}", agents::to_string(a.role), name);
        a.candidates.push_back(pending.size());
        pending.push_back({i, spec, {}, std::nullopt, std::nullopt, {}});
      }
    }
    rep.accepted = static_cast<int>(pending.size());

    parallel_for(pending.size(), workers, [&](std::size_t j) {
      auto& p = pending[j];
      try {
        p.fitted = dsl::fit(p.spec.typed, train, derive_seed(config.seed, "cluster:" + p.spec.canonical_key), &p.column);
        if (!config.batch_evaluation) p.report = evaluator.marginal_gain(ds, current, p.spec.name(), p.column);
      } catch (const std::runtime_error& e) {
        p.error = e.what();
      }
    });
    if (config.batch_evaluation) {
      // One CV per agent with all of its candidates; every candidate shares the gain.
      parallel_for(agents_.size(), workers, [&](std::size_t i) {
        auto& a = agents_[i];
        if (a.candidates.empty()) return;
        eval::Dataset joint = ds;
        for (std::size_t j : a.candidates) {
          if (!pending[j].error.empty()) return;
          joint = joint.with_column(pending[j].spec.name(), pending[j].column);
        }
        try {
          const eval::CvResult cv = evaluator.train_eval(joint);
          const double gain = gain_of(metric, current.value, cv.value);
          for (std::size_t j : a.candidates) {
            eval::EvalReport rpt;
            rpt.feature_name = pending[j].spec.name();
            rpt.metric = metric;
            rpt.baseline = current.value;
            rpt.value = cv.value;
            rpt.gain = gain;
            rpt.effective = gain > 0.0;
            rpt.fold_hash = cv.fold_hash;
            pending[j].report = rpt;
          }
        } catch (const std::runtime_error& e) {
          pending[a.candidates.front()].error = e.what();
        }
      });
    }
    for (auto& a : agents_) {
      for (std::size_t j : a.candidates) {
        if (!pending[j].error.empty() && a.error.empty())
          a.error = fmt::format("evaluating {}: {}", pending[j].spec.name(), pending[j].error);
      }
    }

    // Memory writes, agent by agent in role order.
    std::vector<std::vector<memory::ProcRecord>> round_proc(agents_.size());
    std::vector<std::vector<memory::FeedRecord>> round_feed(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) {
      auto& a = agents_[i];
      if (!a.error.empty()) {
        rep.agent_errors[std::string(agents::to_string(a.role))] = a.error;
        continue;
      }
      round_proc[i] = a.batch.records;
      for (const auto& rec : a.batch.records) mem.append_proc(a.role, rec);
      for (std::size_t j : a.candidates) {
        const auto& rpt = *pending[j].report;
        memory::FeedRecord f{pending[j].spec.name(), std::string(eval::to_string(metric)), rpt.value, rpt.gain > 0.0, r, rpt.gain};
        mem.append_feed(a.role, f);
        round_feed[i].push_back(f);
        registry.insert(pending[j].spec.canonical_key);
        if (f.effective) ++rep.effective;
      }
    }
    for (const auto& p : pending) {
      json e = {{"role", agents::to_string(p.spec.role)},
                {"name", p.spec.name()},
                {"program", dsl::render(p.spec.typed.program.body)},
                {"canonical_key", p.spec.canonical_key}};
      if (p.report) {
        e["value"] = p.report->value;
        e["gain"] = p.report->gain;
        e["effective"] = p.report->effective;
        e["duplicate"] = p.report->duplicate;
      }
      if (!p.error.empty()) e["error"] = p.error;
      rep.evaluations.push_back(std::move(e));
    }

    if (config.memory_flags.con) {
      std::vector<std::optional<agents::SummaryResult>> summaries(agents_.size());
      parallel_for(agents_.size(), workers, [&](std::size_t i) {
        if (!agents_[i].error.empty()) return;
        summaries[i] = agents::summarize_agent(agents_[i].role, round_proc[i], round_feed[i], mem.concepts(agents_[i].role),
                                               backend, config.min_effective, r);
      });
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (!summaries[i]) continue;
        mem.set_concepts(agents_[i].role, summaries[i]->notes);
        if (!summaries[i]->error.empty())
          rep.agent_errors[fmt::format("summary.{}", agents::to_string(agents_[i].role))] = summaries[i]->error;
      }
    }
    if (config.memory_flags.global) {
      std::map<Role, agents::AgentDigest> digests;
      for (std::size_t i = 0; i < agents_.size(); ++i)
        if (agents_[i].error.empty()) digests[agents_[i].role] = {mem.concepts(agents_[i].role), round_feed[i]};
      const auto g = agents::summarize_global(digests, mem.global(), backend, r);
      mem.set_global(g.notes);
      if (!g.error.empty()) rep.agent_errors["summary"] = g.error;
    }

    // Selection over every surviving candidate.
    std::vector<Candidate> pool;
    std::map<std::string, std::size_t> by_name;
    std::map<Role, std::vector<Candidate>> per_agent;
    for (const auto& a : agents_) {
      if (!a.error.empty()) continue;
      for (std::size_t j : a.candidates) {
        by_name[pending[j].spec.name()] = j;
        pool.push_back({pending[j].spec, *pending[j].report});
        per_agent[a.role].push_back(pool.back());
      }
    }
    std::vector<Candidate> selected;
    if (config.per_agent_selection) {
      std::vector<Candidate> merged;
      for (auto& [role, cands] : per_agent)
        for (auto& c : select_top_n(std::move(cands), config.top_n, config.require_positive_gain)) merged.push_back(std::move(c));
      selected = select_top_n(std::move(merged), std::numeric_limits<int>::max(), config.require_positive_gain);
    } else {
      selected = select_top_n(std::move(pool), config.top_n, config.require_positive_gain);
    }

    // Joint admission: each selected feature must improve CV given the ones admitted before it.
    for (const auto& c : selected) {
      auto& p = pending[by_name.at(c.spec.name())];
      eval::Dataset trial = ds.with_column(c.spec.name(), p.column);
      eval::CvResult cv;
      try {
        cv = evaluator.train_eval(trial);
      } catch (const std::runtime_error& e) {
        rep.agent_errors["admission"] = fmt::format("{}: {}", c.spec.name(), e.what());
        rep.not_admitted.push_back(c.spec.name());
        continue;
      }
      if (config.require_positive_gain && !(gain_of(metric, current.value, cv.value) > 0.0)) {
        rep.not_admitted.push_back(c.spec.name());
        continue;
      }
      ds = std::move(trial);
      current = std::move(cv);
      train = train.with_column(c.spec.name(), data::ColumnKind::numeric, p.column);
      fitted.push_back(*p.fitted);
      rep.selected_features.push_back({c.spec.name(), dsl::render(c.spec.typed.program.body), c.spec.description,
                                       c.spec.role, r, c.report.gain, current.value});
    }
    rep.metric_after = current.value;
    metadata = update_metadata(metadata, train, rep.selected_features);
    for (const auto& f : rep.selected_features) result.features.push_back(f);
    rep.tokens = round_tokens(backend.ledger(), r);
    spdlog::info("round {}: {} candidates, {} effective, {} admitted, {} {:.4f} -> {:.4f}", r, rep.accepted, rep.effective,
                 rep.selected_features.size(), eval::to_string(metric), rep.metric_before, rep.metric_after);
    result.rounds.push_back(std::move(rep));
  }

  data::Table test = data.test->open();
  for (std::size_t k = 0; k < fitted.size(); ++k)
    test = test.with_column(result.features[k].name, data::ColumnKind::numeric, fitted[k].apply(test));
  result.test = evaluator.holdout(eval::to_dataset(train), eval::to_dataset(test));
  result.test_reads = data.test->reads();
  result.train_cv = current.value;
  result.final_columns = train.feature_names();
  for (std::size_t k = 0; k < fitted.size(); ++k)
    result.fitted.push_back({{"name", result.features[k].name}, {"fit", fitted[k].to_json()}});
  result.memory = mem.snapshot();
  result.ledger = backend.ledger().to_json();
  result.tokens = backend.ledger().total();
  return result;
}

}  // namespace malmas::orchestrator
