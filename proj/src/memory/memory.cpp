#include "malmas/memory/memory.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace malmas::memory {

using agents::Role;
using nlohmann::json;

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::accepted: return "accepted";
    case Outcome::parse_error: return "parse_error";
    case Outcome::type_error: return "type_error";
    case Outcome::role_violation: return "role_violation";
    case Outcome::duplicate: return "duplicate";
  }
  return "accepted";
}

Outcome parse_outcome(std::string_view text) {
  for (Outcome o : {Outcome::accepted, Outcome::parse_error, Outcome::type_error, Outcome::role_violation,
                    Outcome::duplicate})
    if (to_string(o) == text) return o;
  throw MemoryError(fmt::format("unknown outcome \"{}\"", text));
}

MemoryState::MemoryState(MemoryFlags flags) : flags_(flags) {}

AgentMemory& MemoryState::at(Role role) { return agents_[static_cast<std::size_t>(role)]; }
const AgentMemory& MemoryState::at(Role role) const { return agents_[static_cast<std::size_t>(role)]; }

void MemoryState::begin_round(int round) {
  if (round < round_) throw MemoryError(fmt::format("round {} precedes current round {}", round, round_));
  round_ = round;
}

void MemoryState::append_proc(Role role, ProcRecord record) {
  if (record.round != round_)
    throw MemoryError(fmt::format("procedural record for round {} appended during round {}", record.round, round_));
  if (flags_.proc) at(role).proc.push_back(std::move(record));
}

void MemoryState::append_feed(Role role, FeedRecord record) {
  if (record.round != round_)
    throw MemoryError(fmt::format("feedback record for round {} appended during round {}", record.round, round_));
  if (record.effective != (record.gain > 0))
    throw MemoryError(fmt::format("feedback record {}: effective must equal gain > 0", record.feature_name));
  if (flags_.feed) at(role).feed.push_back(std::move(record));
}

void MemoryState::set_concepts(Role role, std::vector<ConceptNote> notes) {
  if (!flags_.con) return;
  if (notes.size() > kMaxAgentNotes) notes.resize(kMaxAgentNotes);
  at(role).concepts = std::move(notes);
}

void MemoryState::set_global(std::vector<ConceptNote> notes) {
  if (!flags_.global) return;
  if (notes.size() > kMaxGlobalNotes) notes.resize(kMaxGlobalNotes);
  global_ = std::move(notes);
}

std::vector<ProcRecord> MemoryState::proc(Role role) const { return flags_.proc ? at(role).proc : std::vector<ProcRecord>{}; }
std::vector<FeedRecord> MemoryState::feed(Role role) const { return flags_.feed ? at(role).feed : std::vector<FeedRecord>{}; }
std::vector<ConceptNote> MemoryState::concepts(Role role) const {
  return flags_.con ? at(role).concepts : std::vector<ConceptNote>{};
}
std::vector<ConceptNote> MemoryState::global() const { return flags_.global ? global_ : std::vector<ConceptNote>{}; }

bool MemoryState::is_duplicate(const std::string& key) const {
  if (!flags_.proc) return false;
  for (const auto& a : agents_)
    for (const auto& r : a.proc)
      if (r.outcome == Outcome::accepted && r.canonical_key == key) return true;
  return false;
}

namespace {

json to_json(const ProcRecord& r) {
  return {{"base_columns", r.base_columns}, {"transform_type", r.transform_type},
          {"feature_name", r.feature_name}, {"description", r.description},
          {"round", r.round},               {"canonical_key", r.canonical_key},
          {"outcome", to_string(r.outcome)}, {"detail", r.detail}};
}

json to_json(const FeedRecord& r) {
  return {{"feature_name", r.feature_name}, {"metric", r.metric}, {"value", r.value},
          {"effective", r.effective},       {"round", r.round},   {"gain", r.gain}};
}

json to_json(const ConceptNote& n) { return {{"text", n.text}, {"round", n.round}}; }

template <typename T>
json list(const std::vector<T>& items) {
  json out = json::array();
  for (const auto& i : items) out.push_back(to_json(i));
  return out;
}

ProcRecord proc_from(const json& j) {
  ProcRecord r;
  r.base_columns = j.at("base_columns").get<std::vector<std::string>>();
  r.transform_type = j.at("transform_type").get<std::string>();
  r.feature_name = j.at("feature_name").get<std::string>();
  r.description = j.at("description").get<std::string>();
  r.round = j.at("round").get<int>();
  r.canonical_key = j.at("canonical_key").get<std::string>();
  r.outcome = parse_outcome(j.at("outcome").get<std::string>());
  r.detail = j.value("detail", "");
  return r;
}

FeedRecord feed_from(const json& j) {
  FeedRecord r;
  r.feature_name = j.at("feature_name").get<std::string>();
  r.metric = j.at("metric").get<std::string>();
  r.value = j.at("value").get<double>();
  r.effective = j.at("effective").get<bool>();
  r.round = j.at("round").get<int>();
  r.gain = j.at("gain").get<double>();
  return r;
}

ConceptNote note_from(const json& j) { return {j.at("text").get<std::string>(), j.at("round").get<int>()}; }

}  // namespace

json MemoryState::snapshot() const {
  json agents = json::object();
  for (Role role : agents::kAllRoles) {
    const auto& a = at(role);
    agents[std::string(agents::to_string(role))] = {
        {"proc", list(a.proc)}, {"feed", list(a.feed)}, {"concepts", list(a.concepts)}};
  }
  return {{"schema_version", kSchemaVersion}, {"round", round_}, {"agents", agents}, {"global", list(global_)}};
}

MemoryState MemoryState::load(const json& snap, MemoryFlags flags) {
  if (!snap.is_object() || !snap.contains("schema_version")) throw MemoryError("snapshot has no schema_version");
  if (snap["schema_version"] != kSchemaVersion)
    throw MemoryError(fmt::format("snapshot schema_version {} is not supported (expected {})",
                                  snap["schema_version"].dump(), kSchemaVersion));
  MemoryState state(flags);
  try {
    state.round_ = snap.at("round").get<int>();
    for (const auto& [name, a] : snap.at("agents").items()) {
      const auto role = agents::parse_role(name);
      if (!role) throw MemoryError(fmt::format("snapshot names unknown agent \"{}\"", name));
      auto& m = state.at(*role);
      for (const auto& r : a.at("proc")) m.proc.push_back(proc_from(r));
      for (const auto& r : a.at("feed")) m.feed.push_back(feed_from(r));
      for (const auto& r : a.at("concepts")) m.concepts.push_back(note_from(r));
      for (std::size_t i = 0; i < m.feed.size(); ++i) {
        const auto& f = m.feed[i];
        if (f.effective != (f.gain > 0))
          throw MemoryError(fmt::format("snapshot feedback record {} of {}: effective must equal gain > 0", i, name));
        if (i > 0 && f.round < m.feed[i - 1].round)
          throw MemoryError(fmt::format("snapshot feedback records of {} go back in rounds", name));
      }
      for (std::size_t i = 1; i < m.proc.size(); ++i)
        if (m.proc[i].round < m.proc[i - 1].round)
          throw MemoryError(fmt::format("snapshot procedural records of {} go back in rounds", name));
    }
    for (const auto& n : snap.at("global")) state.global_.push_back(note_from(n));
  } catch (const json::exception& e) {
    throw MemoryError(fmt::format("corrupt snapshot: {}", e.what()));
  }
  return state;
}

std::string dump_canonical(const json& value) { return value.dump(2) + "\n"; }

void MemoryState::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MemoryError(fmt::format("cannot write {}", path.string()));
  out << dump_canonical(snapshot());
}

MemoryState MemoryState::load_file(const std::filesystem::path& path, MemoryFlags flags) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MemoryError(fmt::format("cannot open {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  json snap = json::parse(buf.str(), nullptr, false);
  if (snap.is_discarded()) throw MemoryError(fmt::format("corrupt snapshot: {} is not valid JSON", path.string()));
  return load(snap, flags);
}

}  // namespace malmas::memory
