#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malmas/agents/roles.hpp"

namespace malmas::memory {

class MemoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Outcome { accepted, parse_error, type_error, role_violation, duplicate };

std::string_view to_string(Outcome outcome);
Outcome parse_outcome(std::string_view text);

/// One attempted transformation, successful or not.
struct ProcRecord {
  std::vector<std::string> base_columns;
  std::string transform_type;  // role id
  std::string feature_name;
  std::string description;
  int round = 0;
  std::string canonical_key;
  Outcome outcome = Outcome::accepted;
  std::string detail;  // rendered program when accepted, error text otherwise

  bool operator==(const ProcRecord&) const = default;
};

struct FeedRecord {
  std::string feature_name;
  std::string metric;
  double value = 0.0;
  bool effective = false;
  int round = 0;
  double gain = 0.0;

  bool operator==(const FeedRecord&) const = default;
};

struct ConceptNote {
  std::string text;
  int round = 0;

  bool operator==(const ConceptNote&) const = default;
};

struct AgentMemory {
  std::vector<ProcRecord> proc;
  std::vector<FeedRecord> feed;
  std::vector<ConceptNote> concepts;

  bool operator==(const AgentMemory&) const = default;
};

/// Which memory components are live. A disabled component reads as empty
/// and ignores writes.
struct MemoryFlags {
  bool proc = true;
  bool feed = true;
  bool con = true;
  bool global = true;

  bool operator==(const MemoryFlags&) const = default;
};

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kMaxAgentNotes = 5;
inline constexpr std::size_t kMaxGlobalNotes = 8;

/// Per-agent procedural/feedback/conceptual stores plus the global store.
/// During a round each agent writes only its own stores, so agents may run
/// concurrently; the global store and round counter change only at barriers.
class MemoryState {
 public:
  explicit MemoryState(MemoryFlags flags = {});

  int round() const { return round_; }
  void begin_round(int round);
  const MemoryFlags& flags() const { return flags_; }

  /// Throws MemoryError when record.round is not the current round.
  void append_proc(agents::Role role, ProcRecord record);
  /// Throws MemoryError on a round mismatch or effective != (gain > 0).
  void append_feed(agents::Role role, FeedRecord record);
  /// Replaces the agent's notes, keeping at most kMaxAgentNotes.
  void set_concepts(agents::Role role, std::vector<ConceptNote> notes);
  void set_global(std::vector<ConceptNote> notes);

  std::vector<ProcRecord> proc(agents::Role role) const;
  std::vector<FeedRecord> feed(agents::Role role) const;
  std::vector<ConceptNote> concepts(agents::Role role) const;
  std::vector<ConceptNote> global() const;

  /// True iff some accepted procedural record, of any agent, has this key.
  bool is_duplicate(const std::string& key) const;

  /// Canonical snapshot: keys sorted, every role present.
  nlohmann::json snapshot() const;
  static MemoryState load(const nlohmann::json& snapshot, MemoryFlags flags = {});
  void save(const std::filesystem::path& path) const;
  static MemoryState load_file(const std::filesystem::path& path, MemoryFlags flags = {});

  bool operator==(const MemoryState&) const = default;

 private:
  AgentMemory& at(agents::Role role);
  const AgentMemory& at(agents::Role role) const;

  MemoryFlags flags_;
  int round_ = 0;
  std::array<AgentMemory, agents::kAllRoles.size()> agents_;
  std::vector<ConceptNote> global_;
};

/// Canonical text of a snapshot (2-space indent, sorted keys, newline).
std::string dump_canonical(const nlohmann::json& value);

}  // namespace malmas::memory
