#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "malmas/agents/roles.hpp"
#include "malmas/data/table.hpp"
#include "malmas/dsl/canonical.hpp"
#include "malmas/dsl/typecheck.hpp"
#include "malmas/llm/backend.hpp"
#include "malmas/memory/memory.hpp"

namespace malmas::agents {

/// Text of assets/prompts/<name>.txt, embedded at build time.
const std::string& prompt_asset(const std::string& name);

struct EffectiveFeature {
  std::string name;
  std::string program;  // rendered DSL
  double value = 0.0;   // metric with this feature added
};

struct PromptContext {
  std::string metadata;
  std::string metric = "auc";
  std::vector<EffectiveFeature> effective_features;
  std::vector<std::string> concept_notes;
  std::vector<std::string> global_concepts;
  std::vector<std::string> attempted_keys;
};

/// Prompt list caps; the most recent entries are kept.
struct PromptBudget {
  std::size_t effective_features = 15;
  std::size_t attempted_keys = 40;
  std::size_t concept_notes = 5;
  std::size_t global_concepts = 8;
};

/// Grammar summary restricted to the role's ops.
std::string grammar_reference(Role role);

/// [system: role prompt + grammar + allowed ops, user: metadata + memory
/// sections (each only when non-empty) + instructions]. Pure.
llm::ChatRequest build_prompt(Role role, const PromptContext& ctx, int n_proposals, const std::string& tag,
                              const PromptBudget& budget = {});

/// An accepted proposal.
struct TransformationSpec {
  dsl::TypedProgram typed;
  Role role = Role::unary;
  std::string description;
  int round = 0;
  std::string canonical_key;

  const std::string& name() const { return typed.program.feature_name; }
  const std::vector<std::string>& base_columns() const { return typed.base_columns; }
};

struct ProposalBatch {
  std::vector<TransformationSpec> specs;
  std::vector<memory::ProcRecord> records;  // one per block seen, in order
  int calls = 0;
};

struct DslBlock {
  std::string description;  // first '#' comment line, trimmed
  std::string program;
};

/// Fenced ```dsl blocks of a reply, in order.
std::vector<DslBlock> extract_blocks(std::string_view text);

/// `base` if free, else base_2, base_3, ... Adds the result to `taken`.
std::string unique_name(const std::string& base, std::set<std::string>& taken);

/// Empty when the program obeys the role, else the violation message.
std::string role_violation(Role role, const dsl::Program& program);

inline constexpr int kMaxRepairs = 2;

/// One agent turn: prompt, parse every block, and issue up to kMaxRepairs
/// repair requests listing the exact errors of blocks that failed to parse,
/// typecheck, or obey the role. Duplicates (against `known_keys` or earlier
/// blocks) are recorded but not repaired. Tags are "<round>:<role>:<seq>".
ProposalBatch propose(Role role, const PromptContext& ctx, llm::ChatBackend& backend,
                      const std::vector<data::ColumnSchema>& schema, int n_proposals, int round,
                      const std::set<std::string>& known_keys, const PromptBudget& budget = {});

enum class RouterKind { all, fixed_k, random_k, llm };

struct RouterStrategy {
  RouterKind kind = RouterKind::llm;
  int k = 4;

  /// "all" | "llm" | "fixed:K" | "random:K"
  static RouterStrategy parse(std::string_view text);
  std::string str() const;
  bool operator==(const RouterStrategy&) const = default;
};

struct RouterDecision {
  std::vector<Role> selected;  // enum order
  std::string rationale;
  RouterKind strategy = RouterKind::all;
};

inline constexpr int kRouterFallbackK = 4;

/// Roles that can act on this schema: temporal only with a datetime column.
std::vector<Role> eligible_roles(const std::vector<data::ColumnSchema>& schema);

RouterDecision route(const std::string& metadata, const std::vector<data::ColumnSchema>& schema,
                     const std::vector<std::string>& global_concepts, const RouterStrategy& strategy,
                     std::uint64_t seed, llm::ChatBackend* backend, int round);

/// Bullet lines ("- ", "* ", "1. ") of a reply, stripped, at most `limit`.
std::vector<std::string> parse_bullets(std::string_view text, std::size_t limit);

struct SummaryResult {
  std::vector<memory::ConceptNote> notes;
  bool called = false;
  std::string error;  // non-empty when the backend failed and notes were kept
};

/// New concept notes from this round's records, or `previous` when fewer
/// than `min_effective` records are effective, the reply has no bullets, or
/// the backend fails.
SummaryResult summarize_agent(Role role, const std::vector<memory::ProcRecord>& proc,
                              const std::vector<memory::FeedRecord>& feed,
                              const std::vector<memory::ConceptNote>& previous, llm::ChatBackend& backend,
                              int min_effective, int round);

struct AgentDigest {
  std::vector<memory::ConceptNote> notes;
  std::vector<memory::FeedRecord> feed;
};

/// Global notes from every active agent's notes and effective features;
/// `previous` when no agent has notes or the backend fails.
SummaryResult summarize_global(const std::map<Role, AgentDigest>& per_agent,
                               const std::vector<memory::ConceptNote>& previous, llm::ChatBackend& backend,
                               int round);

}  // namespace malmas::agents
