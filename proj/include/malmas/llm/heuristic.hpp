#pragma once

#include <cstdint>
#include <vector>

#include "malmas/agents/roles.hpp"
#include "malmas/data/table.hpp"
#include "malmas/llm/backend.hpp"

namespace malmas::llm {

/// Offline stand-in for an LLM. Proposals are drawn from per-role templates
/// over the schema it was built with, seeded by (seed, tag), so the reply is
/// a pure function of the request tag and the requested block count. Reports
/// zero tokens.
class HeuristicBackend final : public ChatBackend {
 public:
  HeuristicBackend(std::vector<data::ColumnSchema> schema, std::uint64_t seed, std::shared_ptr<TokenLedger> ledger);

  std::string kind() const override { return "heuristic"; }

  /// `count` fenced dsl blocks for `role`, or none when the schema has no
  /// columns the role can use.
  std::string proposals(agents::Role role, int count, std::uint64_t seed) const;

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  std::vector<data::ColumnSchema> schema_;
  std::uint64_t seed_;
  std::vector<std::string> numeric_, categorical_, datetime_;
};

/// The N in the last "exactly N" of `text`, or `fallback`.
int requested_count(std::string_view text, int fallback);

}  // namespace malmas::llm
