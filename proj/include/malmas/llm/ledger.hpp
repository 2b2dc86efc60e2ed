#pragma once

#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace malmas::llm {

struct Usage {
  long prompt = 0;
  long completion = 0;
  long calls = 0;

  Usage& operator+=(const Usage& o) {
    prompt += o.prompt;
    completion += o.completion;
    calls += o.calls;
    return *this;
  }
  bool operator==(const Usage&) const = default;
};

struct LedgerRow {
  std::string key;
  Usage usage;
};

struct LedgerReport {
  std::vector<LedgerRow> rows;  // sorted by tag
  Usage total;
};

/// Per-tag token counts. Thread-safe.
class TokenLedger {
 public:
  void record(const std::string& tag, long prompt_tokens, long completion_tokens);

  Usage total() const;
  /// Rows ordered by (round, agent, seq) for well-formed tags, then by text.
  LedgerReport report() const;
  /// Tags grouped by their round prefix.
  LedgerReport by_round() const;
  /// Grouped by "round:agent".
  LedgerReport by_round_and_agent() const;

  nlohmann::json to_json() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, Usage> by_tag_;
};

}  // namespace malmas::llm
