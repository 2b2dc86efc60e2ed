#pragma once

#include <filesystem>
#include <map>
#include <mutex>

#include <nlohmann/json.hpp>

#include "malmas/llm/backend.hpp"

namespace malmas::llm {

/// Replays canned responses keyed by tag. The script is a JSON object whose
/// keys are tags; a key segment of "*" matches any segment (exact keys win,
/// then the key with the fewest wildcards, then the first in byte order).
/// A value is one of
///   "text"                                   the response
///   ["first", "second", ...]                 successive calls with this tag
///   {"content": "...", "prompt_tokens": n, "completion_tokens": m}
///   {"if_prompt_contains": "s", "then": V, "else": V}
///   {"error": "message", "kind": "http_status"}  throws BackendError
/// where V is again a value. Token counts default to ceil(chars / 4).
class ScriptedBackend final : public ChatBackend {
 public:
  ScriptedBackend(nlohmann::json script, std::shared_ptr<TokenLedger> ledger);
  static std::unique_ptr<ScriptedBackend> from_file(const std::filesystem::path& path,
                                                    std::shared_ptr<TokenLedger> ledger);

  std::string kind() const override { return "scripted"; }
  const nlohmann::json& script() const { return script_; }

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  const nlohmann::json* lookup(const std::string& tag) const;

  nlohmann::json script_;
  std::mutex mutex_;
  std::map<std::string, std::size_t> calls_;  // per-tag sequence counters
};

}  // namespace malmas::llm
