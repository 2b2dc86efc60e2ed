#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "malmas/llm/ledger.hpp"

namespace malmas::llm {

struct Message {
  std::string role;  // system | user | assistant
  std::string content;
  bool operator==(const Message&) const = default;
};

struct ChatRequest {
  std::vector<Message> messages;
  double temperature = 1.0;
  int max_tokens = 2048;
  std::string tag;  // round:agent:seq

  /// Concatenated message contents, for prompt matching and size estimates.
  std::string joined() const;
};

struct ChatResponse {
  std::string content;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

class BackendError : public std::runtime_error {
 public:
  enum class Kind { retries_exhausted, http_status, malformed_reply, missing_key, script_exhausted, config };
  BackendError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::string_view to_string(BackendError::Kind kind);
/// Throws std::invalid_argument for an unknown name.
BackendError::Kind parse_backend_error_kind(std::string_view text);

/// Chat completion with token accounting. complete() is safe to call from
/// several agents at once.
class ChatBackend {
 public:
  explicit ChatBackend(std::shared_ptr<TokenLedger> ledger) : ledger_(std::move(ledger)) {}
  virtual ~ChatBackend() = default;

  /// Fills the ledger under request.tag, then returns the response.
  ChatResponse complete(const ChatRequest& request);

  virtual std::string kind() const = 0;
  TokenLedger& ledger() { return *ledger_; }
  std::shared_ptr<TokenLedger> ledger_ptr() const { return ledger_; }

 protected:
  virtual ChatResponse do_complete(const ChatRequest& request) = 0;

 private:
  std::shared_ptr<TokenLedger> ledger_;
};

/// ceil(chars / 4): the size estimate used when a backend reports no usage.
long estimate_tokens(std::size_t chars);

/// Parsed `round:agent:seq` tag.
struct Tag {
  int round = 0;
  std::string agent;
  int seq = 0;

  static std::optional<Tag> parse(std::string_view text);
  std::string str() const;
};

}  // namespace malmas::llm
