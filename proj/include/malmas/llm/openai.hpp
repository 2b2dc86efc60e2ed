#pragma once

#include <chrono>
#include <functional>

#include "malmas/llm/backend.hpp"

namespace malmas::llm {

struct OpenAiConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string api_key;  // from MALMAS_API_KEY when empty
  std::chrono::seconds timeout{120};
  int attempts = 3;
  std::chrono::milliseconds first_backoff{1000};  // doubles after each failure
};

/// OpenAI-compatible chat-completions client. Transport errors and 5xx
/// replies are retried; 4xx replies and unparseable bodies are not.
class OpenAiBackend final : public ChatBackend {
 public:
  using Sleep = std::function<void(std::chrono::milliseconds)>;

  OpenAiBackend(OpenAiConfig config, std::shared_ptr<TokenLedger> ledger, Sleep sleep = {});

  std::string kind() const override { return "openai"; }
  const OpenAiConfig& config() const { return config_; }

  /// The JSON body sent for `request`.
  nlohmann::json body(const ChatRequest& request) const;

 protected:
  ChatResponse do_complete(const ChatRequest& request) override;

 private:
  OpenAiConfig config_;
  Sleep sleep_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

/// Reads the reply of a chat-completions call. Throws BackendError
/// (malformed_reply) when there is no choices[0].message.content.
ChatResponse parse_chat_reply(const std::string& body, const ChatRequest& request);

}  // namespace malmas::llm
