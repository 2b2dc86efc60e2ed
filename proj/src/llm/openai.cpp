#include "malmas/llm/openai.hpp"

#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace malmas::llm {

OpenAiBackend::OpenAiBackend(OpenAiConfig config, std::shared_ptr<TokenLedger> ledger, Sleep sleep)
    : ChatBackend(std::move(ledger)), config_(std::move(config)), sleep_(std::move(sleep)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (config_.api_key.empty())
    if (const char* key = std::getenv("MALMAS_API_KEY")) config_.api_key = key;
  const auto scheme_end = config_.endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw BackendError(BackendError::Kind::config, fmt::format("endpoint \"{}\" has no scheme", config_.endpoint));
  const auto path_start = config_.endpoint.find('/', scheme_end + 3);
  origin_ = config_.endpoint.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);
  if (config_.attempts < 1) config_.attempts = 1;
}

nlohmann::json OpenAiBackend::body(const ChatRequest& request) const {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", config_.model},
          {"messages", messages},
          {"temperature", request.temperature},
          {"max_tokens", request.max_tokens}};
}

ChatResponse parse_chat_reply(const std::string& body, const ChatRequest& request) {
  const auto reply = nlohmann::json::parse(body, nullptr, false);
  if (reply.is_discarded()) throw BackendError(BackendError::Kind::malformed_reply, "endpoint reply is not JSON");
  const auto* content = reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty() &&
                                reply["choices"][0].contains("message")
                            ? &reply["choices"][0]["message"]
                            : nullptr;
  if (!content || !content->contains("content") || !(*content)["content"].is_string())
    throw BackendError(BackendError::Kind::malformed_reply, "endpoint reply has no choices[0].message.content");
  ChatResponse r;
  r.content = (*content)["content"].get<std::string>();
  r.prompt_tokens = estimate_tokens(request.joined().size());
  r.completion_tokens = estimate_tokens(r.content.size());
  if (auto usage = reply.find("usage"); usage != reply.end() && usage->is_object()) {
    r.prompt_tokens = usage->value("prompt_tokens", r.prompt_tokens);
    r.completion_tokens = usage->value("completion_tokens", r.completion_tokens);
  }
  return r;
}

ChatResponse OpenAiBackend::do_complete(const ChatRequest& request) {
  httplib::Client client(origin_);
  const auto secs = static_cast<time_t>(config_.timeout.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  const std::string payload = body(request).dump();

  std::string last_error;
  auto backoff = config_.first_backoff;
  for (int attempt = 1; attempt <= config_.attempts; ++attempt) {
    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = fmt::format("transport error: {}", httplib::to_string(res.error()));
    } else if (res->status >= 500) {
      last_error = fmt::format("HTTP {}", res->status);
    } else if (res->status >= 400) {
      throw BackendError(BackendError::Kind::http_status,
                         fmt::format("HTTP {} from {}: {}", res->status, config_.endpoint, res->body.substr(0, 300)));
    } else {
      return parse_chat_reply(res->body, request);
    }
    spdlog::warn("chat request {} attempt {}/{} failed: {}", request.tag, attempt, config_.attempts, last_error);
    if (attempt < config_.attempts) {
      sleep_(backoff);
      backoff *= 2;
    }
  }
  throw BackendError(BackendError::Kind::retries_exhausted,
                     fmt::format("{} attempts to {} failed; last: {}", config_.attempts, config_.endpoint, last_error));
}

}  // namespace malmas::llm
