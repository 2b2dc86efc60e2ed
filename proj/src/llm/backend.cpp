#include "malmas/llm/backend.hpp"

#include <charconv>

namespace malmas::llm {

std::string ChatRequest::joined() const {
  std::string out;
  for (const auto& m : messages) {
    if (!out.empty()) out += "\n";
    out += m.content;
  }
  return out;
}

long estimate_tokens(std::size_t chars) { return static_cast<long>((chars + 3) / 4); }

ChatResponse ChatBackend::complete(const ChatRequest& request) {
  ChatResponse response = do_complete(request);
  ledger_->record(request.tag, response.prompt_tokens, response.completion_tokens);
  return response;
}

namespace {

std::optional<int> to_int(std::string_view s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) return std::nullopt;
  return v;
}

}  // namespace

std::optional<Tag> Tag::parse(std::string_view text) {
  const auto first = text.find(':');
  const auto last = text.rfind(':');
  if (first == std::string_view::npos || first == last) return std::nullopt;
  const auto round = to_int(text.substr(0, first));
  const auto seq = to_int(text.substr(last + 1));
  const std::string_view agent = text.substr(first + 1, last - first - 1);
  if (!round || !seq || agent.empty()) return std::nullopt;
  return Tag{*round, std::string(agent), *seq};
}

std::string Tag::str() const { return std::to_string(round) + ":" + agent + ":" + std::to_string(seq); }

namespace {

constexpr std::pair<BackendError::Kind, std::string_view> kKindNames[] = {
    {BackendError::Kind::retries_exhausted, "retries_exhausted"},
    {BackendError::Kind::http_status, "http_status"},
    {BackendError::Kind::malformed_reply, "malformed_reply"},
    {BackendError::Kind::missing_key, "missing_key"},
    {BackendError::Kind::script_exhausted, "script_exhausted"},
    {BackendError::Kind::config, "config"},
};

}  // namespace

std::string_view to_string(BackendError::Kind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

BackendError::Kind parse_backend_error_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames)
    if (name == text) return k;
  throw std::invalid_argument("unknown backend error kind: " + std::string(text));
}

}  // namespace malmas::llm
