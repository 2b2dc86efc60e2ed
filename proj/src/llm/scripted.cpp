#include "malmas/llm/scripted.hpp"

#include <fstream>

#include <fmt/format.h>

namespace malmas::llm {

namespace {

std::vector<std::string_view> segments(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ':') {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

// Wildcard count when `pattern` matches `tag`, else -1.
int match(std::string_view pattern, std::string_view tag) {
  const auto p = segments(pattern), t = segments(tag);
  if (p.size() != t.size()) return -1;
  int wild = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == "*") ++wild;
    else if (p[i] != t[i]) return -1;
  }
  return wild;
}

void validate(const nlohmann::json& v, const std::string& where) {
  if (v.is_string()) return;
  if (v.is_array()) {
    if (v.empty()) throw BackendError(BackendError::Kind::config, fmt::format("script entry {} is an empty list", where));
    for (const auto& e : v) validate(e, where);
    return;
  }
  if (v.is_object()) {
    if (v.contains("if_prompt_contains")) {
      if (!v["if_prompt_contains"].is_string() || !v.contains("then") || !v.contains("else"))
        throw BackendError(BackendError::Kind::config, fmt::format("script entry {}: bad conditional", where));
      validate(v["then"], where);
      validate(v["else"], where);
      return;
    }
    if (v.contains("content") && v["content"].is_string()) return;
    if (v.contains("error") && v["error"].is_string()) {
      try {
        parse_backend_error_kind(v.value("kind", "config"));
      } catch (const std::invalid_argument& e) {
        throw BackendError(BackendError::Kind::config, fmt::format("script entry {}: {}", where, e.what()));
      }
      return;
    }
  }
  throw BackendError(BackendError::Kind::config, fmt::format("script entry {} has an unsupported shape", where));
}

}  // namespace

ScriptedBackend::ScriptedBackend(nlohmann::json script, std::shared_ptr<TokenLedger> ledger)
    : ChatBackend(std::move(ledger)), script_(std::move(script)) {
  if (!script_.is_object()) throw BackendError(BackendError::Kind::config, "script must be a JSON object");
  for (const auto& [key, value] : script_.items()) validate(value, key);
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path,
                                                            std::shared_ptr<TokenLedger> ledger) {
  std::ifstream in(path);
  if (!in) throw BackendError(BackendError::Kind::config, fmt::format("cannot open script {}", path.string()));
  nlohmann::json script = nlohmann::json::parse(in, nullptr, false);
  if (script.is_discarded()) throw BackendError(BackendError::Kind::config, fmt::format("script {} is not valid JSON", path.string()));
  return std::make_unique<ScriptedBackend>(std::move(script), std::move(ledger));
}

const nlohmann::json* ScriptedBackend::lookup(const std::string& tag) const {
  if (auto it = script_.find(tag); it != script_.end()) return &*it;
  const nlohmann::json* best = nullptr;
  int best_wild = 0;
  std::string best_key;
  for (const auto& [key, value] : script_.items()) {
    const int w = match(key, tag);
    if (w < 0) continue;
    if (!best || w < best_wild || (w == best_wild && key < best_key)) {
      best = &value;
      best_wild = w;
      best_key = key;
    }
  }
  return best;
}

ChatResponse ScriptedBackend::do_complete(const ChatRequest& request) {
  const nlohmann::json* entry = lookup(request.tag);
  if (!entry) throw BackendError(BackendError::Kind::missing_key, fmt::format("script has no entry for tag \"{}\"", request.tag));
  const std::string prompt = request.joined();
  std::size_t call = 0;
  {
    std::lock_guard lock(mutex_);
    call = calls_[request.tag]++;
  }
  const nlohmann::json* v = entry;
  for (;;) {
    if (v->is_array()) {
      if (call >= v->size())
        throw BackendError(BackendError::Kind::script_exhausted,
                           fmt::format("script entry for tag \"{}\" has only {} responses", request.tag, v->size()));
      v = &(*v)[call];
    } else if (v->is_object() && v->contains("if_prompt_contains")) {
      v = prompt.find((*v)["if_prompt_contains"].get<std::string>()) != std::string::npos ? &(*v)["then"] : &(*v)["else"];
    } else {
      break;
    }
  }
  if (v->is_object() && v->contains("error"))
    throw BackendError(parse_backend_error_kind(v->value("kind", "config")), (*v)["error"].get<std::string>());
  ChatResponse r;
  r.content = v->is_string() ? v->get<std::string>() : (*v)["content"].get<std::string>();
  r.prompt_tokens = estimate_tokens(prompt.size());
  r.completion_tokens = estimate_tokens(r.content.size());
  if (v->is_object()) {
    r.prompt_tokens = v->value("prompt_tokens", r.prompt_tokens);
    r.completion_tokens = v->value("completion_tokens", r.completion_tokens);
  }
  return r;
}

}  // namespace malmas::llm
