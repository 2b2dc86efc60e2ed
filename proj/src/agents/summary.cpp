#include <cctype>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "malmas/agents/agents.hpp"

namespace malmas::agents {

std::vector<std::string> parse_bullets(std::string_view text, std::size_t limit) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size() && out.size() < limit) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    std::size_t skip = 0;
    if (line.size() >= 2 && (line[0] == '-' || line[0] == '*') && line[1] == ' ') {
      skip = 2;
    } else if (line.rfind("\xE2\x80\xA2 ", 0) == 0) {
      skip = 4;
    } else {
      std::size_t d = 0;
      while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
      if (d > 0 && d + 1 < line.size() && (line[d] == '.' || line[d] == ')') && line[d + 1] == ' ') skip = d + 2;
    }
    if (skip == 0) continue;
    line.remove_prefix(skip);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (!line.empty()) out.emplace_back(line);
  }
  return out;
}

SummaryResult summarize_agent(Role role, const std::vector<memory::ProcRecord>& proc,
                              const std::vector<memory::FeedRecord>& feed,
                              const std::vector<memory::ConceptNote>& previous, llm::ChatBackend& backend,
                              int min_effective, int round) {
  SummaryResult result{previous, false, {}};
  int effective = 0;
  for (const auto& f : feed) effective += f.effective;
  if ((proc.empty() && feed.empty()) || effective < min_effective) return result;

  std::string user = fmt::format("Agent: {}\nRound: {}\n\nAttempted transformations:\n", to_string(role), round);
  for (const auto& p : proc)
    user += fmt::format("- {} [{}]: {}\n", p.feature_name.empty() ? "?" : p.feature_name, memory::to_string(p.outcome),
                        p.detail);
  if (!feed.empty()) {
    user += "\nScores:\n";
    for (const auto& f : feed)
      user += fmt::format("- {}: {}={:.4f}, gain={:+.4f}, {}\n", f.feature_name, f.metric, f.value, f.gain,
                          f.effective ? "effective" : "not effective");
  }
  llm::ChatRequest req;
  req.messages = {{"system", prompt_asset("summary_agent")}, {"user", user}};
  req.tag = fmt::format("{}:summary.{}:0", round, to_string(role));
  try {
    const auto reply = backend.complete(req);
    result.called = true;
    const auto bullets = parse_bullets(reply.content, memory::kMaxAgentNotes);
    if (bullets.empty()) return result;
    result.notes.clear();
    for (const auto& b : bullets) result.notes.push_back({b, round});
  } catch (const std::exception& e) {
    spdlog::warn("summary for {} in round {} failed: {}", to_string(role), round, e.what());
    result.error = e.what();
  }
  return result;
}

SummaryResult summarize_global(const std::map<Role, AgentDigest>& per_agent,
                               const std::vector<memory::ConceptNote>& previous, llm::ChatBackend& backend,
                               int round) {
  SummaryResult result{previous, false, {}};
  bool any_notes = false;
  for (const auto& [role, digest] : per_agent) any_notes |= !digest.notes.empty();
  if (!any_notes) return result;

  std::string user = fmt::format("Round: {}\n", round);
  for (const auto& [role, digest] : per_agent) {
    if (digest.notes.empty()) continue;
    user += fmt::format("\nAgent {} notes:\n", to_string(role));
    for (const auto& n : digest.notes) user += fmt::format("- {}\n", n.text);
    bool header = false;
    for (const auto& f : digest.feed) {
      if (!f.effective) continue;
      if (!header) user += fmt::format("Agent {} effective features:\n", to_string(role));
      header = true;
      user += fmt::format("- {}: {}={:.4f}, gain={:+.4f}\n", f.feature_name, f.metric, f.value, f.gain);
    }
  }
  llm::ChatRequest req;
  req.messages = {{"system", prompt_asset("summary_global")}, {"user", user}};
  req.tag = fmt::format("{}:summary:0", round);
  try {
    const auto reply = backend.complete(req);
    result.called = true;
    const auto bullets = parse_bullets(reply.content, memory::kMaxGlobalNotes);
    if (bullets.empty()) return result;
    result.notes.clear();
    for (const auto& b : bullets) result.notes.push_back({b, round});
  } catch (const std::exception& e) {
    spdlog::warn("global summary in round {} failed: {}", round, e.what());
    result.error = e.what();
  }
  return result;
}

}  // namespace malmas::agents
