#include "malmas/llm/ledger.hpp"

#include <algorithm>
#include <tuple>

#include "malmas/llm/backend.hpp"

namespace malmas::llm {

namespace {

// Numeric-aware ordering so round 10 sorts after round 9.
bool tag_less(const std::string& a, const std::string& b) {
  const auto ta = Tag::parse(a), tb = Tag::parse(b);
  if (ta && tb) return std::tie(ta->round, ta->agent, ta->seq, a) < std::tie(tb->round, tb->agent, tb->seq, b);
  if (ta || tb) return static_cast<bool>(ta);
  return a < b;
}

bool round_less(const std::string& a, const std::string& b) {
  const auto ia = std::stol(a), ib = std::stol(b);
  return ia != ib ? ia < ib : a < b;
}

template <typename KeyFn, typename Less>
LedgerReport group(const std::map<std::string, Usage>& by_tag, KeyFn key_of, Less less) {
  std::map<std::string, Usage> groups;
  for (const auto& [tag, usage] : by_tag) groups[key_of(tag)] += usage;
  LedgerReport out;
  for (const auto& [key, usage] : groups) {
    out.rows.push_back({key, usage});
    out.total += usage;
  }
  std::sort(out.rows.begin(), out.rows.end(), [&](const auto& x, const auto& y) { return less(x.key, y.key); });
  return out;
}

std::string round_of(const std::string& tag) {
  const auto t = Tag::parse(tag);
  return t ? std::to_string(t->round) : std::string("0");
}

}  // namespace

void TokenLedger::record(const std::string& tag, long prompt_tokens, long completion_tokens) {
  std::lock_guard lock(mutex_);
  by_tag_[tag] += Usage{std::max(prompt_tokens, 0L), std::max(completion_tokens, 0L), 1};
}

Usage TokenLedger::total() const {
  std::lock_guard lock(mutex_);
  Usage t;
  for (const auto& [tag, u] : by_tag_) t += u;
  return t;
}

LedgerReport TokenLedger::report() const {
  std::lock_guard lock(mutex_);
  return group(by_tag_, [](const std::string& t) { return t; }, tag_less);
}

LedgerReport TokenLedger::by_round() const {
  std::lock_guard lock(mutex_);
  return group(by_tag_, round_of, round_less);
}

LedgerReport TokenLedger::by_round_and_agent() const {
  std::lock_guard lock(mutex_);
  return group(
      by_tag_,
      [](const std::string& tag) {
        const auto t = Tag::parse(tag);
        return t ? std::to_string(t->round) + ":" + t->agent : tag;
      },
      [](const std::string& a, const std::string& b) { return tag_less(a + ":0", b + ":0"); });
}

nlohmann::json TokenLedger::to_json() const {
  const LedgerReport r = report();
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"tag", row.key},
                    {"prompt_tokens", row.usage.prompt},
                    {"completion_tokens", row.usage.completion},
                    {"calls", row.usage.calls}});
  return {{"rows", rows},
          {"total", {{"prompt_tokens", r.total.prompt}, {"completion_tokens", r.total.completion}, {"calls", r.total.calls}}}};
}

}  // namespace malmas::llm
