#include <algorithm>
#include <charconv>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "malmas/agents/agents.hpp"
#include "malmas/common/rng.hpp"

namespace malmas::agents {

RouterStrategy RouterStrategy::parse(std::string_view text) {
  if (text == "all") return {RouterKind::all, 0};
  if (text == "llm") return {RouterKind::llm, kRouterFallbackK};
  for (auto [prefix, kind] : {std::pair{std::string_view("fixed:"), RouterKind::fixed_k},
                              std::pair{std::string_view("random:"), RouterKind::random_k}}) {
    if (text.substr(0, prefix.size()) != prefix) continue;
    const auto digits = text.substr(prefix.size());
    int k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || k < 1 || k > static_cast<int>(kAllRoles.size()))
      throw std::invalid_argument(fmt::format("router k must be in 1..{}: \"{}\"", kAllRoles.size(), text));
    return {kind, k};
  }
  throw std::invalid_argument(fmt::format("unknown router strategy \"{}\" (llm, all, fixed:K, random:K)", text));
}

std::string RouterStrategy::str() const {
  switch (kind) {
    case RouterKind::all: return "all";
    case RouterKind::llm: return "llm";
    case RouterKind::fixed_k: return fmt::format("fixed:{}", k);
    case RouterKind::random_k: return fmt::format("random:{}", k);
  }
  return "all";
}

std::vector<Role> eligible_roles(const std::vector<data::ColumnSchema>& schema) {
  const bool has_datetime = std::any_of(schema.begin(), schema.end(),
                                        [](const auto& c) { return c.kind == data::ColumnKind::datetime; });
  std::vector<Role> out;
  for (Role r : kAllRoles)
    if (r != Role::temporal || has_datetime) out.push_back(r);
  return out;
}

namespace {

std::vector<Role> first_k(const std::vector<Role>& eligible, int k) {
  return {eligible.begin(), eligible.begin() + std::min<std::ptrdiff_t>(k, eligible.size())};
}

std::optional<std::vector<std::string>> parse_role_list(const std::string& text) {
  const auto open = text.find('['), close = text.rfind(']');
  if (open == std::string::npos || close == std::string::npos || close < open) return std::nullopt;
  const auto j = nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) return std::nullopt;
    out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

RouterDecision route(const std::string& metadata, const std::vector<data::ColumnSchema>& schema,
                     const std::vector<std::string>& global_concepts, const RouterStrategy& strategy,
                     std::uint64_t seed, llm::ChatBackend* backend, int round) {
  const auto eligible = eligible_roles(schema);
  RouterDecision d;
  d.strategy = strategy.kind;
  switch (strategy.kind) {
    case RouterKind::all:
      d.selected = eligible;
      d.rationale = "all eligible agents";
      return d;
    case RouterKind::fixed_k:
      d.selected = first_k(eligible, strategy.k);
      d.rationale = fmt::format("first {} eligible agents", d.selected.size());
      return d;
    case RouterKind::random_k: {
      std::vector<Role> pool = eligible;
      Rng rng(seed);
      rng.shuffle(std::span(pool));
      pool.resize(std::min<std::size_t>(pool.size(), strategy.k));
      std::sort(pool.begin(), pool.end());
      d.selected = pool;
      d.rationale = fmt::format("{} eligible agents drawn at random", pool.size());
      return d;
    }
    case RouterKind::llm: break;
  }
  if (!backend) throw std::invalid_argument("llm router needs a backend");

  std::string user = "Dataset:\n" + metadata;
  if (!user.empty() && user.back() != '\n') user += "\n";
  if (!global_concepts.empty()) {
    user += "\nShared guidance from the previous round:\n";
    for (const auto& g : global_concepts) user += fmt::format("- {}\n", g);
  }
  std::vector<std::string> names;
  for (Role r : eligible) names.emplace_back(to_string(r));
  user += fmt::format("\nEligible agents: {}\nSelect the agents for round {}.\n", fmt::join(names, ", "), round);

  llm::ChatRequest req;
  req.messages = {{"system", prompt_asset("router")}, {"user", user}};
  std::optional<std::vector<std::string>> ids;
  for (int seq = 0; seq < 2 && !ids; ++seq) {
    req.tag = fmt::format("{}:router:{}", round, seq);
    const auto reply = backend->complete(req);
    ids = parse_role_list(reply.content);
    if (!ids && seq == 0) {
      req.messages.push_back({"assistant", reply.content});
      req.messages.push_back({"user", "Reply with a JSON list of agent ids only, for example [\"unary\", \"cross\"]."});
    }
  }
  if (!ids) {
    d.selected = first_k(eligible, kRouterFallbackK);
    d.rationale = fmt::format("router reply unparseable after retry; fell back to fixed:{}", kRouterFallbackK);
    return d;
  }
  std::vector<std::string> dropped;
  for (const auto& id : *ids) {
    const auto role = parse_role(id);
    if (role && std::find(eligible.begin(), eligible.end(), *role) != eligible.end()) {
      if (std::find(d.selected.begin(), d.selected.end(), *role) == d.selected.end()) d.selected.push_back(*role);
    } else {
      dropped.push_back(id);
    }
  }
  std::sort(d.selected.begin(), d.selected.end());
  if (d.selected.empty()) {
    d.selected = first_k(eligible, kRouterFallbackK);
    d.rationale = fmt::format("router selected no eligible agent; fell back to fixed:{}", kRouterFallbackK);
    return d;
  }
  d.rationale = dropped.empty() ? "router selection"
                                : fmt::format("router selection; dropped ineligible {}", fmt::join(dropped, ", "));
  return d;
}

}  // namespace malmas::agents
