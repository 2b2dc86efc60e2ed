#include <fmt/format.h>

#include "malmas/agents/agents.hpp"

namespace malmas::agents {

namespace {

struct OpHelp {
  const char* op;
  const char* text;
};

constexpr OpHelp kOpHelp[] = {
    {"neg", "neg(e) or -e: negation"},
    {"abs", "abs(e): absolute value"},
    {"sq", "sq(e): square"},
    {"sqrt_s", "sqrt_s(e): sqrt(max(e, 0))"},
    {"log_s", "log_s(e): ln(1 + max(e, 0))"},
    {"recip_s", "recip_s(e): 1 / e, or 0 when |e| <= 1e-12"},
    {"zscore", "zscore(e): (e - mean) / std, all zeros for a constant input"},
    {"add", "e + e or add(e, e)"},
    {"sub", "e - e or sub(e, e)"},
    {"mul", "e * e or mul(e, e)"},
    {"div_s", "e / e or div_s(e, e): 0 when |divisor| <= 1e-12"},
    {"if_then_else", "if e CMP e then e else e, CMP one of < <= > >= =="},
    {"group_agg", "group_agg(AGG, key=col(\"k\"), value=e): AGG one of mean std min max count, key categorical"},
    {"bin", "bin(e, n): equal-width bin index of e, n in 2..32"},
    {"clip", "clip(e, lo, hi): e limited to [lo, hi], lo and hi numbers"},
    {"cluster", "cluster(k, [col(\"a\"), col(\"b\"), ...]): k-means cluster id, k in 2..16, numeric columns"},
    {"date_part", "date_part(PART, col(\"t\")): PART one of year month day dow hour, t datetime"},
    {"elapsed_days", "elapsed_days(col(\"to\"), col(\"from\")): days from `from` to `to`, both datetime"},
};

template <typename T>
std::vector<T> tail(const std::vector<T>& items, std::size_t n) {
  if (items.size() <= n) return items;
  return {items.end() - static_cast<std::ptrdiff_t>(n), items.end()};
}

}  // namespace

std::string grammar_reference(Role role) {
  const auto& allowed = allowed_ops(role);
  std::string out =
      "Write each feature as one statement: FEATURE <name> = <expression>\n"
      "<name> is an identifier. Refer to a column as col(\"name\") or by its bare name when that is an identifier.\n"
      "Numbers are decimal literals. Expressions nest at most 12 deep and have at most 64 nodes.\n"
      "Allowed operations:\n";
  for (const auto& h : kOpHelp)
    if (allowed.count(h.op)) out += fmt::format("- {}\n", h.text);
  out += fmt::format("Use only these operations ({}); every feature must use at least one of them.\n",
                     fmt::join(allowed, ", "));
  return out;
}

llm::ChatRequest build_prompt(Role role, const PromptContext& ctx, int n_proposals, const std::string& tag,
                              const PromptBudget& budget) {
  std::string system = prompt_asset(std::string(to_string(role)));
  system += "\n" + grammar_reference(role);

  std::string user = "Dataset:\n" + ctx.metadata;
  if (!user.empty() && user.back() != '\n') user += "\n";
  if (const auto feats = tail(ctx.effective_features, budget.effective_features); !feats.empty()) {
    user += fmt::format("\nEffective features so far ({} with the feature added):\n", ctx.metric);
    for (const auto& f : feats) user += fmt::format("- {} = {} ({}={:.4f})\n", f.name, f.program, ctx.metric, f.value);
  }
  if (const auto notes = tail(ctx.concept_notes, budget.concept_notes); !notes.empty()) {
    user += "\nYour notes from earlier rounds:\n";
    for (const auto& n : notes) user += fmt::format("- {}\n", n);
  }
  if (const auto notes = tail(ctx.global_concepts, budget.global_concepts); !notes.empty()) {
    user += "\nShared guidance from all agents:\n";
    for (const auto& n : notes) user += fmt::format("- {}\n", n);
  }
  if (const auto keys = tail(ctx.attempted_keys, budget.attempted_keys); !keys.empty()) {
    user += "\nAlready attempted (canonical form), do not repeat:\n";
    for (const auto& k : keys) user += fmt::format("- {}\n", k);
  }
  user += fmt::format(
      "\nPropose exactly {} new features. Emit each one as a fenced ```dsl block holding a comment line "
      "\"# <one-line description>\" followed by a single FEATURE statement.\n",
      n_proposals);

  llm::ChatRequest req;
  req.messages = {{"system", system}, {"user", user}};
  req.tag = tag;
  return req;
}

}  // namespace malmas::agents
