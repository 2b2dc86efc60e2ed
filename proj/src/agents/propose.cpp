#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "malmas/agents/agents.hpp"
#include "malmas/dsl/parser.hpp"
#include "malmas/dsl/render.hpp"

namespace malmas::agents {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// FEATURE name of unparseable text, if it has one.
std::string guess_name(std::string_view text) {
  text = trim(text);
  if (text.size() < 8) return {};
  std::string head(text.substr(0, 7));
  std::transform(head.begin(), head.end(), head.begin(), [](unsigned char c) { return std::toupper(c); });
  if (head != "FEATURE") return {};
  text = trim(text.substr(7));
  std::size_t n = 0;
  while (n < text.size() && (std::isalnum(static_cast<unsigned char>(text[n])) || text[n] == '_')) ++n;
  return std::string(text.substr(0, n));
}

struct Failure {
  std::size_t block;
  std::string name;
  std::string message;
};

}  // namespace

std::vector<DslBlock> extract_blocks(std::string_view text) {
  std::vector<DslBlock> out;
  std::size_t pos = 0;
  while ((pos = text.find("```", pos)) != std::string_view::npos) {
    std::size_t line_end = text.find('\n', pos);
    if (line_end == std::string_view::npos) break;
    std::string lang(trim(text.substr(pos + 3, line_end - pos - 3)));
    std::transform(lang.begin(), lang.end(), lang.begin(), [](unsigned char c) { return std::tolower(c); });
    const std::size_t close = text.find("```", line_end);
    const std::string_view inner = text.substr(line_end + 1, (close == std::string_view::npos ? text.size() : close) - line_end - 1);
    if (close == std::string_view::npos) pos = text.size();
    else pos = close + 3;
    if (lang != "dsl") continue;
    DslBlock block;
    std::string program;
    std::size_t start = 0;
    while (start <= inner.size()) {
      std::size_t nl = inner.find('\n', start);
      if (nl == std::string_view::npos) nl = inner.size();
      const std::string_view line = trim(inner.substr(start, nl - start));
      if (!line.empty() && line.front() == '#') {
        if (block.description.empty()) block.description = std::string(trim(line.substr(1)));
      } else if (!line.empty()) {
        if (!program.empty()) program += "\n";
        program += line;
      }
      start = nl + 1;
    }
    block.program = std::move(program);
    out.push_back(std::move(block));
  }
  return out;
}

std::string unique_name(const std::string& base, std::set<std::string>& taken) {
  std::string name = base;
  for (int i = 2; taken.count(name); ++i) name = fmt::format("{}_{}", base, i);
  taken.insert(name);
  return name;
}

std::string role_violation(Role role, const dsl::Program& program) {
  const auto ops = dsl::ops_used(program.body);
  const auto& allowed = allowed_ops(role);
  std::vector<std::string> bad;
  bool any = false;
  for (const auto& op : ops) {
    if (allowed.count(op)) any = true;
    else bad.push_back(op);
  }
  if (!bad.empty())
    return fmt::format("uses {}, which the {} agent may not use; allowed: {}", fmt::join(bad, ", "), to_string(role),
                       fmt::join(allowed, ", "));
  if (!any)
    return fmt::format("uses none of the {} agent's operations ({})", to_string(role), fmt::join(allowed, ", "));
  return {};
}

ProposalBatch propose(Role role, const PromptContext& ctx, llm::ChatBackend& backend,
                      const std::vector<data::ColumnSchema>& schema, int n_proposals, int round,
                      const std::set<std::string>& known_keys, const PromptBudget& budget) {
  ProposalBatch batch;
  std::set<std::string> taken, batch_keys;
  for (const auto& c : schema) taken.insert(c.name);

  llm::ChatRequest request =
      build_prompt(role, ctx, n_proposals, fmt::format("{}:{}:0", round, to_string(role)), budget);
  for (int seq = 0;; ++seq) {
    const llm::ChatResponse reply = backend.complete(request);
    ++batch.calls;
    std::vector<Failure> failures;
    const auto blocks = extract_blocks(reply.content);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (static_cast<int>(batch.specs.size()) >= n_proposals) break;
      const DslBlock& block = blocks[b];
      memory::ProcRecord rec;
      rec.transform_type = std::string(to_string(role));
      rec.round = round;
      rec.description = block.description;
      auto fail = [&](memory::Outcome outcome, const std::string& message, bool repairable) {
        rec.outcome = outcome;
        rec.detail = message;
        batch.records.push_back(rec);
        if (repairable) failures.push_back({b + 1, rec.feature_name, message});
      };

      dsl::Program program;
      try {
        program = dsl::parse(block.program);
      } catch (const dsl::ParseError& e) {
        rec.feature_name = guess_name(block.program);
        fail(memory::Outcome::parse_error, e.what(), true);
        continue;
      }
      rec.base_columns = dsl::columns_used(program.body);
      rec.canonical_key = dsl::canonicalize(program).key;
      rec.feature_name = program.feature_name;
      if (rec.description.empty()) rec.description = dsl::render(program.body);

      dsl::TypedProgram typed;
      try {
        typed = dsl::typecheck(program, schema);
      } catch (const dsl::TypeError& e) {
        fail(memory::Outcome::type_error, e.what(), true);
        continue;
      }
      if (const std::string v = role_violation(role, program); !v.empty()) {
        fail(memory::Outcome::role_violation, v, true);
        continue;
      }
      if (known_keys.count(rec.canonical_key) || batch_keys.count(rec.canonical_key)) {
        fail(memory::Outcome::duplicate, "duplicates an earlier transformation", false);
        continue;
      }

      typed.program.feature_name = unique_name(program.feature_name, taken);
      rec.feature_name = typed.program.feature_name;
      rec.detail = dsl::render(typed.program);
      rec.outcome = memory::Outcome::accepted;
      batch_keys.insert(rec.canonical_key);
      batch.records.push_back(rec);
      batch.specs.push_back({std::move(typed), role, rec.description, round, rec.canonical_key});
    }

    if (failures.empty() || seq >= kMaxRepairs || static_cast<int>(batch.specs.size()) >= n_proposals) break;

    std::string repair = "Some of your blocks were rejected:\n";
    for (const auto& f : failures)
      repair += fmt::format("- block {}{}: {}\n", f.block, f.name.empty() ? "" : " (" + f.name + ")", f.message);
    repair += fmt::format(
        "Reply with corrected ```dsl blocks for the rejected features only, at most {} of them.\n",
        n_proposals - static_cast<int>(batch.specs.size()));
    request.messages.push_back({"assistant", reply.content});
    request.messages.push_back({"user", repair});
    request.tag = fmt::format("{}:{}:{}", round, to_string(role), seq + 1);
  }
  return batch;
}

}  // namespace malmas::agents
