#include <fmt/format.h>
#include <gtest/gtest.h>

#include "malmas/agents/agents.hpp"
#include "malmas/dsl/ast.hpp"
#include "malmas/dsl/parser.hpp"
#include "malmas/dsl/render.hpp"
#include "malmas/llm/scripted.hpp"
#include "support.hpp"

using namespace malmas;
using namespace malmas::agents;
using nlohmann::json;

namespace {

std::vector<data::ColumnSchema> numeric_schema(std::initializer_list<const char*> names) {
  std::vector<data::ColumnSchema> out;
  for (const char* n : names) out.push_back({n, data::ColumnKind::numeric});
  return out;
}

llm::ScriptedBackend scripted(json script) { return llm::ScriptedBackend(std::move(script), std::make_shared<llm::TokenLedger>()); }

std::string block(const std::string& desc, const std::string& stmt) {
  return fmt::format("```dsl\n# {}\n{}\n```\n", desc, stmt);
}

const std::string& user_text(const llm::ChatRequest& r) { return r.messages.at(1).content; }

}  // namespace

TEST(Prompt, EmptyMemoriesOmitSections) {
  PromptContext ctx;
  ctx.metadata = "Rows: 10\n";
  const auto req = build_prompt(Role::cross, ctx, 5, "1:cross:0");
  ASSERT_EQ(req.messages.size(), 2u);
  EXPECT_EQ(req.messages[0].role, "system");
  const auto& u = user_text(req);
  for (const char* section : {"Effective features", "Your notes", "Shared guidance", "Already attempted"})
    EXPECT_EQ(u.find(section), std::string::npos) << section;
  EXPECT_NE(u.find("exactly 5"), std::string::npos);
  EXPECT_EQ(req.tag, "1:cross:0");
  EXPECT_EQ(req.joined(), build_prompt(Role::cross, ctx, 5, "1:cross:0").joined());
}

TEST(Prompt, TemporalSystemPromptNamesOnlyDateOps) {
  const auto sys = build_prompt(Role::temporal, {}, 3, "1:temporal:0").messages[0].content;
  EXPECT_NE(sys.find("date_part"), std::string::npos);
  EXPECT_NE(sys.find("elapsed_days"), std::string::npos);
  for (const char* op : {"group_agg", "cluster", "zscore", "sqrt_s", "clip", "div_s", "if_then_else"})
    EXPECT_EQ(sys.find(op), std::string::npos) << op;
}

TEST(Prompt, EffectiveFeaturesAppearWithValues) {
  PromptContext ctx;
  ctx.effective_features = {{"x1_x2", "mul(col(\"x1\"), col(\"x2\"))", 0.8712}, {"r", "div_s(col(\"a\"), col(\"b\"))", 0.75}};
  const auto u = user_text(build_prompt(Role::cross, ctx, 5, "2:cross:0"));
  EXPECT_NE(u.find("x1_x2 = mul(col(\"x1\"), col(\"x2\")) (auc=0.8712)"), std::string::npos);
  EXPECT_NE(u.find("r = div_s(col(\"a\"), col(\"b\")) (auc=0.7500)"), std::string::npos);
}

TEST(Prompt, BudgetsKeepMostRecent) {
  PromptContext ctx;
  for (int i = 0; i < 50; ++i) ctx.attempted_keys.push_back(fmt::format("key{:02}", i));
  const auto u = user_text(build_prompt(Role::unary, ctx, 5, "3:unary:0"));
  EXPECT_EQ(u.find("key09"), std::string::npos);
  EXPECT_NE(u.find("key10"), std::string::npos);
  EXPECT_NE(u.find("key49"), std::string::npos);
}

TEST(Propose, DuplicateOfAttemptedKeyIsDropped) {
  const auto schema = numeric_schema({"a", "b", "c"});
  const std::string reply = block("ab", "FEATURE ab = a * b") + block("ba", "FEATURE ba = b * a") +
                            block("ac", "FEATURE ac = a + c") + block("bc", "FEATURE bc = b - c");
  auto backend = scripted({{"1:cross:0", reply}});
  const std::set<std::string> known = {dsl::canonicalize(dsl::parse("FEATURE z = c + a")).key};
  const auto batch = propose(Role::cross, {}, backend, schema, 5, 1, known);
  ASSERT_EQ(batch.specs.size(), 2u);
  EXPECT_EQ(batch.specs[0].name(), "ab");
  EXPECT_EQ(batch.specs[1].name(), "bc");
  EXPECT_EQ(batch.specs[0].description, "ab");
  EXPECT_EQ(batch.specs[0].base_columns(), (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(batch.records.size(), 4u);
  EXPECT_EQ(batch.records[1].outcome, memory::Outcome::duplicate);
  EXPECT_EQ(batch.records[2].outcome, memory::Outcome::duplicate);
  EXPECT_EQ(batch.calls, 1);  // duplicates are not repaired
}

TEST(Propose, TypeErrorTriggersRepairWithMessage) {
  const auto schema = numeric_schema({"a", "b"});
  const std::string bad = "FEATURE bad = a * nope";
  std::string message;
  try {
    dsl::typecheck(dsl::parse(bad), schema);
  } catch (const dsl::TypeError& e) {
    message = e.what();
  }
  ASSERT_FALSE(message.empty());
  // The repair turn must quote the typecheck message for the scripted fix to be served.
  const json script = {{"1:cross:0", block("bad", bad)},
                       {"1:cross:1", {{"if_prompt_contains", "block 1 (bad): " + message},
                                      {"then", block("fixed", "FEATURE fixed = a * b")},
                                      {"else", "no"}}}};
  auto backend = scripted(script);
  const auto batch = propose(Role::cross, {}, backend, schema, 1, 1, {});
  ASSERT_EQ(batch.specs.size(), 1u);
  EXPECT_EQ(batch.specs[0].name(), "fixed");
  EXPECT_EQ(batch.calls, 2);
  ASSERT_EQ(batch.records.size(), 2u);
  EXPECT_EQ(batch.records[0].outcome, memory::Outcome::type_error);
  EXPECT_EQ(batch.records[0].detail, message);

  auto stubborn = scripted({{"1:cross:*", block("bad", bad)}});
  EXPECT_TRUE(propose(Role::cross, {}, stubborn, schema, 1, 1, {}).specs.empty());
  EXPECT_EQ(stubborn.ledger().total().calls, 1 + kMaxRepairs);
}

TEST(Propose, RoleViolationIsRecorded) {
  std::vector<data::ColumnSchema> schema = numeric_schema({"a"});
  schema.push_back({"g", data::ColumnKind::categorical});
  auto backend = scripted({{"1:unary:*", block("grp", "FEATURE m = group_agg(mean, key=col(\"g\"), value=col(\"a\"))")}});
  const auto batch = propose(Role::unary, {}, backend, schema, 2, 1, {});
  EXPECT_TRUE(batch.specs.empty());
  EXPECT_EQ(batch.calls, 3);
  ASSERT_EQ(batch.records.size(), 3u);
  for (const auto& r : batch.records) {
    EXPECT_EQ(r.outcome, memory::Outcome::role_violation);
    EXPECT_NE(r.detail.find("group_agg"), std::string::npos);
  }
}

TEST(Propose, NameCollisionsAreRenamed) {
  const auto schema = numeric_schema({"a", "b"});
  auto backend = scripted({{"1:cross:0", block("", "FEATURE a = a * b") + block("", "FEATURE a = a + b")}});
  const auto batch = propose(Role::cross, {}, backend, schema, 5, 1, {});
  ASSERT_EQ(batch.specs.size(), 2u);
  EXPECT_EQ(batch.specs[0].name(), "a_2");
  EXPECT_EQ(batch.specs[1].name(), "a_3");
  EXPECT_EQ(batch.specs[0].description, "col(\"a\") * col(\"b\")");
}

// Every accepted spec obeys its role, whatever mix of blocks the reply holds.
TEST(Propose, RoleConformanceFuzz) {
  Rng rng(2024);
  std::size_t accepted = 0;
  const std::vector<std::string> role_snippets = {
      "sq(col(\"n0\"))", "col(\"n0\") * col(\"n1\")", "date_part(month, col(\"t0\"))",
      "group_agg(max, key=col(\"c0\"), value=col(\"n2\"))", "bin(col(\"n1\"), 4)",
      "cluster(3, [col(\"n0\"), col(\"n1\")])", "elapsed_days(col(\"t1\"), col(\"t0\"))", "clip(col(\"n3\"), -1, 1)"};
  for (int trial = 0; trial < 60; ++trial) {
    const auto table = fixture::fuzz_table(rng, 12);
    const auto schema = table.feature_schema();
    const Role role = kAllRoles[rng.below(kAllRoles.size())];
    std::string reply;
    for (int b = 0; b < 6; ++b) {
      if (rng.below(2)) reply += block("r", dsl::render(fixture::random_program(rng, 3)));
      else reply += block("s", fmt::format("FEATURE f{} = {}", b, role_snippets[rng.below(role_snippets.size())]));
    }
    auto backend = scripted({{fmt::format("1:{}:*", to_string(role)), reply}});
    const auto batch = propose(role, {}, backend, schema, 5, 1, {});
    EXPECT_LE(batch.specs.size(), 5u);
    accepted += batch.specs.size();
    for (const auto& spec : batch.specs) {
      EXPECT_EQ(role_violation(role, spec.typed.program), "") << dsl::render(spec.typed.program);
      const auto ops = dsl::ops_used(spec.typed.program.body);
      const bool any = std::any_of(ops.begin(), ops.end(), [&](const auto& op) { return allowed_ops(role).count(op) > 0; });
      EXPECT_TRUE(any);
      EXPECT_EQ(spec.role, role);
    }
    std::set<std::string> keys;
    for (const auto& spec : batch.specs) EXPECT_TRUE(keys.insert(spec.canonical_key).second);
  }
  EXPECT_GT(accepted, 30u);  // the fuzz must exercise acceptance, not only rejection
}

TEST(Router, AllAndFixedRespectEligibility) {
  const auto schema = numeric_schema({"a", "b"});
  const auto all = route("m", schema, {}, RouterStrategy::parse("all"), 0, nullptr, 1);
  EXPECT_EQ(all.selected.size(), 5u);
  EXPECT_EQ(std::count(all.selected.begin(), all.selected.end(), Role::temporal), 0);
  const auto fixed = route("m", schema, {}, RouterStrategy::parse("fixed:2"), 0, nullptr, 1);
  EXPECT_EQ(fixed.selected, (std::vector<Role>{Role::unary, Role::cross}));
  auto with_dates = schema;
  with_dates.push_back({"t", data::ColumnKind::datetime});
  EXPECT_EQ(route("m", with_dates, {}, RouterStrategy::parse("all"), 0, nullptr, 1).selected.size(), 6u);
}

TEST(Router, RandomKIsSeeded) {
  const auto schema = numeric_schema({"a"});
  const auto s = RouterStrategy::parse("random:4");
  const auto a = route("m", schema, {}, s, 0, nullptr, 1), b = route("m", schema, {}, s, 0, nullptr, 1);
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_EQ(a.selected.size(), 4u);
  EXPECT_TRUE(std::is_sorted(a.selected.begin(), a.selected.end()));
  bool differs = false;
  for (std::uint64_t seed = 1; seed < 20 && !differs; ++seed)
    differs = route("m", schema, {}, s, seed, nullptr, 1).selected != a.selected;
  EXPECT_TRUE(differs);
}

TEST(Router, LlmRepliesAreFiltered) {
  const auto schema = numeric_schema({"a"});
  auto backend = scripted({{"1:router:0", R"(["unary", "temporal"])"}});
  const auto d = route("m", schema, {}, RouterStrategy::parse("llm"), 0, &backend, 1);
  EXPECT_EQ(d.selected, (std::vector<Role>{Role::unary}));
  EXPECT_NE(d.rationale.find("temporal"), std::string::npos);
}

TEST(Router, UnparseableReplyRetriesThenFallsBack) {
  const auto schema = numeric_schema({"a"});
  auto once = scripted({{"1:router:0", "I pick the cross agent"}, {"1:router:1", R"(["cross"])"}});
  EXPECT_EQ(route("m", schema, {}, RouterStrategy::parse("llm"), 0, &once, 1).selected, (std::vector<Role>{Role::cross}));

  auto never = scripted({{"1:router:*", "no idea"}});
  const auto d = route("m", schema, {}, RouterStrategy::parse("llm"), 0, &never, 1);
  EXPECT_EQ(d.selected.size(), static_cast<std::size_t>(kRouterFallbackK));
  EXPECT_NE(d.rationale.find("fell back"), std::string::npos);
  EXPECT_EQ(never.ledger().total().calls, 2);
}

TEST(Router, StrategyText) {
  EXPECT_EQ(RouterStrategy::parse("fixed:3").str(), "fixed:3");
  EXPECT_EQ(RouterStrategy::parse("llm").kind, RouterKind::llm);
  EXPECT_THROW(RouterStrategy::parse("fixed:x"), std::invalid_argument);
  EXPECT_THROW(RouterStrategy::parse("some"), std::invalid_argument);
}

TEST(Summary, BelowThresholdKeepsNotes) {
  auto backend = scripted({{"*:*:*", "- a"}});
  const std::vector<memory::ConceptNote> prev = {{"old", 1}};
  const std::vector<memory::FeedRecord> feed = {{"f", "auc", 0.8, true, 2, 0.01}, {"g", "auc", 0.7, false, 2, -0.01}};
  const auto r = summarize_agent(Role::cross, {}, feed, prev, backend, 2, 2);
  EXPECT_EQ(r.notes, prev);
  EXPECT_FALSE(r.called);
  const auto empty = summarize_agent(Role::cross, {}, {}, prev, backend, 0, 2);
  EXPECT_EQ(empty.notes, prev);
  EXPECT_EQ(backend.ledger().total().calls, 0);
}

TEST(Summary, BulletsReplaceNotes) {
  auto backend = scripted({{"2:summary.cross:0", "Notes:\n- one\n* two\n3. three\nplain line"}});
  const std::vector<memory::FeedRecord> feed = {{"f", "auc", 0.8, true, 2, 0.01}, {"g", "auc", 0.9, true, 2, 0.02}};
  const auto r = summarize_agent(Role::cross, {}, feed, {{"old", 1}}, backend, 2, 2);
  EXPECT_TRUE(r.called);
  ASSERT_EQ(r.notes.size(), 3u);
  EXPECT_EQ(r.notes[0].text, "one");
  EXPECT_EQ(r.notes[2].text, "three");
  EXPECT_EQ(r.notes[0].round, 2);

  auto failing = scripted({{"*:*:*", {{"error", "down"}, {"kind", "http_status"}}}});
  const auto f = summarize_agent(Role::cross, {}, feed, {{"old", 1}}, failing, 2, 2);
  EXPECT_EQ(f.notes, (std::vector<memory::ConceptNote>{{"old", 1}}));
  EXPECT_EQ(f.error, "down");
}

TEST(Summary, GlobalFromAgentNotes) {
  std::map<Role, AgentDigest> per_agent;
  per_agent[Role::unary].notes = {{"u1", 1}, {"u2", 1}};
  per_agent[Role::cross].notes = {{"c1", 1}, {"c2", 1}};
  per_agent[Role::cross].feed = {{"x1_x2", "auc", 0.9, true, 1, 0.05}};
  auto backend = scripted({{"1:summary:0", {{"if_prompt_contains", "x1_x2"}, {"then", "- g1\n- g2\n- g3\n- g4"}, {"else", "- missing"}}}});
  const auto r = summarize_global(per_agent, {}, backend, 1);
  ASSERT_EQ(r.notes.size(), 4u);
  EXPECT_EQ(r.notes[3].text, "g4");

  std::map<Role, AgentDigest> silent;
  silent[Role::unary] = {};
  const std::vector<memory::ConceptNote> prev = {{"keep", 1}};
  EXPECT_EQ(summarize_global(silent, prev, backend, 2).notes, prev);
}

TEST(Summary, BulletParsing) {
  EXPECT_EQ(parse_bullets("- a\n- b\n- c", 2), (std::vector<std::string>{"a", "b"}));
  EXPECT_TRUE(parse_bullets("no bullets here", 5).empty());
}
