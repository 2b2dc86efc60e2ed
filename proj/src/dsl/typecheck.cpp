#include "malmas/dsl/typecheck.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "malmas/common/overloaded.hpp"

namespace malmas::dsl {

namespace {

std::string join_messages(const std::vector<Diagnostic>& diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (!out.empty()) out += "; ";
    out += d.message;
  }
  return out;
}

class Checker {
 public:
  explicit Checker(std::span<const data::ColumnSchema> schema) : schema_(schema) {}

  void expr(const Expr& e) {
    std::visit(Overloaded{
                   [&](const Literal&) {},
                   [&](const ColumnRef& n) { lookup(n); },
                   [&](const Unary& n) { expr(*n.arg); },
                   [&](const Binary& n) {
                     expr(*n.lhs);
                     expr(*n.rhs);
                   },
                   [&](const IfThenElse& n) {
                     expr(*n.lhs);
                     expr(*n.rhs);
                     expr(*n.then_branch);
                     expr(*n.else_branch);
                   },
                   [&](const GroupAgg& n) {
                     require(n.key, "group_agg key", {data::ColumnKind::categorical}, "categorical");
                     expr(*n.value);
                   },
                   [&](const Bin& n) { expr(*n.arg); },
                   [&](const Clip& n) { expr(*n.arg); },
                   [&](const ZScore& n) { expr(*n.arg); },
                   [&](const Cluster& n) {
                     for (const auto& c : n.cols)
                       require(c, "cluster", {data::ColumnKind::numeric, data::ColumnKind::boolean}, "numeric");
                   },
                   [&](const DatePart& n) {
                     require(n.col, "date_part", {data::ColumnKind::datetime}, "datetime");
                   },
                   [&](const ElapsedDays& n) {
                     require(n.to, "elapsed_days", {data::ColumnKind::datetime}, "datetime");
                     require(n.from, "elapsed_days", {data::ColumnKind::datetime}, "datetime");
                   },
               },
               e.node);
  }

  std::vector<Diagnostic> diagnostics;

 private:
  const data::ColumnSchema* lookup(const ColumnRef& ref) {
    auto it = std::find_if(schema_.begin(), schema_.end(), [&](const auto& s) { return s.name == ref.name; });
    if (it == schema_.end()) {
      diagnostics.push_back({Diagnostic::Code::unknown_column, ref.name, ref.offset,
                             fmt::format("unknown column \"{}\"", ref.name)});
      return nullptr;
    }
    return &*it;
  }

  void require(const ColumnRef& ref, std::string_view where, std::initializer_list<data::ColumnKind> allowed,
               std::string_view required) {
    const data::ColumnSchema* s = lookup(ref);
    if (!s) return;
    if (std::find(allowed.begin(), allowed.end(), s->kind) == allowed.end())
      diagnostics.push_back({Diagnostic::Code::kind_mismatch, ref.name, ref.offset,
                             fmt::format("column \"{}\" has kind {}; {} requires a {} column", ref.name,
                                         data::to_string(s->kind), where, required)});
  }

  std::span<const data::ColumnSchema> schema_;
};

}  // namespace

TypeError::TypeError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error("type error: " + join_messages(diagnostics)), diagnostics_(std::move(diagnostics)) {}

std::vector<Diagnostic> check(const Program& program, std::span<const data::ColumnSchema> schema) {
  Checker checker(schema);
  checker.expr(program.body);
  return std::move(checker.diagnostics);
}

TypedProgram typecheck(const Program& program, std::span<const data::ColumnSchema> schema) {
  auto diagnostics = check(program, schema);
  if (!diagnostics.empty()) throw TypeError(std::move(diagnostics));
  return TypedProgram{program, columns_used(program.body), ops_used(program.body)};
}

}  // namespace malmas::dsl
