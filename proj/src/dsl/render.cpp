#include "malmas/dsl/render.hpp"

#include <fmt/format.h>

#include "malmas/common/overloaded.hpp"

namespace malmas::dsl {

std::string format_number(double value) { return fmt::format("{}", value); }

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string colref(const ColumnRef& c) { return "col(" + quote(c.name) + ")"; }

int precedence(BinaryOp op) { return op == BinaryOp::add || op == BinaryOp::sub ? 1 : 2; }

std::string_view infix(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div_s: return "/";
  }
  return "+";
}

std::string operand(const Expr& child, int parent_prec, bool right) {
  std::string text = render(child);
  if (const auto* b = std::get_if<Binary>(&child.node)) {
    const int p = precedence(b->op);
    if (p < parent_prec || (right && p == parent_prec)) return "(" + text + ")";
  }
  return text;
}

}  // namespace

std::string render(const Expr& expr) {
  return std::visit(
      Overloaded{
          [](const Literal& n) { return format_number(n.value); },
          [](const ColumnRef& n) { return colref(n); },
          [](const Unary& n) { return fmt::format("{}({})", name(n.op), render(*n.arg)); },
          [](const Binary& n) {
            const int p = precedence(n.op);
            return fmt::format("{} {} {}", operand(*n.lhs, p, false), infix(n.op), operand(*n.rhs, p, true));
          },
          [](const IfThenElse& n) {
            return fmt::format("(if {} {} {} then {} else {})", render(*n.lhs), symbol(n.cmp), render(*n.rhs),
                               render(*n.then_branch), render(*n.else_branch));
          },
          [](const GroupAgg& n) {
            return fmt::format("group_agg({}, key={}, value={})", name(n.agg), colref(n.key), render(*n.value));
          },
          [](const Bin& n) { return fmt::format("bin({}, {})", render(*n.arg), n.bins); },
          [](const Clip& n) {
            return fmt::format("clip({}, {}, {})", render(*n.arg), format_number(n.lo), format_number(n.hi));
          },
          [](const ZScore& n) { return fmt::format("zscore({})", render(*n.arg)); },
          [](const Cluster& n) {
            std::string out = fmt::format("cluster({}", n.k);
            for (const auto& c : n.cols) out += ", " + colref(c);
            return out + ")";
          },
          [](const DatePart& n) { return fmt::format("date_part({}, {})", name(n.part), colref(n.col)); },
          [](const ElapsedDays& n) { return fmt::format("elapsed_days({}, {})", colref(n.to), colref(n.from)); },
      },
      expr.node);
}

std::string render(const Program& program) {
  return fmt::format("FEATURE {} = {}", program.feature_name, render(program.body));
}

}  // namespace malmas::dsl
