#include "malmas/dsl/canonical.hpp"

#include <fmt/format.h>

#include "malmas/common/overloaded.hpp"
#include "malmas/dsl/render.hpp"
#include "malmas/dsl/scalar.hpp"

namespace malmas::dsl {

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

std::string number(double v) { return format_number(v == 0.0 ? 0.0 : v); }

std::string sexpr(const Expr& e);

std::string col(const ColumnRef& c) { return "(col " + quote(c.name) + ")"; }

std::string sexpr(const Expr& e) {
  return std::visit(
      Overloaded{
          [](const Literal& n) { return number(n.value); },
          [](const ColumnRef& n) { return col(n); },
          [](const Unary& n) { return fmt::format("({} {})", name(n.op), sexpr(*n.arg)); },
          [](const Binary& n) { return fmt::format("({} {} {})", name(n.op), sexpr(*n.lhs), sexpr(*n.rhs)); },
          [](const IfThenElse& n) {
            return fmt::format("(if_then_else ({} {} {}) {} {})", name(n.cmp), sexpr(*n.lhs), sexpr(*n.rhs),
                               sexpr(*n.then_branch), sexpr(*n.else_branch));
          },
          [](const GroupAgg& n) {
            return fmt::format("(group_agg {} {} {})", name(n.agg), col(n.key), sexpr(*n.value));
          },
          [](const Bin& n) { return fmt::format("(bin {} {})", sexpr(*n.arg), n.bins); },
          [](const Clip& n) { return fmt::format("(clip {} {} {})", sexpr(*n.arg), number(n.lo), number(n.hi)); },
          [](const ZScore& n) { return fmt::format("(zscore {})", sexpr(*n.arg)); },
          [](const Cluster& n) {
            std::string cols;
            for (const auto& c : n.cols) cols += " " + col(c);
            return fmt::format("(cluster {}{})", n.k, cols);
          },
          [](const DatePart& n) { return fmt::format("(date_part {} {})", name(n.part), col(n.col)); },
          [](const ElapsedDays& n) { return fmt::format("(elapsed_days {} {})", col(n.to), col(n.from)); },
      },
      e.node);
}

const double* literal(const Expr& e) {
  const auto* l = std::get_if<Literal>(&e.node);
  return l ? &l->value : nullptr;
}

Expr lit(double v) { return make::lit(scalar::finite_or_zero(v) == 0.0 ? 0.0 : scalar::finite_or_zero(v)); }

void sort_pair(Box<Expr>& a, Box<Expr>& b) {
  if (sexpr(*b) < sexpr(*a)) std::swap(a, b);
}

}  // namespace

Expr normalize(const Expr& expr) {
  return std::visit(
      Overloaded{
          [](const Literal& n) { return lit(n.value); },
          [](const ColumnRef& n) { return make::col(n.name); },
          [](const Unary& n) {
            Expr arg = normalize(*n.arg);
            if (const double* v = literal(arg)) return lit(scalar::apply(n.op, *v));
            return make::unary(n.op, std::move(arg));
          },
          [](const Binary& n) {
            Expr lhs = normalize(*n.lhs), rhs = normalize(*n.rhs);
            const double *a = literal(lhs), *b = literal(rhs);
            if (a && b) return lit(scalar::apply(n.op, *a, *b));
            Expr out = make::binary(n.op, std::move(lhs), std::move(rhs));
            if (n.op == BinaryOp::add || n.op == BinaryOp::mul) {
              auto& node = std::get<Binary>(out.node);
              sort_pair(node.lhs, node.rhs);
            }
            return out;
          },
          [](const IfThenElse& n) {
            Expr lhs = normalize(*n.lhs), rhs = normalize(*n.rhs);
            Expr yes = normalize(*n.then_branch), no = normalize(*n.else_branch);
            const double *a = literal(lhs), *b = literal(rhs);
            if (a && b) return scalar::compare(n.cmp, *a, *b) ? yes : no;
            Expr out = make::if_then_else(n.cmp, std::move(lhs), std::move(rhs), std::move(yes), std::move(no));
            if (n.cmp == CmpOp::eq) {
              auto& node = std::get<IfThenElse>(out.node);
              sort_pair(node.lhs, node.rhs);
            }
            return out;
          },
          [](const GroupAgg& n) { return make::group_agg(n.agg, n.key.name, normalize(*n.value)); },
          [](const Bin& n) {
            Expr arg = normalize(*n.arg);
            if (literal(arg)) return lit(0.0);
            return make::bin(std::move(arg), n.bins);
          },
          [](const Clip& n) {
            Expr arg = normalize(*n.arg);
            if (const double* v = literal(arg)) return lit(scalar::clip(*v, n.lo, n.hi));
            return make::clip(std::move(arg), n.lo, n.hi);
          },
          [](const ZScore& n) {
            Expr arg = normalize(*n.arg);
            if (literal(arg)) return lit(0.0);
            return make::zscore(std::move(arg));
          },
          [](const Cluster& n) {
            std::vector<std::string> cols;
            for (const auto& c : n.cols) cols.push_back(c.name);
            return make::cluster(n.k, std::move(cols));
          },
          [](const DatePart& n) { return make::date_part(n.part, n.col.name); },
          [](const ElapsedDays& n) { return make::elapsed_days(n.to.name, n.from.name); },
      },
      expr.node);
}

CanonicalKey canonicalize(const Expr& expr) { return {sexpr(normalize(expr))}; }

CanonicalKey canonicalize(const Program& program) { return canonicalize(program.body); }

}  // namespace malmas::dsl
