#include "malmas/dsl/ast.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "malmas/common/overloaded.hpp"

namespace malmas::dsl {

namespace {

constexpr std::array<std::string_view, 6> kUnaryNames{"neg", "abs", "sq", "sqrt_s", "log_s", "recip_s"};
constexpr std::array<std::string_view, 4> kBinaryNames{"add", "sub", "mul", "div_s"};
constexpr std::array<std::string_view, 5> kCmpNames{"lt", "le", "gt", "ge", "eq"};
constexpr std::array<std::string_view, 5> kCmpSymbols{"<", "<=", ">", ">=", "=="};
constexpr std::array<std::string_view, 5> kAggNames{"mean", "std", "min", "max", "count"};
constexpr std::array<std::string_view, 5> kPartNames{"year", "month", "day", "dow", "hour"};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view text) {
  const std::string key = lower(text);
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == key) return static_cast<Enum>(i);
  return std::nullopt;
}

}  // namespace

std::string_view name(UnaryOp op) { return kUnaryNames[static_cast<std::size_t>(op)]; }
std::string_view name(BinaryOp op) { return kBinaryNames[static_cast<std::size_t>(op)]; }
std::string_view name(CmpOp op) { return kCmpNames[static_cast<std::size_t>(op)]; }
std::string_view symbol(CmpOp op) { return kCmpSymbols[static_cast<std::size_t>(op)]; }
std::string_view name(AggOp op) { return kAggNames[static_cast<std::size_t>(op)]; }
std::string_view name(DatePartKind part) { return kPartNames[static_cast<std::size_t>(part)]; }

std::optional<UnaryOp> parse_unary_op(std::string_view text) { return lookup<UnaryOp>(kUnaryNames, text); }
std::optional<BinaryOp> parse_binary_op(std::string_view text) { return lookup<BinaryOp>(kBinaryNames, text); }
std::optional<AggOp> parse_agg_op(std::string_view text) { return lookup<AggOp>(kAggNames, text); }
std::optional<DatePartKind> parse_date_part(std::string_view text) { return lookup<DatePartKind>(kPartNames, text); }

Shape measure(const Expr& expr) {
  auto combine = [](std::initializer_list<Shape> children, int extra_leaf_children) {
    Shape s{1, 1};
    int deepest = extra_leaf_children > 0 ? 1 : 0;
    for (const Shape& c : children) {
      s.nodes += c.nodes;
      deepest = std::max(deepest, c.depth);
    }
    s.nodes += extra_leaf_children;
    s.depth += deepest;
    return s;
  };
  return std::visit(
      Overloaded{
          [&](const Literal&) { return Shape{1, 1}; },
          [&](const ColumnRef&) { return Shape{1, 1}; },
          [&](const Unary& n) { return combine({measure(*n.arg)}, 0); },
          [&](const Binary& n) { return combine({measure(*n.lhs), measure(*n.rhs)}, 0); },
          [&](const IfThenElse& n) {
            return combine({measure(*n.lhs), measure(*n.rhs), measure(*n.then_branch), measure(*n.else_branch)}, 0);
          },
          [&](const GroupAgg& n) { return combine({measure(*n.value)}, 1); },
          [&](const Bin& n) { return combine({measure(*n.arg)}, 0); },
          [&](const Clip& n) { return combine({measure(*n.arg)}, 0); },
          [&](const ZScore& n) { return combine({measure(*n.arg)}, 0); },
          [&](const Cluster& n) { return combine({}, static_cast<int>(n.cols.size())); },
          [&](const DatePart&) { return combine({}, 1); },
          [&](const ElapsedDays&) { return combine({}, 2); },
      },
      expr.node);
}

namespace {

void collect_ops(const Expr& expr, std::set<std::string>& out) {
  std::visit(Overloaded{
                 [&](const Literal&) {},
                 [&](const ColumnRef&) {},
                 [&](const Unary& n) {
                   out.emplace(name(n.op));
                   collect_ops(*n.arg, out);
                 },
                 [&](const Binary& n) {
                   out.emplace(name(n.op));
                   collect_ops(*n.lhs, out);
                   collect_ops(*n.rhs, out);
                 },
                 [&](const IfThenElse& n) {
                   out.emplace("if_then_else");
                   collect_ops(*n.lhs, out);
                   collect_ops(*n.rhs, out);
                   collect_ops(*n.then_branch, out);
                   collect_ops(*n.else_branch, out);
                 },
                 [&](const GroupAgg& n) {
                   out.emplace("group_agg");
                   collect_ops(*n.value, out);
                 },
                 [&](const Bin& n) {
                   out.emplace("bin");
                   collect_ops(*n.arg, out);
                 },
                 [&](const Clip& n) {
                   out.emplace("clip");
                   collect_ops(*n.arg, out);
                 },
                 [&](const ZScore& n) {
                   out.emplace("zscore");
                   collect_ops(*n.arg, out);
                 },
                 [&](const Cluster&) { out.emplace("cluster"); },
                 [&](const DatePart&) { out.emplace("date_part"); },
                 [&](const ElapsedDays&) { out.emplace("elapsed_days"); },
             },
             expr.node);
}

void collect_columns(const Expr& expr, std::vector<std::string>& out) {
  auto add = [&](const std::string& c) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  };
  std::visit(Overloaded{
                 [&](const Literal&) {},
                 [&](const ColumnRef& n) { add(n.name); },
                 [&](const Unary& n) { collect_columns(*n.arg, out); },
                 [&](const Binary& n) {
                   collect_columns(*n.lhs, out);
                   collect_columns(*n.rhs, out);
                 },
                 [&](const IfThenElse& n) {
                   collect_columns(*n.lhs, out);
                   collect_columns(*n.rhs, out);
                   collect_columns(*n.then_branch, out);
                   collect_columns(*n.else_branch, out);
                 },
                 [&](const GroupAgg& n) {
                   add(n.key.name);
                   collect_columns(*n.value, out);
                 },
                 [&](const Bin& n) { collect_columns(*n.arg, out); },
                 [&](const Clip& n) { collect_columns(*n.arg, out); },
                 [&](const ZScore& n) { collect_columns(*n.arg, out); },
                 [&](const Cluster& n) {
                   for (const auto& c : n.cols) add(c.name);
                 },
                 [&](const DatePart& n) { add(n.col.name); },
                 [&](const ElapsedDays& n) {
                   add(n.to.name);
                   add(n.from.name);
                 },
             },
             expr.node);
}

}  // namespace

std::set<std::string> ops_used(const Expr& expr) {
  std::set<std::string> out;
  collect_ops(expr, out);
  return out;
}

std::vector<std::string> columns_used(const Expr& expr) {
  std::vector<std::string> out;
  collect_columns(expr, out);
  return out;
}

bool is_identifier(std::string_view text) {
  if (text.empty()) return false;
  auto head = static_cast<unsigned char>(text.front());
  if (!(std::isalpha(head) || head == '_')) return false;
  return std::all_of(text.begin() + 1, text.end(), [](unsigned char c) { return std::isalnum(c) || c == '_'; });
}

namespace make {
Expr lit(double v) { return Expr{Literal{v}}; }
Expr col(std::string name) { return Expr{ColumnRef{std::move(name)}}; }
Expr unary(UnaryOp op, Expr arg) { return Expr{Unary{op, std::move(arg)}}; }
Expr binary(BinaryOp op, Expr lhs, Expr rhs) { return Expr{Binary{op, std::move(lhs), std::move(rhs)}}; }
Expr if_then_else(CmpOp cmp, Expr lhs, Expr rhs, Expr then_branch, Expr else_branch) {
  return Expr{IfThenElse{cmp, std::move(lhs), std::move(rhs), std::move(then_branch), std::move(else_branch)}};
}
Expr group_agg(AggOp agg, std::string key, Expr value) {
  return Expr{GroupAgg{agg, ColumnRef{std::move(key)}, std::move(value)}};
}
Expr bin(Expr arg, int bins) { return Expr{Bin{std::move(arg), bins}}; }
Expr clip(Expr arg, double lo, double hi) { return Expr{Clip{std::move(arg), lo, hi}}; }
Expr zscore(Expr arg) { return Expr{ZScore{std::move(arg)}}; }
Expr cluster(int k, std::vector<std::string> cols) {
  Cluster c{k, {}};
  for (auto& name : cols) c.cols.push_back(ColumnRef{std::move(name)});
  return Expr{std::move(c)};
}
Expr date_part(DatePartKind part, std::string col) { return Expr{DatePart{part, ColumnRef{std::move(col)}}}; }
Expr elapsed_days(std::string to, std::string from) {
  return Expr{ElapsedDays{ColumnRef{std::move(to)}, ColumnRef{std::move(from)}}};
}
}  // namespace make

}  // namespace malmas::dsl
