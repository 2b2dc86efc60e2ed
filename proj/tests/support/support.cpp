#include "support.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "malmas/data/csv.hpp"

namespace malmas::fixture {

namespace fs = std::filesystem;
using namespace dsl::make;

data::Table numeric_table(const std::vector<std::string>& names, const std::vector<std::vector<double>>& columns,
                          const std::vector<double>& y, data::Task task) {
  std::vector<data::ColumnSchema> schema;
  std::vector<data::Column> cols;
  for (std::size_t i = 0; i < names.size(); ++i) {
    schema.push_back({names[i], data::ColumnKind::numeric});
    cols.push_back({columns[i], {}, std::nullopt});
  }
  schema.push_back({"y", data::ColumnKind::numeric});
  cols.push_back({y, {}, std::nullopt});
  return data::Table(std::move(schema), std::move(cols), "y", task);
}

std::vector<double> normals(Rng& rng, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) {
    const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
    v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  return out;
}

data::Table product_table(std::size_t rows, std::uint64_t seed, int noise) {
  Rng rng(seed);
  std::vector<std::string> names = {"x1", "x2"};
  std::vector<std::vector<double>> cols = {normals(rng, rows), normals(rng, rows)};
  for (int i = 1; i <= noise; ++i) {
    names.push_back("n" + std::to_string(i));
    cols.push_back(normals(rng, rows));
  }
  std::vector<double> y(rows);
  for (std::size_t i = 0; i < rows; ++i) y[i] = cols[0][i] * cols[1][i] > 0 ? 1.0 : 0.0;
  return numeric_table(names, cols, y);
}

data::Table two_pair_table(std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> names = {"x1", "x2", "x3", "x4", "n1", "n2"};
  std::vector<std::vector<double>> cols;
  for (std::size_t i = 0; i < names.size(); ++i) cols.push_back(normals(rng, rows));
  std::vector<double> y(rows);
  for (std::size_t i = 0; i < rows; ++i) y[i] = cols[0][i] * cols[1][i] + cols[2][i] * cols[3][i] > 0 ? 1.0 : 0.0;
  return numeric_table(names, cols, y);
}

data::Table linear_regression_table(std::size_t rows, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> cols = {normals(rng, rows), normals(rng, rows), normals(rng, rows), normals(rng, rows)};
  const auto eps = normals(rng, rows);
  std::vector<double> y(rows);
  for (std::size_t i = 0; i < rows; ++i) y[i] = 2.0 * cols[0][i] - cols[1][i] + 0.1 * eps[i];
  return numeric_table({"x1", "x2", "n1", "n2"}, cols, y, data::Task::regression);
}

fs::path write_csv(const data::Table& table, const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream(path) << data::to_csv(table);
  return path;
}

data::Table fuzz_table(Rng& rng, std::size_t rows) {
  static const double kSpecial[] = {0.0, -0.0, 1.0, -1.0, 1e-300, -1e-300, 1e300, -1e300, 1e-12, 709.0, -745.0, 1e154};
  auto numeric = [&](double scale) {
    std::vector<double> v(rows);
    for (auto& x : v) {
      const double r = rng.uniform();
      if (r < 0.2) x = kSpecial[rng.below(std::size(kSpecial))];
      else if (r < 0.3) x = std::round((rng.uniform() - 0.5) * 10.0);
      else x = (rng.uniform() - 0.5) * scale;
    }
    return v;
  };
  std::vector<data::ColumnSchema> schema;
  std::vector<data::Column> cols;
  auto add = [&](std::string name, data::ColumnKind kind, std::vector<double> values) {
    schema.push_back({std::move(name), kind});
    cols.push_back({std::move(values), {}, std::nullopt});
  };
  add("n0", data::ColumnKind::numeric, numeric(10.0));
  add("n1", data::ColumnKind::numeric, numeric(1e6));
  add("n2", data::ColumnKind::numeric, numeric(2.0));
  add("n3", data::ColumnKind::numeric, std::vector<double>(rows, rng.uniform() < 0.5 ? 0.0 : 3.0));
  std::vector<double> cat(rows), flag(rows), t0(rows), t1(rows), y(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    cat[i] = static_cast<double>(rng.below(4)) - (rng.uniform() < 0.05 ? 1.0 : 0.0);  // -1 marks unseen
    flag[i] = static_cast<double>(rng.below(2));
    t0[i] = 1.5e9 + std::floor(rng.uniform() * 3e8);
    t1[i] = t0[i] + std::floor((rng.uniform() - 0.3) * 1e7);
    y[i] = static_cast<double>(rng.below(2));
  }
  schema.push_back({"c0", data::ColumnKind::categorical});
  cols.push_back({cat, {}, data::CategoryEncoder({"a", "b", "c", "d"})});
  add("b0", data::ColumnKind::boolean, flag);
  add("t0", data::ColumnKind::datetime, t0);
  add("t1", data::ColumnKind::datetime, t1);
  add("y", data::ColumnKind::numeric, y);
  return data::Table(std::move(schema), std::move(cols), "y", data::Task::classification);
}

namespace {

const std::vector<std::string> kNumericCols = {"n0", "n1", "n2", "n3", "b0"};
const std::vector<std::string> kKeyCols = {"c0"};
const std::vector<std::string> kTimeCols = {"t0", "t1"};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

double random_literal(Rng& rng) {
  static const double kLits[] = {0.0, 1.0, -1.0, 0.5, 2.0, 1e-9, 1e9, -3.25, 100.0};
  return rng.uniform() < 0.5 ? kLits[rng.below(std::size(kLits))] : std::round((rng.uniform() - 0.5) * 2000.0) / 100.0;
}

}  // namespace

dsl::Expr random_expr(Rng& rng, int depth) {
  if (depth <= 1) {
    const double r = rng.uniform();
    if (r < 0.2) return lit(random_literal(rng));
    if (r < 0.85) return col(pick(rng, kNumericCols));
    if (r < 0.92) return date_part(static_cast<dsl::DatePartKind>(rng.below(5)), pick(rng, kTimeCols));
    return elapsed_days(kTimeCols[1], kTimeCols[0]);
  }
  const int d = depth - 1;
  switch (rng.below(11)) {
    case 0:
    case 1: return unary(static_cast<dsl::UnaryOp>(rng.below(6)), random_expr(rng, d));
    case 2:
    case 3:
    case 4: return binary(static_cast<dsl::BinaryOp>(rng.below(4)), random_expr(rng, d), random_expr(rng, d));
    case 5:
      return if_then_else(static_cast<dsl::CmpOp>(rng.below(5)), random_expr(rng, 1), random_expr(rng, 1),
                          random_expr(rng, d), random_expr(rng, 1));
    case 6: return group_agg(static_cast<dsl::AggOp>(rng.below(5)), pick(rng, kKeyCols), random_expr(rng, d));
    case 7: return bin(random_expr(rng, d), 2 + static_cast<int>(rng.below(31)));
    case 8: {
      double a = random_literal(rng), b = random_literal(rng);
      if (a > b) std::swap(a, b);
      return clip(random_expr(rng, d), a, b);
    }
    case 9: return zscore(random_expr(rng, d));
    default: {
      std::vector<std::string> cols = {pick(rng, kNumericCols)};
      if (rng.uniform() < 0.7) cols.push_back(pick(rng, kNumericCols));
      return cluster(2 + static_cast<int>(rng.below(4)), cols);
    }
  }
}

dsl::Program random_program(Rng& rng, int depth) {
  return {"f" + std::to_string(rng.below(1000)), random_expr(rng, 1 + static_cast<int>(rng.below(depth)))};
}

double brute_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("malmas-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Swaps the operands of every commutative node.
dsl::Expr commute(const dsl::Expr& e) {
  dsl::Expr out = e;
  if (auto* b = std::get_if<dsl::Binary>(&out.node)) {
    dsl::Expr l = commute(*b->lhs), r = commute(*b->rhs);
    if (b->op == dsl::BinaryOp::add || b->op == dsl::BinaryOp::mul) std::swap(l, r);
    b->lhs = l;
    b->rhs = r;
  } else if (auto* u = std::get_if<dsl::Unary>(&out.node)) {
    u->arg = commute(*u->arg);
  } else if (auto* z = std::get_if<dsl::ZScore>(&out.node)) {
    z->arg = commute(*z->arg);
  } else if (auto* c = std::get_if<dsl::Clip>(&out.node)) {
    c->arg = commute(*c->arg);
  } else if (auto* bn = std::get_if<dsl::Bin>(&out.node)) {
    bn->arg = commute(*bn->arg);
  } else if (auto* g = std::get_if<dsl::GroupAgg>(&out.node)) {
    g->value = commute(*g->value);
  } else if (auto* i = std::get_if<dsl::IfThenElse>(&out.node)) {
    i->then_branch = commute(*i->then_branch);
    i->else_branch = commute(*i->else_branch);
  }
  return out;
}


dsl::Expr unfold_literals(const dsl::Expr& e) {
  dsl::Expr out = e;
  if (const auto* l = std::get_if<dsl::Literal>(&out.node)) {
    const double half = l->value * 0.5;
    return dsl::make::binary(dsl::BinaryOp::add, dsl::make::lit(half), dsl::make::lit(half));
  }
  if (auto* b = std::get_if<dsl::Binary>(&out.node)) {
    b->lhs = unfold_literals(*b->lhs);
    b->rhs = unfold_literals(*b->rhs);
  } else if (auto* u = std::get_if<dsl::Unary>(&out.node)) {
    u->arg = unfold_literals(*u->arg);
  } else if (auto* z = std::get_if<dsl::ZScore>(&out.node)) {
    z->arg = unfold_literals(*z->arg);
  } else if (auto* c = std::get_if<dsl::Clip>(&out.node)) {
    c->arg = unfold_literals(*c->arg);
  } else if (auto* bn = std::get_if<dsl::Bin>(&out.node)) {
    bn->arg = unfold_literals(*bn->arg);
  } else if (auto* g = std::get_if<dsl::GroupAgg>(&out.node)) {
    g->value = unfold_literals(*g->value);
  } else if (auto* i = std::get_if<dsl::IfThenElse>(&out.node)) {
    i->lhs = unfold_literals(*i->lhs);
    i->rhs = unfold_literals(*i->rhs);
    i->then_branch = unfold_literals(*i->then_branch);
    i->else_branch = unfold_literals(*i->else_branch);
  }
  return out;
}

}  // namespace malmas::fixture
