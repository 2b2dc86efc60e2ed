#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "malmas/common/rng.hpp"
#include "malmas/data/table.hpp"
#include "malmas/dsl/ast.hpp"

namespace malmas::fixture {

/// Numeric feature columns plus a target column named "y".
data::Table numeric_table(const std::vector<std::string>& names, const std::vector<std::vector<double>>& columns,
                          const std::vector<double>& y, data::Task task = data::Task::classification);

/// Standard normal draws (Box-Muller on Rng::uniform).
std::vector<double> normals(Rng& rng, std::size_t n);

/// x1, x2 and `noise` noise columns n1..; y = 1[x1 * x2 > 0].
data::Table product_table(std::size_t rows, std::uint64_t seed, int noise = 4);

/// x1..x4 and two noise columns; y = 1[x1 * x2 + x3 * x4 > 0].
data::Table two_pair_table(std::size_t rows, std::uint64_t seed);

/// y = 2 * x1 - x2 + small noise, two noise columns. Regression.
data::Table linear_regression_table(std::size_t rows, std::uint64_t seed);

/// Writes the table as CSV and returns the path.
std::filesystem::path write_csv(const data::Table& table, const std::filesystem::path& path);

/// Encoded table with numeric (including extreme magnitudes and zeros),
/// categorical, boolean and datetime columns: n0..n3, c0, b0, t0, t1, y.
data::Table fuzz_table(Rng& rng, std::size_t rows);

/// Random well-typed expression over fuzz_table columns, within the DSL
/// size limits.
dsl::Expr random_expr(Rng& rng, int depth);

/// Random program wrapped around random_expr.
dsl::Program random_program(Rng& rng, int depth = 4);

/// Pairwise AUC: wins + ties/2 over all positive/negative pairs.
double brute_auc(std::span<const double> scores, std::span<const int> labels);

/// Swaps the operands of every commutative node.
dsl::Expr commute(const dsl::Expr& e);

/// Replaces every literal x with (x / 2 + x / 2), which folds back exactly.
dsl::Expr unfold_literals(const dsl::Expr& e);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

}  // namespace malmas::fixture
