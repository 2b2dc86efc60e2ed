#pragma once

#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "malmas/data/table.hpp"
#include "malmas/dsl/ast.hpp"

namespace malmas::dsl {

struct Diagnostic {
  enum class Code { unknown_column, kind_mismatch };
  Code code;
  std::string column;
  std::size_t offset = 0;
  std::string message;
};

class TypeError : public std::runtime_error {
 public:
  explicit TypeError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// A program whose column references were resolved against a schema.
struct TypedProgram {
  Program program;
  std::vector<std::string> base_columns;  // first-appearance order
  std::set<std::string> ops;
};

/// All typing problems, in source order. Empty means well-typed.
std::vector<Diagnostic> check(const Program& program, std::span<const data::ColumnSchema> schema);

/// Throws TypeError when check() reports anything.
TypedProgram typecheck(const Program& program, std::span<const data::ColumnSchema> schema);

}  // namespace malmas::dsl
