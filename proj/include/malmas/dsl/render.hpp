#pragma once

#include <string>

#include "malmas/dsl/ast.hpp"

namespace malmas::dsl {

/// Concrete syntax accepted by parse(): infix for + - * /, function calls for
/// every named op, col("...") for column references, and parenthesized
/// `(if ... then ... else ...)`. parse(render(p)) == p.
std::string render(const Program& program);
std::string render(const Expr& expr);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

}  // namespace malmas::dsl
