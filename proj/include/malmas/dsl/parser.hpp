#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include "malmas/dsl/ast.hpp"

namespace malmas::dsl {

enum class ParseErrorKind { lexical, syntax, limit };

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, std::size_t offset, std::string message);

  ParseErrorKind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }
  const std::string& detail() const { return detail_; }

 private:
  ParseErrorKind kind_;
  std::size_t offset_;
  std::string detail_;
};

/// Parses `FEATURE <name> = <expr>`.
///
///   expr    := term (('+' | '-') term)*
///   term    := factor (('*' | '/') factor)*
///   factor  := '-' NUMBER | '-' factor | primary
///   primary := NUMBER | '(' expr ')' | colref | call
///            | 'if' expr CMP expr 'then' expr 'else' expr
///   colref  := 'col' '(' STRING ')' | IDENT
///   CMP     := '<' | '<=' | '>' | '>=' | '=='
///
/// Calls: neg abs sq sqrt_s log_s recip_s zscore (expr); add sub mul div_s
/// (expr, expr); bin(expr, INT); clip(expr, NUM, NUM);
/// group_agg(AGG, [key=]colref, [value=]expr); cluster(INT, colref, ...);
/// date_part(PART, colref); elapsed_days(colref, colref).
/// Op and keyword names are case-insensitive; column names are not.
Program parse(std::string_view text);

/// Parses a bare expression (no FEATURE header).
Expr parse_expr(std::string_view text);

}  // namespace malmas::dsl
