#pragma once

#include <string>

#include "malmas/dsl/ast.hpp"

namespace malmas::dsl {

struct CanonicalKey {
  std::string key;
  auto operator<=>(const CanonicalKey&) const = default;
};

/// S-expression of the body after folding literal-only subtrees and sorting
/// the operands of add, mul and eq. The feature name is not part of the key.
CanonicalKey canonicalize(const Program& program);
CanonicalKey canonicalize(const Expr& expr);

/// The folded and sorted tree whose rendering is the key. Evaluates
/// identically to the input on every table.
Expr normalize(const Expr& expr);

}  // namespace malmas::dsl
