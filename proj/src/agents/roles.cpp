#include "malmas/agents/roles.hpp"

namespace malmas::agents {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::unary: return "unary";
    case Role::cross: return "cross";
    case Role::temporal: return "temporal";
    case Role::aggregation: return "aggregation";
    case Role::local_transform: return "local_transform";
    case Role::local_pattern: return "local_pattern";
  }
  return "unary";
}

std::optional<Role> parse_role(std::string_view text) {
  for (Role r : kAllRoles)
    if (to_string(r) == text) return r;
  return std::nullopt;
}

const std::set<std::string>& allowed_ops(Role role) {
  static const std::set<std::string> unary{"neg", "abs", "sq", "sqrt_s", "log_s", "recip_s", "zscore"};
  static const std::set<std::string> cross{"add", "sub", "mul", "div_s", "if_then_else"};
  static const std::set<std::string> temporal{"date_part", "elapsed_days"};
  static const std::set<std::string> aggregation{"group_agg"};
  static const std::set<std::string> local_transform{"bin", "clip", "zscore"};
  static const std::set<std::string> local_pattern{"cluster", "if_then_else"};
  switch (role) {
    case Role::unary: return unary;
    case Role::cross: return cross;
    case Role::temporal: return temporal;
    case Role::aggregation: return aggregation;
    case Role::local_transform: return local_transform;
    case Role::local_pattern: return local_pattern;
  }
  return unary;
}

}  // namespace malmas::agents
