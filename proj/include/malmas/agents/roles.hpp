#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace malmas::agents {

enum class Role { unary, cross, temporal, aggregation, local_transform, local_pattern };

inline constexpr std::array<Role, 6> kAllRoles{Role::unary,       Role::cross,           Role::temporal,
                                               Role::aggregation, Role::local_transform, Role::local_pattern};

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

/// DSL op names a role may use. Every op in a proposal must come from this
/// set and at least one must appear.
const std::set<std::string>& allowed_ops(Role role);

}  // namespace malmas::agents
