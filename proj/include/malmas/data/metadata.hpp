#pragma once

#include <string>

#include "malmas/data/table.hpp"

namespace malmas::data {

/// Human-readable dataset description used in agent prompts. The output is a
/// pure function of the table:
///
///   task=classification rows=1000 columns=7 target=y
///   - x1: numeric, distinct=1000, missing=0, min=-1.99, max=1.99, mean=0.0123
///   - job: categorical, distinct=3, missing=0, top=[a:10, b:4, NA:1]
std::string metadata_text(const Table& table);

}  // namespace malmas::data
