#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "malmas/data/table.hpp"

namespace malmas::eval {

struct FoldPlan {
  std::vector<int> fold_of;  // per row, in [0, k)
  int k = 0;
  std::vector<std::string> warnings;

  /// FNV-1a over fold_of; equal hashes mean paired evaluations.
  std::uint64_t hash() const;
};

/// Seeded k-fold assignment. Classification targets (class ids 0..C-1) are
/// stratified: classes in ascending order, rows of each class shuffled with
/// one Rng(seed) stream, and fold = running counter % k across all classes.
/// k is reduced to the smallest class size (never below 2) with a warning so
/// every fold sees every class. Regression shuffles all rows once and uses
/// position % k.
FoldPlan make_folds(std::span<const double> target, data::Task task, int k, std::uint64_t seed);

}  // namespace malmas::eval
