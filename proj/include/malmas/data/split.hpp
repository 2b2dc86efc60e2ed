#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "malmas/data/table.hpp"

namespace malmas::data {

struct SplitSpec {
  double train_fraction = 0.6;
  std::uint64_t seed = 0;
  int folds = 5;
};

struct SplitResult {
  Table train;
  Table test;
  std::vector<std::size_t> train_rows;  // indices into the input table, shuffled order
  std::vector<std::size_t> test_rows;
  std::vector<std::string> warnings;
};

/// Number of training rows: round-half-up of fraction * rows.
std::size_t train_size(std::size_t rows, double fraction);

/// Deterministic shuffled split. Classification tables are stratified on the
/// target: every class with at least two members lands in both halves, and a
/// singleton class goes to train with a warning.
SplitResult split(const Table& table, const SplitSpec& spec);

/// Class key of each row's target, used for stratification.
std::vector<std::string> target_keys(const Table& table);

}  // namespace malmas::data
