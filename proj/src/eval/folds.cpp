#include "malmas/eval/folds.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "malmas/common/rng.hpp"

namespace malmas::eval {

std::uint64_t FoldPlan::hash() const {
  std::string bytes;
  bytes.reserve(fold_of.size() + 8);
  bytes += fmt::format("{}:", k);
  for (int f : fold_of) bytes.push_back(static_cast<char>(f));
  return fnv1a(bytes);
}

FoldPlan make_folds(std::span<const double> target, data::Task task, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("folds must be >= 2");
  FoldPlan plan;
  plan.fold_of.assign(target.size(), 0);
  Rng rng(seed);

  if (task == data::Task::regression) {
    plan.k = std::min<int>(k, std::max<int>(2, static_cast<int>(target.size())));
    std::vector<std::size_t> order(target.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    for (std::size_t i = 0; i < order.size(); ++i) plan.fold_of[order[i]] = static_cast<int>(i % plan.k);
    return plan;
  }

  std::map<double, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < target.size(); ++i) by_class[target[i]].push_back(i);
  std::size_t smallest = target.size();
  for (const auto& [c, rows] : by_class) smallest = std::min(smallest, rows.size());
  plan.k = std::max(2, std::min(k, static_cast<int>(smallest)));
  if (plan.k < k)
    plan.warnings.push_back(fmt::format("smallest class has {} rows; using {} folds instead of {}", smallest, plan.k, k));

  std::size_t counter = 0;
  for (auto& [c, rows] : by_class) {
    rng.shuffle(std::span(rows));
    for (std::size_t r : rows) plan.fold_of[r] = static_cast<int>(counter++ % plan.k);
  }
  return plan;
}

}  // namespace malmas::eval
