#include "malmas/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "malmas/common/rng.hpp"
#include "malmas/data/preprocess.hpp"

namespace malmas::data {

std::size_t train_size(std::size_t rows, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(rows) + 0.5));
}

std::vector<std::string> target_keys(const Table& table) {
  const Column& col = table.target_column();
  std::vector<std::string> keys;
  keys.reserve(table.row_count());
  if (!col.text.empty()) {
    for (const auto& cell : col.text) keys.push_back(cell ? *cell : std::string(kMissingCategory));
  } else {
    for (double v : col.values) keys.push_back(std::isnan(v) ? std::string(kMissingCategory) : fmt::format("{}", v));
  }
  return keys;
}

namespace {

// Per-class training quotas: largest-remainder allocation of the overall
// training size, then clamped so that classes with >= 2 members keep at least
// one row on each side.
std::map<std::string, std::size_t> class_quotas(const std::map<std::string, std::size_t>& counts,
                                                double fraction, std::size_t n_train,
                                                std::vector<std::string>& warnings) {
  std::map<std::string, std::size_t> quota;
  std::vector<std::pair<double, std::string>> remainders;
  std::size_t assigned = 0;
  for (const auto& [key, count] : counts) {
    const double exact = fraction * static_cast<double>(count);
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quota[key] = base;
    assigned += base;
    remainders.emplace_back(exact - static_cast<double>(base), key);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n_train && i < remainders.size(); ++i, ++assigned) ++quota[remainders[i].second];

  for (auto& [key, q] : quota) {
    const std::size_t count = counts.at(key);
    if (count == 1) {
      warnings.push_back(fmt::format("class '{}' has a single member; placed in train", key));
      q = 1;
    } else {
      q = std::clamp<std::size_t>(q, 1, count - 1);
    }
  }
  // Clamping may move the total; rebalance over classes with slack.
  auto sum = [&] {
    return std::accumulate(quota.begin(), quota.end(), std::size_t{0},
                           [](std::size_t acc, const auto& kv) { return acc + kv.second; });
  };
  for (std::size_t s = sum(); s != n_train;) {
    bool moved = false;
    for (auto& [key, q] : quota) {
      const std::size_t count = counts.at(key);
      if (s > n_train && count > 1 && q > 1) { --q; --s; moved = true; }
      else if (s < n_train && count > 1 && q + 1 < count) { ++q; ++s; moved = true; }
      if (s == n_train) break;
    }
    if (!moved) break;
  }
  return quota;
}

}  // namespace

SplitResult split(const Table& table, const SplitSpec& spec) {
  if (table.row_count() == 0) throw DataError("cannot split an empty table");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
    throw DataError(fmt::format("train_fraction {} outside (0, 1)", spec.train_fraction));

  const std::size_t n = table.row_count();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));

  SplitResult result;
  const std::size_t n_train = train_size(n, spec.train_fraction);
  if (table.task() == Task::classification) {
    const auto keys = target_keys(table);
    std::map<std::string, std::size_t> counts;
    for (const auto& k : keys) ++counts[k];
    auto quota = class_quotas(counts, spec.train_fraction, n_train, result.warnings);
    for (auto row : order) {
      auto& q = quota[keys[row]];
      if (q > 0) {
        --q;
        result.train_rows.push_back(row);
      } else {
        result.test_rows.push_back(row);
      }
    }
  } else {
    result.train_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    result.test_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  }
  result.train = table.select_rows(result.train_rows);
  result.test = table.select_rows(result.test_rows);
  return result;
}

}  // namespace malmas::data
