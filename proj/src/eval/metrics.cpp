#include "malmas/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace malmas::eval {

Direction direction(Metric metric) { return metric == Metric::nrmse ? Direction::minimize : Direction::maximize; }

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::auc: return "auc";
    case Metric::accuracy: return "accuracy";
    case Metric::nrmse: return "nrmse";
  }
  return "auc";
}

Metric parse_metric(std::string_view text) {
  if (text == "auc") return Metric::auc;
  if (text == "accuracy") return Metric::accuracy;
  if (text == "nrmse") return Metric::nrmse;
  throw MetricError(fmt::format("unknown metric \"{}\"", text));
}

namespace {

// 1-based average ranks, ascending.
std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw MetricError("auc: scores and labels differ in length");
  double pos = 0, neg = 0;
  for (int y : labels) (y == 1 ? pos : neg) += 1;
  if (pos == 0 || neg == 0) throw MetricError("auc: both classes must be present");
  const auto ranks = average_ranks(scores);
  double rank_sum = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) rank_sum += ranks[i];
  return (rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

double accuracy(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size() || actual.empty()) throw MetricError("accuracy: bad input lengths");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) hits += predicted[i] == actual[i];
  return static_cast<double>(hits) / static_cast<double>(actual.size());
}

double nrmse(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size() || targets.size() < 2) throw MetricError("nrmse: bad input lengths");
  const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
  const double range = *hi - *lo;
  if (!(range > 0)) throw MetricError("nrmse: constant targets");
  double ss = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) ss += (predictions[i] - targets[i]) * (predictions[i] - targets[i]);
  return std::sqrt(ss / static_cast<double>(targets.size())) / range;
}

MeanRank mean_rank(const std::vector<std::vector<double>>& values, Direction dir) {
  if (values.empty() || values.front().empty()) throw MetricError("mean_rank: empty matrix");
  const std::size_t methods = values.front().size();
  std::vector<double> sum(methods, 0.0);
  std::vector<int> count(methods, 0);
  MeanRank out;
  for (std::size_t d = 0; d < values.size(); ++d) {
    if (values[d].size() != methods) throw MetricError("mean_rank: ragged matrix");
    std::vector<double> present;
    std::vector<std::size_t> which;
    for (std::size_t m = 0; m < methods; ++m) {
      if (std::isnan(values[d][m])) {
        out.notes.push_back(fmt::format("dataset {} method {}: missing, excluded", d, m));
        continue;
      }
      // Ranking ascending, so flip maximize metrics: best gets rank 1.
      present.push_back(dir == Direction::maximize ? -values[d][m] : values[d][m]);
      which.push_back(m);
    }
    const auto ranks = average_ranks(present);
    for (std::size_t i = 0; i < which.size(); ++i) {
      sum[which[i]] += ranks[i];
      ++count[which[i]];
    }
  }
  for (std::size_t m = 0; m < methods; ++m)
    out.means.push_back(count[m] ? sum[m] / count[m] : std::nan(""));
  return out;
}

}  // namespace malmas::eval
