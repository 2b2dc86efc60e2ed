#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace malmas::eval {

enum class Metric { auc, accuracy, nrmse };
enum class Direction { maximize, minimize };

Direction direction(Metric metric);
std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Rank-based AUC (average ranks for ties). labels are 0/1. Throws
/// MetricError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Fraction of exact matches.
double accuracy(std::span<const int> predicted, std::span<const int> actual);

/// RMSE divided by max(targets) - min(targets). Throws MetricError for
/// constant targets or fewer than two values.
double nrmse(std::span<const double> predictions, std::span<const double> targets);

struct MeanRank {
  std::vector<double> means;       // per method; NaN if the method has no entries
  std::vector<std::string> notes;  // one per excluded entry
};

/// values[dataset][method]. Per dataset the methods are ranked with 1 = best
/// and ties sharing their average rank; NaN entries are left out of that
/// dataset's ranking. Throws MetricError for an empty matrix.
MeanRank mean_rank(const std::vector<std::vector<double>>& values, Direction direction);

}  // namespace malmas::eval
