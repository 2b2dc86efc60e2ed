#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "malmas/data/table.hpp"

namespace malmas::eval {

enum class ModelKind { builtin_logreg, builtin_gbdt, external };

std::string_view to_string(ModelKind kind);

struct ModelParams {
  int trees = 100;
  double learning_rate = 0.1;
  int max_depth = 3;
  double l2 = 1.0;  // leaf-weight lambda for gbdt, weight penalty for logreg

  bool operator==(const ModelParams&) const = default;
};

struct ModelSpec {
  ModelKind kind = ModelKind::builtin_gbdt;
  ModelParams params;
  std::string external_cmd;

  static ModelSpec builtin_gbdt();
  static ModelSpec builtin_logreg();
  /// 500 trees at 0.02, or 50 trees when `simple` is set.
  static ModelSpec external(std::string cmd, bool simple = false);

  bool operator==(const ModelSpec&) const = default;
};

/// What the model is asked to predict. Classification targets hold class ids.
struct Problem {
  data::Task task = data::Task::classification;
  int classes = 2;  // ignored for regression

  /// One output for binary and regression, one per class otherwise.
  int outputs() const { return task == data::Task::classification && classes > 2 ? classes : 1; }
};

/// Column-major views; every column has the same length.
using Columns = std::vector<std::span<const double>>;

/// Per output, one value per row: P(class 1 | x) for binary, P(class c | x)
/// (one-vs-rest) for multiclass, the prediction for regression.
using Predictions = std::vector<std::vector<double>>;

/// L2-regularized logistic regression by full-batch gradient descent on
/// z-scored features (statistics from `x`). Regression fits ridge least
/// squares the same way.
Predictions logreg_fit_predict(const Columns& x, std::span<const double> y, const Columns& x_eval,
                               const Problem& problem, const ModelParams& params, int iterations = 500,
                               double step = 0.1);

/// Boosted regression trees with second-order (Newton) leaf weights.
class Gbdt {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double weight = 0.0;
  };
  using Tree = std::vector<Node>;

  /// Binary logistic loss when `logistic`, squared loss otherwise. y is 0/1
  /// for logistic.
  static Gbdt fit(const Columns& x, std::span<const double> y, bool logistic, const ModelParams& params);

  /// Raw margin (log-odds for logistic).
  std::vector<double> margin(const Columns& x) const;
  std::vector<double> predict(const Columns& x) const;

  /// Mean training loss after 0, 1, ..., trees boosting steps.
  const std::vector<double>& loss_history() const { return loss_history_; }
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  bool logistic_ = true;
  double base_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<Tree> trees_;
  std::vector<double> loss_history_;
};

Predictions gbdt_fit_predict(const Columns& x, std::span<const double> y, const Columns& x_eval,
                             const Problem& problem, const ModelParams& params);

Predictions builtin_fit_predict(ModelKind kind, const Columns& x, std::span<const double> y,
                                const Columns& x_eval, const Problem& problem, const ModelParams& params);

}  // namespace malmas::eval
