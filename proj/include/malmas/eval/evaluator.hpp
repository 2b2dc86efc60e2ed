#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "malmas/data/table.hpp"
#include "malmas/eval/external.hpp"
#include "malmas/eval/folds.hpp"
#include "malmas/eval/metrics.hpp"
#include "malmas/eval/model.hpp"

namespace malmas::eval {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric design matrix plus target, ready for a model.
struct Dataset {
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<double> target;
  Problem problem;

  std::size_t rows() const { return target.size(); }
  Dataset with_column(std::string name, std::vector<double> values) const;
};

/// Features are the encoded non-target columns in schema order; the target
/// must already hold class ids (classification) or numbers (regression).
Dataset to_dataset(const data::Table& table);

struct CvResult {
  double value = 0.0;
  std::vector<double> fold_values;  // NaN for a fold where the metric is undefined
  int k = 0;
  std::uint64_t fold_hash = 0;
  std::vector<std::string> warnings;
};

struct EvalReport {
  std::string feature_name;
  Metric metric = Metric::auc;
  double baseline = 0.0;
  double value = 0.0;
  double gain = 0.0;
  bool effective = false;
  bool duplicate = false;  // scored by the exact-duplicate guard, not trained
  std::uint64_t fold_hash = 0;

  nlohmann::json to_json() const;
};

/// gain = value - baseline when maximizing, baseline - value when minimizing.
double gain_of(Metric metric, double baseline, double value);

/// Metric on one evaluation split; throws MetricError when undefined there
/// (single-class AUC, constant-target NRMSE).
double score(Metric metric, const Problem& problem, const Predictions& predictions, std::span<const double> truth);

/// Seeded k-fold CV. Thread-safe: distinct calls may run concurrently. The
/// external channel, when present, is shared and pipelined.
class Evaluator {
 public:
  Evaluator(ModelSpec model, Metric metric, int folds, std::uint64_t seed,
            std::shared_ptr<ExternalEvaluator> external = nullptr);

  CvResult train_eval(const Dataset& data) const;

  /// Evaluates base + candidate with the same folds as `baseline`.
  EvalReport marginal_gain(const Dataset& base, const CvResult& baseline, const std::string& name,
                           std::span<const double> candidate) const;

  /// Fits on all of `train` and scores `test` once.
  struct Holdout {
    double value = 0.0;
    std::string model;  // which model produced the value
    std::string note;   // non-empty when the external adapter fell back
  };
  Holdout holdout(const Dataset& train, const Dataset& test) const;

  const ModelSpec& model() const { return model_; }
  Metric metric() const { return metric_; }
  int folds() const { return folds_; }
  std::uint64_t seed() const { return seed_; }

 private:
  CvResult builtin_cv(const Dataset& data, const FoldPlan& plan) const;
  CvResult external_cv(const Dataset& data, const FoldPlan& plan) const;

  ModelSpec model_;
  Metric metric_;
  int folds_;
  std::uint64_t seed_;
  std::shared_ptr<ExternalEvaluator> external_;
};

/// One-shot form of Evaluator::train_eval.
double train_eval(const Dataset& data, const ModelSpec& model, Metric metric, int folds, std::uint64_t seed,
                  std::shared_ptr<ExternalEvaluator> external = nullptr);

/// JSON-lines request body (without id) for the external adapter.
nlohmann::json external_request(const Dataset& data, Metric metric, int folds, std::uint64_t seed,
                                const ModelParams& params);

}  // namespace malmas::eval
