#include "malmas/eval/evaluator.hpp"

#include <cmath>
#include <cstring>

#include <fmt/format.h>

namespace malmas::eval {

Dataset Dataset::with_column(std::string name, std::vector<double> values) const {
  Dataset out = *this;
  out.names.push_back(std::move(name));
  out.columns.push_back(std::move(values));
  return out;
}

Dataset to_dataset(const data::Table& table) {
  if (!table.encoded()) throw EvalError("table must be preprocessed before evaluation");
  Dataset d;
  d.problem.task = table.task();
  for (const auto& s : table.feature_schema()) {
    d.names.push_back(s.name);
    d.columns.push_back(table.column(s.name).values);
  }
  d.target = table.target_column().values;
  if (table.task() == data::Task::classification) {
    double top = 0;
    for (double v : d.target) {
      if (v < 0 || v != std::floor(v)) throw EvalError("classification target must hold class ids");
      top = std::max(top, v);
    }
    d.problem.classes = static_cast<int>(top) + 1;
  }
  return d;
}

nlohmann::json EvalReport::to_json() const {
  return {{"feature_name", feature_name}, {"metric", to_string(metric)}, {"baseline", baseline},
          {"value", value},               {"gain", gain},                 {"effective", effective},
          {"duplicate", duplicate},       {"fold_hash", fmt::format("{:016x}", fold_hash)}};
}

double gain_of(Metric metric, double baseline, double value) {
  return direction(metric) == Direction::maximize ? value - baseline : baseline - value;
}

double score(Metric metric, const Problem& problem, const Predictions& pred, std::span<const double> truth) {
  const std::size_t n = truth.size();
  if (metric == Metric::nrmse) {
    if (problem.task != data::Task::regression) throw MetricError("nrmse needs a regression task");
    return nrmse(pred.front(), truth);
  }
  if (problem.task != data::Task::classification)
    throw MetricError(fmt::format("{} needs a classification task", to_string(metric)));
  if (metric == Metric::accuracy) {
    std::vector<int> predicted(n), actual(n);
    for (std::size_t i = 0; i < n; ++i) {
      actual[i] = static_cast<int>(truth[i]);
      if (pred.size() == 1) {
        predicted[i] = pred[0][i] > 0.5 ? 1 : 0;
      } else {
        int best = 0;
        for (std::size_t c = 1; c < pred.size(); ++c)
          if (pred[c][i] > pred[best][i]) best = static_cast<int>(c);
        predicted[i] = best;
      }
    }
    return accuracy(predicted, actual);
  }
  // AUC: binary directly, multiclass as the macro mean over one-vs-rest
  // problems that have both classes in this split.
  std::vector<int> labels(n);
  if (pred.size() == 1) {
    for (std::size_t i = 0; i < n; ++i) labels[i] = truth[i] == 1.0;
    return auc(pred[0], labels);
  }
  double total = 0;
  int used = 0;
  for (std::size_t c = 0; c < pred.size(); ++c) {
    bool pos = false, neg = false;
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = truth[i] == static_cast<double>(c);
      (labels[i] ? pos : neg) = true;
    }
    if (!pos || !neg) continue;
    total += auc(pred[c], labels);
    ++used;
  }
  if (used == 0) throw MetricError("auc: no class has both positives and negatives");
  return total / used;
}

Evaluator::Evaluator(ModelSpec model, Metric metric, int folds, std::uint64_t seed,
                     std::shared_ptr<ExternalEvaluator> external)
    : model_(std::move(model)), metric_(metric), folds_(folds), seed_(seed), external_(std::move(external)) {
  if (model_.kind == ModelKind::external && !external_)
    external_ = std::make_shared<ExternalEvaluator>(model_.external_cmd);
}

namespace {

// Models need at least one column; a feature-less base becomes a constant.
Columns views(const Dataset& data, std::vector<double>& storage) {
  Columns out;
  for (const auto& c : data.columns) out.emplace_back(c);
  if (out.empty()) {
    storage.assign(data.rows(), 0.0);
    out.emplace_back(storage);
  }
  return out;
}

}  // namespace

CvResult Evaluator::builtin_cv(const Dataset& data, const FoldPlan& plan) const {
  std::vector<double> storage;
  const Columns all = views(data, storage);
  CvResult out;
  out.k = plan.k;
  out.fold_hash = plan.hash();
  out.warnings = plan.warnings;
  double total = 0;
  int used = 0;
  for (int f = 0; f < plan.k; ++f) {
    std::vector<std::size_t> tr, va;
    for (std::size_t i = 0; i < data.rows(); ++i) (plan.fold_of[i] == f ? va : tr).push_back(i);
    std::vector<std::vector<double>> xtr(all.size()), xva(all.size());
    for (std::size_t j = 0; j < all.size(); ++j) {
      for (std::size_t i : tr) xtr[j].push_back(all[j][i]);
      for (std::size_t i : va) xva[j].push_back(all[j][i]);
    }
    std::vector<double> ytr, yva;
    for (std::size_t i : tr) ytr.push_back(data.target[i]);
    for (std::size_t i : va) yva.push_back(data.target[i]);
    Columns vtr(xtr.begin(), xtr.end()), vva(xva.begin(), xva.end());
    const Predictions pred = builtin_fit_predict(model_.kind, vtr, ytr, vva, data.problem, model_.params);
    double v = std::nan("");
    try {
      v = score(metric_, data.problem, pred, yva);
      total += v;
      ++used;
    } catch (const MetricError& e) {
      out.warnings.push_back(fmt::format("fold {}: {}", f, e.what()));
    }
    out.fold_values.push_back(v);
  }
  if (used == 0) throw EvalError(fmt::format("{} is undefined on every fold", to_string(metric_)));
  out.value = total / used;
  return out;
}

nlohmann::json external_request(const Dataset& data, Metric metric, int folds, std::uint64_t seed,
                                const ModelParams& params) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < data.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : data.columns) row.push_back(c[i]);
    rows.push_back(std::move(row));
  }
  return {{"op", "evaluate"},
          {"task", std::string(data::to_string(data.problem.task))},
          {"metric", std::string(to_string(metric))},
          {"columns", data.names},
          {"rows", std::move(rows)},
          {"target", data.target},
          {"folds", folds},
          {"seed", seed},
          {"model", {{"trees", params.trees}, {"learning_rate", params.learning_rate}}}};
}

CvResult Evaluator::external_cv(const Dataset& data, const FoldPlan& plan) const {
  CvResult out;
  out.k = plan.k;
  out.fold_hash = plan.hash();
  out.warnings = plan.warnings;
  out.value = external_->call(external_request(data, metric_, plan.k, seed_, model_.params));
  if (!std::isfinite(out.value)) throw ExternalError(ExternalError::Kind::protocol, "adapter returned a non-finite value");
  return out;
}

CvResult Evaluator::train_eval(const Dataset& data) const {
  if (data.rows() < 2) throw EvalError("need at least two rows to cross-validate");
  const FoldPlan plan = make_folds(data.target, data.problem.task, folds_, seed_);
  return model_.kind == ModelKind::external ? external_cv(data, plan) : builtin_cv(data, plan);
}

EvalReport Evaluator::marginal_gain(const Dataset& base, const CvResult& baseline, const std::string& name,
                                    std::span<const double> candidate) const {
  if (candidate.size() != base.rows()) throw EvalError("candidate column has the wrong length");
  EvalReport report;
  report.feature_name = name;
  report.metric = metric_;
  report.baseline = baseline.value;
  report.fold_hash = baseline.fold_hash;
  for (const auto& c : base.columns) {
    if (std::memcmp(c.data(), candidate.data(), c.size() * sizeof(double)) == 0) {
      report.value = baseline.value;
      report.duplicate = true;
      return report;
    }
  }
  const CvResult cv = train_eval(base.with_column(name, {candidate.begin(), candidate.end()}));
  if (cv.fold_hash != baseline.fold_hash) throw std::logic_error("candidate and baseline folds differ");
  report.value = cv.value;
  report.gain = gain_of(metric_, baseline.value, cv.value);
  report.effective = report.gain > 0;
  return report;
}

Evaluator::Holdout Evaluator::holdout(const Dataset& train, const Dataset& test) const {
  Holdout out;
  ModelSpec fitted = model_;
  if (model_.kind == ModelKind::external) {
    auto request = external_request(train, metric_, folds_, seed_, model_.params);
    request["op"] = "holdout";
    nlohmann::json test_rows = nlohmann::json::array();
    for (std::size_t i = 0; i < test.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (const auto& c : test.columns) row.push_back(c[i]);
      test_rows.push_back(std::move(row));
    }
    request["test_rows"] = std::move(test_rows);
    request["test_target"] = test.target;
    try {
      out.value = external_->call(std::move(request));
      out.model = "external";
      return out;
    } catch (const ExternalError& e) {
      if (e.kind() != ExternalError::Kind::adapter) throw;
      out.note = fmt::format("adapter has no holdout op ({}); scored with builtin-gbdt", e.what());
      fitted = ModelSpec::builtin_gbdt();
    }
  }
  std::vector<double> s1, s2;
  const Columns xtr = views(train, s1), xte = views(test, s2);
  const Predictions pred = builtin_fit_predict(fitted.kind, xtr, train.target, xte, train.problem, fitted.params);
  out.value = score(metric_, train.problem, pred, test.target);
  out.model = std::string(to_string(fitted.kind));
  return out;
}

double train_eval(const Dataset& data, const ModelSpec& model, Metric metric, int folds, std::uint64_t seed,
                  std::shared_ptr<ExternalEvaluator> external) {
  return Evaluator(model, metric, folds, seed, std::move(external)).train_eval(data).value;
}

}  // namespace malmas::eval
