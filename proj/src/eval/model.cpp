#include "malmas/eval/model.hpp"

#include <stdexcept>

namespace malmas::eval {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::builtin_logreg: return "builtin-logreg";
    case ModelKind::builtin_gbdt: return "builtin-gbdt";
    case ModelKind::external: return "external";
  }
  return "builtin-gbdt";
}

ModelSpec ModelSpec::builtin_gbdt() { return {}; }

ModelSpec ModelSpec::builtin_logreg() {
  ModelSpec spec;
  spec.kind = ModelKind::builtin_logreg;
  spec.params.l2 = 1e-3;
  return spec;
}

ModelSpec ModelSpec::external(std::string cmd, bool simple) {
  ModelSpec spec;
  spec.kind = ModelKind::external;
  spec.params.trees = simple ? 50 : 500;
  spec.params.learning_rate = 0.02;
  spec.external_cmd = std::move(cmd);
  return spec;
}

Predictions builtin_fit_predict(ModelKind kind, const Columns& x, std::span<const double> y,
                                const Columns& x_eval, const Problem& problem, const ModelParams& params) {
  switch (kind) {
    case ModelKind::builtin_logreg: return logreg_fit_predict(x, y, x_eval, problem, params);
    case ModelKind::builtin_gbdt: return gbdt_fit_predict(x, y, x_eval, problem, params);
    case ModelKind::external: break;
  }
  throw std::invalid_argument("external models are fitted by the adapter");
}

}  // namespace malmas::eval
