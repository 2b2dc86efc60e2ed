#include <cmath>

#include "malmas/eval/model.hpp"

namespace malmas::eval {

namespace {

struct Scaled {
  std::vector<std::vector<double>> train, eval;
};

Scaled standardize(const Columns& x, const Columns& x_eval) {
  Scaled s;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto col = x[j];
    double mean = 0;
    for (double v : col) mean += v;
    mean /= std::max<std::size_t>(col.size(), 1);
    double ss = 0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / std::max<std::size_t>(col.size(), 1));
    auto scale = [&](std::span<const double> in) {
      std::vector<double> out(in.size(), 0.0);
      if (sd >= 1e-12)
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = (in[i] - mean) / sd;
      return out;
    };
    s.train.push_back(scale(col));
    s.eval.push_back(scale(x_eval[j]));
  }
  return s;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Gradient descent on mean loss + l2/2 |w|^2; the bias is not penalized.
std::vector<double> train(const std::vector<std::vector<double>>& x, std::span<const double> y, bool logistic,
                          double l2, int iterations, double step) {
  const std::size_t n = y.size(), d = x.size();
  std::vector<double> w(d + 1, 0.0), z(n), g(d + 1);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = w[d];
      for (std::size_t j = 0; j < d; ++j) s += w[j] * x[j][i];
      z[i] = (logistic ? sigmoid(s) : s) - y[i];
    }
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) g[j] += z[i] * x[j][i];
      g[j] = g[j] / n + l2 * w[j];
    }
    for (std::size_t i = 0; i < n; ++i) g[d] += z[i];
    g[d] /= n;
    for (std::size_t j = 0; j <= d; ++j) w[j] -= step * g[j];
  }
  return w;
}

std::vector<double> score(const std::vector<std::vector<double>>& x, const std::vector<double>& w, bool logistic,
                          std::size_t n) {
  const std::size_t d = x.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = w[d];
    for (std::size_t j = 0; j < d; ++j) s += w[j] * x[j][i];
    out[i] = logistic ? sigmoid(s) : s;
  }
  return out;
}

}  // namespace

Predictions logreg_fit_predict(const Columns& x, std::span<const double> y, const Columns& x_eval,
                               const Problem& problem, const ModelParams& params, int iterations, double step) {
  const Scaled s = standardize(x, x_eval);
  const std::size_t n_eval = x_eval.empty() ? 0 : x_eval.front().size();
  if (problem.task == data::Task::regression) {
    const auto w = train(s.train, y, false, params.l2, iterations, step);
    return {score(s.eval, w, false, n_eval)};
  }
  Predictions out;
  const int outputs = problem.outputs();
  for (int c = 0; c < outputs; ++c) {
    const double positive = outputs == 1 ? 1.0 : c;
    std::vector<double> yc(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yc[i] = y[i] == positive ? 1.0 : 0.0;
    const auto w = train(s.train, yc, true, params.l2, iterations, step);
    out.push_back(score(s.eval, w, true, n_eval));
  }
  return out;
}

}  // namespace malmas::eval
