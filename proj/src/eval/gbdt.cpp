#include <algorithm>
#include <cmath>
#include <numeric>

#include "malmas/eval/model.hpp"

namespace malmas::eval {

namespace {

constexpr double kMinChildWeight = 1.0;
constexpr double kMinGain = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

double mean_loss(std::span<const double> f, std::span<const double> y, bool logistic) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    total += logistic ? softplus(f[i]) - y[i] * f[i] : 0.5 * (f[i] - y[i]) * (f[i] - y[i]);
  return total / static_cast<double>(std::max<std::size_t>(y.size(), 1));
}

struct Split {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

double score(double g, double h, double lambda) { return g * g / (h + lambda); }

// One level-wise tree over presorted features. Row i belongs to node_of[i].
Gbdt::Tree grow(const Columns& x, const std::vector<std::vector<std::size_t>>& sorted, std::span<const double> g,
                std::span<const double> h, const ModelParams& params, std::vector<int>& node_of) {
  const std::size_t n = g.size();
  Gbdt::Tree tree(1);
  std::fill(node_of.begin(), node_of.end(), 0);
  std::vector<int> frontier{0};

  for (int depth = 0; depth < params.max_depth && !frontier.empty(); ++depth) {
    const std::size_t size = tree.size();
    std::vector<char> active(size, 0);
    for (int node : frontier) active[node] = 1;
    std::vector<double> G(size, 0.0), H(size, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      G[node_of[i]] += g[i];
      H[node_of[i]] += h[i];
    }
    std::vector<Split> best(size);
    std::vector<double> gl(size), hl(size), prev(size);
    std::vector<char> seen(size);
    for (std::size_t j = 0; j < x.size(); ++j) {
      std::fill(gl.begin(), gl.end(), 0.0);
      std::fill(hl.begin(), hl.end(), 0.0);
      std::fill(seen.begin(), seen.end(), 0);
      for (std::size_t i : sorted[j]) {
        const int node = node_of[i];
        if (!active[node]) continue;
        const double v = x[j][i];
        if (seen[node] && v > prev[node] && hl[node] >= kMinChildWeight &&
            H[node] - hl[node] >= kMinChildWeight) {
          const double gain = score(gl[node], hl[node], params.l2) +
                              score(G[node] - gl[node], H[node] - hl[node], params.l2) -
                              score(G[node], H[node], params.l2);
          // Strict comparison: on exact ties the earlier feature and the
          // lower threshold win, so appended duplicate columns never change
          // the tree.
          if (gain > best[node].gain + kMinGain) {
            double t = prev[node] + (v - prev[node]) / 2.0;
            if (!(t >= prev[node] && t < v)) t = prev[node];
            best[node] = {gain, static_cast<int>(j), t};
          }
        }
        gl[node] += g[i];
        hl[node] += h[i];
        prev[node] = v;
        seen[node] = 1;
      }
    }
    std::vector<int> next;
    for (int node : frontier) {
      if (best[node].feature < 0) continue;
      const int left = static_cast<int>(tree.size());
      tree.push_back({});
      tree.push_back({});
      tree[node].feature = best[node].feature;
      tree[node].threshold = best[node].threshold;
      tree[node].left = left;
      tree[node].right = left + 1;
      next.push_back(left);
      next.push_back(left + 1);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto& nd = tree[node_of[i]];
      if (nd.feature >= 0) node_of[i] = x[nd.feature][i] <= nd.threshold ? nd.left : nd.right;
    }
    frontier = std::move(next);
  }

  std::vector<double> G(tree.size(), 0.0), H(tree.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    G[node_of[i]] += g[i];
    H[node_of[i]] += h[i];
  }
  for (std::size_t k = 0; k < tree.size(); ++k)
    if (tree[k].feature < 0) tree[k].weight = -G[k] / (H[k] + params.l2) * params.learning_rate;
  return tree;
}

double walk(const Gbdt::Tree& tree, const Columns& x, std::size_t i) {
  int k = 0;
  while (tree[k].feature >= 0) k = x[tree[k].feature][i] <= tree[k].threshold ? tree[k].left : tree[k].right;
  return tree[k].weight;
}

}  // namespace

Gbdt Gbdt::fit(const Columns& x, std::span<const double> y, bool logistic, const ModelParams& params) {
  Gbdt model;
  model.logistic_ = logistic;
  model.learning_rate_ = params.learning_rate;
  const std::size_t n = y.size();
  if (logistic) {
    double p = n ? std::accumulate(y.begin(), y.end(), 0.0) / n : 0.5;
    p = std::clamp(p, 1e-6, 1.0 - 1e-6);
    model.base_ = std::log(p / (1.0 - p));
  } else {
    model.base_ = n ? std::accumulate(y.begin(), y.end(), 0.0) / n : 0.0;
  }

  std::vector<std::vector<std::size_t>> sorted(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    sorted[j].resize(n);
    std::iota(sorted[j].begin(), sorted[j].end(), 0);
    std::stable_sort(sorted[j].begin(), sorted[j].end(),
                     [&](std::size_t a, std::size_t b) { return x[j][a] < x[j][b]; });
  }

  std::vector<double> f(n, model.base_), g(n), h(n);
  std::vector<int> node_of(n);
  model.loss_history_.push_back(mean_loss(f, y, logistic));
  for (int t = 0; t < params.trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (logistic) {
        const double p = sigmoid(f[i]);
        g[i] = p - y[i];
        h[i] = std::max(p * (1.0 - p), 1e-16);
      } else {
        g[i] = f[i] - y[i];
        h[i] = 1.0;
      }
    }
    Tree tree = grow(x, sorted, g, h, params, node_of);
    for (std::size_t i = 0; i < n; ++i) f[i] += tree[node_of[i]].weight;
    model.trees_.push_back(std::move(tree));
    model.loss_history_.push_back(mean_loss(f, y, logistic));
  }
  return model;
}

std::vector<double> Gbdt::margin(const Columns& x) const {
  const std::size_t n = x.empty() ? 0 : x.front().size();
  std::vector<double> out(n, base_);
  for (const auto& tree : trees_)
    for (std::size_t i = 0; i < n; ++i) out[i] += walk(tree, x, i);
  return out;
}

std::vector<double> Gbdt::predict(const Columns& x) const {
  auto out = margin(x);
  if (logistic_)
    for (double& v : out) v = sigmoid(v);
  return out;
}

Predictions gbdt_fit_predict(const Columns& x, std::span<const double> y, const Columns& x_eval,
                             const Problem& problem, const ModelParams& params) {
  if (problem.task == data::Task::regression) return {Gbdt::fit(x, y, false, params).predict(x_eval)};
  Predictions out;
  const int outputs = problem.outputs();
  for (int c = 0; c < outputs; ++c) {
    const double positive = outputs == 1 ? 1.0 : c;
    std::vector<double> yc(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) yc[i] = y[i] == positive ? 1.0 : 0.0;
    out.push_back(Gbdt::fit(x, yc, true, params).predict(x_eval));
  }
  return out;
}

}  // namespace malmas::eval
