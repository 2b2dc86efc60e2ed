#include "malmas/dsl/interpreter.hpp"

#include <cmath>

#include <fmt/format.h>

#include "malmas/common/overloaded.hpp"
#include "malmas/common/rng.hpp"
#include "malmas/data/datetime.hpp"
#include "malmas/dsl/kmeans.hpp"
#include "malmas/dsl/render.hpp"
#include "malmas/dsl/scalar.hpp"
#include "malmas/kernels/dispatch.hpp"

namespace malmas::dsl {

namespace {

using Column = std::vector<double>;

ZScoreStats fit_scaling(std::span<const double> x, kernels::Policy policy) {
  if (x.empty()) return {};
  const auto mm = kernels::minmax(x, policy);
  const double n = static_cast<double>(x.size());
  const double mean = kernels::sum(x, policy) / n;
  if (mm.min == mm.max) return {mean, 0.0};
  double sd = std::sqrt(kernels::sum_squared_deviation(x, mean, policy) / n);
  if (!(sd >= scalar::kStdEpsilon) || !std::isfinite(sd)) sd = 0.0;
  return {scalar::finite_or_zero(mean), sd};
}

void apply_scaling(std::span<const double> x, const ZScoreStats& s, std::span<double> out, kernels::Policy policy) {
  if (s.stddev == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  kernels::transform(
      x, out, [mean = s.mean, sd = s.stddev](double v) { return scalar::finite_or_zero((v - mean) / sd); }, policy);
}

double aggregate(AggOp agg, std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  switch (agg) {
    case AggOp::count: return n;
    case AggOp::min: return *std::min_element(values.begin(), values.end());
    case AggOp::max: return *std::max_element(values.begin(), values.end());
    case AggOp::mean:
    case AggOp::std: {
      double sum = 0.0;
      for (double v : values) sum += v;
      const double mean = sum / n;
      if (agg == AggOp::mean) return scalar::finite_or_zero(mean);
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      return scalar::finite_or_zero(std::sqrt(ss / n));
    }
  }
  return 0.0;
}

class Interpreter {
 public:
  enum class Mode { fit, apply };

  Interpreter(const data::Table& table, Mode mode, std::vector<NodeStats>& stats, std::uint64_t seed,
              kernels::Policy policy)
      : table_(table), mode_(mode), stats_(stats), seed_(seed), policy_(policy), n_(table.row_count()) {}

  Column eval(const Expr& e) {
    return std::visit(Overloaded{
                          [&](const Literal& n) { return Column(n_, scalar::finite_or_zero(n.value)); },
                          [&](const ColumnRef& n) { return column(n.name); },
                          [&](const Unary& n) { return unary(n); },
                          [&](const Binary& n) { return binary(n); },
                          [&](const IfThenElse& n) { return conditional(n); },
                          [&](const GroupAgg& n) { return group(n); },
                          [&](const Bin& n) { return bin(n); },
                          [&](const Clip& n) { return clip(n); },
                          [&](const ZScore& n) { return zscore(n); },
                          [&](const Cluster& n) { return cluster(n); },
                          [&](const DatePart& n) { return date_part(n); },
                          [&](const ElapsedDays& n) { return elapsed(n); },
                      },
                      e.node);
  }

 private:
  // Stateful nodes reserve their slot on entry (pre-order), so fit and apply
  // agree on indices regardless of what the children do.
  std::size_t reserve_slot() {
    const std::size_t slot = next_slot_++;
    if (mode_ == Mode::fit && stats_.size() <= slot) stats_.resize(slot + 1);
    if (mode_ == Mode::apply && slot >= stats_.size())
      throw std::logic_error("fitted statistics do not match program shape");
    return slot;
  }

  template <typename T>
  const T& stats_at(std::size_t slot) const {
    const T* s = std::get_if<T>(&stats_[slot]);
    if (!s) throw std::logic_error("fitted statistics do not match program shape");
    return *s;
  }

  Column column(const std::string& name) const {
    Column out = table_.column(name).values;
    out.resize(n_, 0.0);
    for (double& v : out) v = scalar::finite_or_zero(v);
    return out;
  }

  Column unary(const Unary& n) {
    Column x = eval(*n.arg);
    kernels::transform(x, x, [op = n.op](double v) { return scalar::apply(op, v); }, policy_);
    return x;
  }

  Column binary(const Binary& n) {
    Column a = eval(*n.lhs);
    const Column b = eval(*n.rhs);
    kernels::transform(a, b, a, [op = n.op](double x, double y) { return scalar::apply(op, x, y); }, policy_);
    return a;
  }

  Column conditional(const IfThenElse& n) {
    Column lhs = eval(*n.lhs);
    const Column rhs = eval(*n.rhs);
    const Column yes = eval(*n.then_branch);
    const Column no = eval(*n.else_branch);
    kernels::transform(
        lhs, rhs, yes, no, lhs,
        [cmp = n.cmp](double a, double b, double t, double f) { return scalar::compare(cmp, a, b) ? t : f; },
        policy_);
    return lhs;
  }

  Column zscore(const ZScore& n) {
    const std::size_t slot = reserve_slot();
    Column x = eval(*n.arg);
    if (mode_ == Mode::fit) stats_[slot] = fit_scaling(x, policy_);
    apply_scaling(x, stats_at<ZScoreStats>(slot), x, policy_);
    return x;
  }

  Column bin(const Bin& n) {
    const std::size_t slot = reserve_slot();
    Column x = eval(*n.arg);
    if (mode_ == Mode::fit) {
      BinStats s;
      if (!x.empty()) {
        const auto mm = kernels::minmax(x, policy_);
        s = {mm.min, mm.max};
      }
      stats_[slot] = s;
    }
    const auto& s = stats_at<BinStats>(slot);
    kernels::transform(
        x, x, [lo = s.lo, hi = s.hi, bins = n.bins](double v) { return scalar::bin_index(v, lo, hi, bins); },
        policy_);
    return x;
  }

  Column clip(const Clip& n) {
    Column x = eval(*n.arg);
    kernels::transform(x, x, [lo = n.lo, hi = n.hi](double v) { return scalar::clip(v, lo, hi); }, policy_);
    return x;
  }

  Column group(const GroupAgg& n) {
    const std::size_t slot = reserve_slot();
    const Column keys = column(n.key.name);
    const Column values = eval(*n.value);
    if (mode_ == Mode::fit) {
      std::map<double, std::vector<double>> groups;
      for (std::size_t i = 0; i < n_; ++i) groups[keys[i]].push_back(values[i]);
      GroupStats s;
      for (const auto& [key, members] : groups) s.by_key.emplace(key, aggregate(n.agg, members));
      s.global = aggregate(n.agg, values);
      stats_[slot] = std::move(s);
    }
    const auto& s = stats_at<GroupStats>(slot);
    Column out(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      auto it = s.by_key.find(keys[i]);
      out[i] = it == s.by_key.end() ? s.global : it->second;
    }
    return out;
  }

  Column cluster(const Cluster& n) {
    const std::size_t slot = reserve_slot();
    const std::size_t dims = n.cols.size();
    std::vector<Column> raw;
    raw.reserve(dims);
    for (const auto& c : n.cols) raw.push_back(column(c.name));
    if (mode_ == Mode::fit) {
      ClusterStats s;
      for (const auto& x : raw) s.scaling.push_back(fit_scaling(x, policy_));
      stats_[slot] = std::move(s);
    }
    const auto& scaling = stats_at<ClusterStats>(slot).scaling;
    std::vector<double> points(n_ * dims);
    Column scaled(n_);
    for (std::size_t j = 0; j < dims; ++j) {
      apply_scaling(raw[j], scaling[j], scaled, policy_);
      for (std::size_t i = 0; i < n_; ++i) points[i * dims + j] = scaled[i];
    }
    if (mode_ == Mode::fit) {
      // Seeded by the node's own text so reordering commutative operands elsewhere cannot change it.
      const std::string label = "cluster:" + render(Expr{n, 0});
      auto result = kmeans(points, dims, n.k, derive_seed(seed_, label), 100, 1e-6, policy_);
      std::get<ClusterStats>(stats_[slot]).centers = std::move(result.centers);
    }
    const auto& centers = stats_at<ClusterStats>(slot).centers;
    std::vector<int> labels(n_);
    kernels::assign_nearest(points, centers, dims, labels, policy_);
    return Column(labels.begin(), labels.end());
  }

  Column date_part(const DatePart& n) const {
    Column x = column(n.col.name);
    for (double& v : x) {
      const auto t = data::civil_from_epoch(v);
      switch (n.part) {
        case DatePartKind::year: v = static_cast<double>(t.year); break;
        case DatePartKind::month: v = t.month; break;
        case DatePartKind::day: v = t.day; break;
        case DatePartKind::dow: v = t.day_of_week; break;
        case DatePartKind::hour: v = t.hour; break;
      }
    }
    return x;
  }

  Column elapsed(const ElapsedDays& n) const {
    Column to = column(n.to.name);
    const Column from = column(n.from.name);
    kernels::transform(
        to, from, to, [](double a, double b) { return scalar::finite_or_zero((a - b) / 86400.0); }, policy_);
    return to;
  }

  const data::Table& table_;
  Mode mode_;
  std::vector<NodeStats>& stats_;
  std::uint64_t seed_;
  kernels::Policy policy_;
  std::size_t n_;
  std::size_t next_slot_ = 0;
};

}  // namespace

std::vector<double> FittedProgram::apply(const data::Table& table, kernels::Policy policy) const {
  auto stats = stats_;
  Interpreter interp(table, Interpreter::Mode::apply, stats, 0, policy);
  return interp.eval(program_.program.body);
}

FittedProgram fit(const TypedProgram& program, const data::Table& table, std::uint64_t seed,
                  std::vector<double>* output, kernels::Policy policy) {
  std::vector<NodeStats> stats;
  Interpreter interp(table, Interpreter::Mode::fit, stats, seed, policy);
  auto column = interp.eval(program.program.body);
  if (output) *output = std::move(column);
  return FittedProgram(program, std::move(stats));
}

std::vector<double> evaluate(const TypedProgram& program, const data::Table& table, std::uint64_t seed,
                             kernels::Policy policy) {
  std::vector<double> out;
  fit(program, table, seed, &out, policy);
  return out;
}

nlohmann::json FittedProgram::to_json() const {
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& s : stats_) {
    stats.push_back(std::visit(
        Overloaded{
            [](const ZScoreStats& z) { return nlohmann::json{{"kind", "zscore"}, {"mean", z.mean}, {"std", z.stddev}}; },
            [](const BinStats& b) { return nlohmann::json{{"kind", "bin"}, {"lo", b.lo}, {"hi", b.hi}}; },
            [](const GroupStats& g) {
              nlohmann::json keys = nlohmann::json::array();
              for (const auto& [k, v] : g.by_key) keys.push_back({k, v});
              return nlohmann::json{{"kind", "group"}, {"by_key", keys}, {"global", g.global}};
            },
            [](const ClusterStats& c) {
              nlohmann::json scaling = nlohmann::json::array();
              for (const auto& z : c.scaling) scaling.push_back({z.mean, z.stddev});
              return nlohmann::json{{"kind", "cluster"}, {"scaling", scaling}, {"centers", c.centers}};
            },
        },
        s));
  }
  return nlohmann::json{{"program", render(program_.program)}, {"stats", stats}};
}

}  // namespace malmas::dsl
