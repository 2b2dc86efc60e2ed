// Serial reference vs OpenMP kernels, plus a whole-program evaluation.
// Run with OMP_NUM_THREADS set to compare thread counts.
#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "malmas/dsl/interpreter.hpp"
#include "malmas/dsl/parser.hpp"
#include "malmas/kernels/dispatch.hpp"
#include "support.hpp"

using namespace malmas;
using kernels::Policy;

namespace {

std::vector<double> data(std::size_t n, std::uint64_t seed = 1) {
  Rng rng(seed);
  return fixture::normals(rng, n);
}

Policy policy_of(const benchmark::State& state) {
  return state.range(1) ? Policy::parallel : Policy::serial;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(1) ? "openmp" : "serial");
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Transform(benchmark::State& state) {
  const auto a = data(state.range(0), 1), b = data(state.range(0), 2);
  std::vector<double> out(a.size());
  for (auto _ : state) {
    kernels::transform(a, b, out, [](double x, double y) { return std::log1p(std::abs(x * y)); }, policy_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  label(state);
}

void BM_Sum(benchmark::State& state) {
  const auto x = data(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::sum(x, policy_of(state)));
  label(state);
}

void BM_SumSquaredDeviation(benchmark::State& state) {
  const auto x = data(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::sum_squared_deviation(x, 0.1, policy_of(state)));
  label(state);
}

void BM_MinMax(benchmark::State& state) {
  const auto x = data(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::minmax(x, policy_of(state)));
  label(state);
}

void BM_AssignNearest(benchmark::State& state) {
  constexpr std::size_t dims = 4, k = 8;
  const auto points = data(state.range(0) * dims, 3), centers = data(k * dims, 4);
  std::vector<int> labels(state.range(0));
  for (auto _ : state) {
    kernels::assign_nearest(points, centers, dims, labels, policy_of(state));
    benchmark::DoNotOptimize(labels.data());
  }
  label(state);
}

void BM_EvaluateProgram(benchmark::State& state) {
  const auto table = fixture::product_table(state.range(0), 5, 4);
  const auto typed = dsl::typecheck(dsl::parse("FEATURE f = zscore(log_s(abs(x1 * x2) + 1)) - clip(n1, -1, 1)"),
                                    table.feature_schema());
  for (auto _ : state) benchmark::DoNotOptimize(dsl::evaluate(typed, table, 7, policy_of(state)));
  label(state);
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {1L << 12, 1L << 16, 1L << 20})
    for (long parallel : {0L, 1L}) b->Args({n, parallel});
}

}  // namespace

BENCHMARK(BM_Transform)->Apply(sizes);
BENCHMARK(BM_Sum)->Apply(sizes);
BENCHMARK(BM_SumSquaredDeviation)->Apply(sizes);
BENCHMARK(BM_MinMax)->Apply(sizes);
BENCHMARK(BM_AssignNearest)->Apply(sizes);
BENCHMARK(BM_EvaluateProgram)->Args({1 << 14, 0})->Args({1 << 14, 1})->Args({1 << 18, 0})->Args({1 << 18, 1});

BENCHMARK_MAIN();
