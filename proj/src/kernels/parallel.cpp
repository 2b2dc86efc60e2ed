#include "malmas/kernels/parallel.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace malmas::kernels::parallel {

namespace {

std::ptrdiff_t chunk_count(std::size_t n) { return static_cast<std::ptrdiff_t>((n + kChunk - 1) / kChunk); }

}  // namespace

double sum(std::span<const double> x) {
  const std::ptrdiff_t chunks = chunk_count(x.size());
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(x.size(), begin + kChunk);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += x[i];
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double sum_squared_deviation(std::span<const double> x, double center) {
  const std::ptrdiff_t chunks = chunk_count(x.size());
  std::vector<double> partial(static_cast<std::size_t>(chunks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(x.size(), begin + kChunk);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double d = x[i] - center;
      acc += d * d;
    }
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

MinMax minmax(std::span<const double> x) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for reduction(min : lo) reduction(max : hi) schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    lo = std::min(lo, x[i]);
    hi = std::max(hi, x[i]);
  }
  return {lo, hi};
}

void assign_nearest(std::span<const double> points, std::span<const double> centers, std::size_t dims,
                    std::span<int> labels) {
  const std::size_t k = dims ? centers.size() / dims : 0;
  const auto n = static_cast<std::ptrdiff_t>(labels.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    const double* x = points.data() + static_cast<std::size_t>(p) * dims;
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double* m = centers.data() + c * dims;
      double d = 0.0;
      for (std::size_t j = 0; j < dims; ++j) {
        const double diff = x[j] - m[j];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(p)] = best;
  }
}

}  // namespace malmas::kernels::parallel
