#pragma once

// OpenMP kernels. Elementwise loops are embarrassingly parallel; reductions
// split the input on the same fixed kChunk boundaries as the serial reference
// and combine the partial results in chunk order, so output does not depend
// on the thread count.

#include <cstddef>
#include <span>

#include "malmas/kernels/stats.hpp"

namespace malmas::kernels::parallel {

template <typename F>
void transform(std::span<const double> in, std::span<double> out, F f) {
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = f(in[i]);
}

template <typename F>
void transform(std::span<const double> a, std::span<const double> b, std::span<double> out, F f) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for simd schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
}

template <typename F>
void transform(std::span<const double> a, std::span<const double> b, std::span<const double> c,
               std::span<const double> d, std::span<double> out, F f) {
  const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = f(a[i], b[i], c[i], d[i]);
}

double sum(std::span<const double> x);
double sum_squared_deviation(std::span<const double> x, double center);
MinMax minmax(std::span<const double> x);
void assign_nearest(std::span<const double> points, std::span<const double> centers, std::size_t dims,
                    std::span<int> labels);

}  // namespace malmas::kernels::parallel
