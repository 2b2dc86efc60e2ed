#pragma once

// Serial reference kernels. The OpenMP versions in parallel.hpp must produce
// bit-identical output; tests compare the two on random inputs.

#include <cstddef>
#include <span>

#include "malmas/kernels/stats.hpp"

namespace malmas::kernels::serial {

template <typename F>
void transform(std::span<const double> in, std::span<double> out, F f) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
}

template <typename F>
void transform(std::span<const double> a, std::span<const double> b, std::span<double> out, F f) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
}

template <typename F>
void transform(std::span<const double> a, std::span<const double> b, std::span<const double> c,
               std::span<const double> d, std::span<double> out, F f) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i], c[i], d[i]);
}

/// Chunk-ordered sum: partial sums over fixed kChunk-element blocks, combined
/// left to right. Same association as the parallel version.
double sum(std::span<const double> x);
/// Sum of squared deviations from `center`, chunk-ordered like sum().
double sum_squared_deviation(std::span<const double> x, double center);
MinMax minmax(std::span<const double> x);

/// For each of n points (row-major, dims wide) the index of the nearest of k
/// centers (row-major) by squared Euclidean distance; ties go to the lowest index.
void assign_nearest(std::span<const double> points, std::span<const double> centers, std::size_t dims,
                    std::span<int> labels);

}  // namespace malmas::kernels::serial
