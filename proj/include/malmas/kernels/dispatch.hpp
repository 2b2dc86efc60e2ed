#pragma once

#include <span>

#include "malmas/kernels/parallel.hpp"
#include "malmas/kernels/serial.hpp"
#include "malmas/kernels/stats.hpp"

namespace malmas::kernels {

inline bool use_parallel(std::size_t n, Policy policy) {
  return policy == Policy::parallel || (policy == Policy::automatic && n >= kParallelThreshold);
}

template <typename F>
void transform(std::span<const double> in, std::span<double> out, F f, Policy policy = Policy::automatic) {
  if (use_parallel(in.size(), policy)) parallel::transform(in, out, f);
  else serial::transform(in, out, f);
}

template <typename F>
void transform(std::span<const double> a, std::span<const double> b, std::span<double> out, F f,
               Policy policy = Policy::automatic) {
  if (use_parallel(a.size(), policy)) parallel::transform(a, b, out, f);
  else serial::transform(a, b, out, f);
}

template <typename F>
void transform(std::span<const double> a, std::span<const double> b, std::span<const double> c,
               std::span<const double> d, std::span<double> out, F f, Policy policy = Policy::automatic) {
  if (use_parallel(a.size(), policy)) parallel::transform(a, b, c, d, out, f);
  else serial::transform(a, b, c, d, out, f);
}

inline double sum(std::span<const double> x, Policy policy = Policy::automatic) {
  return use_parallel(x.size(), policy) ? parallel::sum(x) : serial::sum(x);
}

inline double sum_squared_deviation(std::span<const double> x, double center, Policy policy = Policy::automatic) {
  return use_parallel(x.size(), policy) ? parallel::sum_squared_deviation(x, center)
                                        : serial::sum_squared_deviation(x, center);
}

inline MinMax minmax(std::span<const double> x, Policy policy = Policy::automatic) {
  return use_parallel(x.size(), policy) ? parallel::minmax(x) : serial::minmax(x);
}

inline void assign_nearest(std::span<const double> points, std::span<const double> centers, std::size_t dims,
                           std::span<int> labels, Policy policy = Policy::automatic) {
  if (use_parallel(labels.size(), policy)) parallel::assign_nearest(points, centers, dims, labels);
  else serial::assign_nearest(points, centers, dims, labels);
}

}  // namespace malmas::kernels
