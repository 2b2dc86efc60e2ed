#include "malmas/kernels/serial.hpp"

#include <algorithm>
#include <limits>

namespace malmas::kernels::serial {

double sum(std::span<const double> x) {
  double total = 0.0;
  for (std::size_t begin = 0; begin < x.size(); begin += kChunk) {
    const std::size_t end = std::min(x.size(), begin + kChunk);
    double partial = 0.0;
    for (std::size_t i = begin; i < end; ++i) partial += x[i];
    total += partial;
  }
  return total;
}

double sum_squared_deviation(std::span<const double> x, double center) {
  double total = 0.0;
  for (std::size_t begin = 0; begin < x.size(); begin += kChunk) {
    const std::size_t end = std::min(x.size(), begin + kChunk);
    double partial = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double d = x[i] - center;
      partial += d * d;
    }
    total += partial;
  }
  return total;
}

MinMax minmax(std::span<const double> x) {
  MinMax out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double v : x) {
    out.min = std::min(out.min, v);
    out.max = std::max(out.max, v);
  }
  return out;
}

void assign_nearest(std::span<const double> points, std::span<const double> centers, std::size_t dims,
                    std::span<int> labels) {
  const std::size_t k = dims ? centers.size() / dims : 0;
  for (std::size_t p = 0; p < labels.size(); ++p) {
    const double* x = points.data() + p * dims;
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
    labels[p] = best;
  }
}

}  // namespace malmas::kernels::serial
