#include "malmas/dsl/kmeans.hpp"

#include <cmath>

#include "malmas/common/rng.hpp"
#include "malmas/kernels/dispatch.hpp"

namespace malmas::dsl {

namespace {

double squared_distance(const double* a, const double* b, std::size_t dims) {
  double d = 0.0;
  for (std::size_t j = 0; j < dims; ++j) {
    const double diff = a[j] - b[j];
    d += diff * diff;
  }
  return d;
}

}  // namespace

KMeansResult kmeans(std::span<const double> points, std::size_t dims, int k, std::uint64_t seed,
                    int max_iterations, double tolerance, kernels::Policy policy) {
  KMeansResult result;
  const std::size_t n = dims ? points.size() / dims : 0;
  const auto kk = static_cast<std::size_t>(k);
  result.centers.assign(kk * dims, 0.0);
  result.labels.assign(n, 0);
  if (n == 0 || kk == 0) return result;

  // k-means++: first center uniform, then proportional to squared distance to
  // the nearest chosen center (uniform again if every distance is zero).
  Rng rng(seed);
  std::vector<double> nearest(n, INFINITY);
  std::size_t pick = rng.below(n);
  for (std::size_t c = 0; c < kk; ++c) {
    std::copy_n(points.data() + pick * dims, dims, result.centers.data() + c * dims);
    if (c + 1 == kk) break;
    double total = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      nearest[p] = std::min(nearest[p], squared_distance(points.data() + p * dims, result.centers.data() + c * dims, dims));
      total += nearest[p];
    }
    if (!(total > 0.0)) {
      pick = rng.below(n);
      continue;
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    pick = n - 1;
    for (std::size_t p = 0; p < n; ++p) {
      acc += nearest[p];
      if (acc > target) {
        pick = p;
        break;
      }
    }
  }

  std::vector<double> sums(kk * dims);
  std::vector<std::size_t> counts(kk);
  for (int it = 0; it < max_iterations; ++it) {
    kernels::assign_nearest(points, result.centers, dims, result.labels, policy);
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t p = 0; p < n; ++p) {
      const auto c = static_cast<std::size_t>(result.labels[p]);
      ++counts[c];
      for (std::size_t j = 0; j < dims; ++j) sums[c * dims + j] += points[p * dims + j];
    }
    double max_shift = 0.0;
    for (std::size_t c = 0; c < kk; ++c) {
      if (counts[c] == 0) continue;
      double shift = 0.0;
      for (std::size_t j = 0; j < dims; ++j) {
        const double updated = sums[c * dims + j] / static_cast<double>(counts[c]);
        const double diff = updated - result.centers[c * dims + j];
        shift += diff * diff;
        result.centers[c * dims + j] = updated;
      }
      max_shift = std::max(max_shift, std::sqrt(shift));
    }
    result.iterations = it + 1;
    if (max_shift < tolerance) break;
  }
  kernels::assign_nearest(points, result.centers, dims, result.labels, policy);
  return result;
}

}  // namespace malmas::dsl
