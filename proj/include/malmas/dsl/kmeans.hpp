#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "malmas/kernels/stats.hpp"

namespace malmas::dsl {

struct KMeansResult {
  std::vector<double> centers;  // k x dims, row-major
  std::vector<int> labels;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Stops after max_iterations or
/// once no center moves by tolerance or more (Euclidean). An empty cluster
/// keeps its previous center. Labels are the nearest-center assignment for
/// the returned centers.
KMeansResult kmeans(std::span<const double> points, std::size_t dims, int k, std::uint64_t seed,
                    int max_iterations = 100, double tolerance = 1e-6,
                    kernels::Policy policy = kernels::Policy::automatic);

}  // namespace malmas::dsl
