#pragma once

#include <cstddef>

namespace malmas::kernels {

inline constexpr std::size_t kChunk = 4096;

/// Inputs with fewer rows than this run serially under the automatic policy.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

struct MinMax {
  double min;
  double max;
};

enum class Policy { serial, parallel, automatic };

}  // namespace malmas::kernels
