#pragma once

#include <cstdint>
#include <map>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "malmas/data/table.hpp"
#include "malmas/dsl/typecheck.hpp"
#include "malmas/kernels/stats.hpp"

namespace malmas::dsl {

// Statistics a stateful node learns on the table it is fitted on.
struct ZScoreStats {
  double mean = 0.0;
  double stddev = 0.0;  // 0 marks a constant input: output is all zeros
};
struct BinStats {
  double lo = 0.0;
  double hi = 0.0;
};
struct GroupStats {
  std::map<double, double> by_key;
  double global = 0.0;  // used for keys not seen at fit time
};
struct ClusterStats {
  std::vector<ZScoreStats> scaling;  // per input column
  std::vector<double> centers;       // k x dims in z-scored space
};
using NodeStats = std::variant<ZScoreStats, BinStats, GroupStats, ClusterStats>;

/// A typed program plus the statistics of its zscore/bin/group_agg/cluster
/// nodes, indexed by pre-order position among stateful nodes.
class FittedProgram {
 public:
  FittedProgram(TypedProgram program, std::vector<NodeStats> stats)
      : program_(std::move(program)), stats_(std::move(stats)) {}

  /// Evaluates on any table with the referenced columns, reusing the fitted
  /// statistics verbatim.
  std::vector<double> apply(const data::Table& table, kernels::Policy policy = kernels::Policy::automatic) const;

  const TypedProgram& program() const { return program_; }
  const std::vector<NodeStats>& stats() const { return stats_; }

  nlohmann::json to_json() const;

 private:
  TypedProgram program_;
  std::vector<NodeStats> stats_;
};

/// Fits statistics on `table`. When `output` is given it receives the fitted
/// column, which equals apply(table) bit for bit.
FittedProgram fit(const TypedProgram& program, const data::Table& table, std::uint64_t seed,
                  std::vector<double>* output = nullptr, kernels::Policy policy = kernels::Policy::automatic);

/// Fit-and-apply on one table. Total: never throws on data and never emits
/// NaN or infinity.
std::vector<double> evaluate(const TypedProgram& program, const data::Table& table, std::uint64_t seed,
                             kernels::Policy policy = kernels::Policy::automatic);

}  // namespace malmas::dsl
