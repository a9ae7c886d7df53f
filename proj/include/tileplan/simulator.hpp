#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tileplan/dense.hpp"
#include "tileplan/execgraph.hpp"
#include "tileplan/placement.hpp"

namespace tileplan {

// Cross-device traffic of a plan, attributed to the hierarchy level whose
// link each fetch crosses (the outermost level where the two device paths
// diverge).  Phases run sequentially; levels within a phase in parallel.
struct TrafficReport {
  struct PhaseRow {
    std::string phase;
    std::int64_t bytes = 0;
    std::vector<std::int64_t> level_bytes;  // indexed like hierarchy.levels
    double seconds = 0;
  };
  std::vector<PhaseRow> phases;             // plan phase order
  std::vector<std::int64_t> level_bytes;    // totals per hierarchy level
  std::vector<std::int64_t> device_in;      // bytes arriving per device
  std::vector<std::int64_t> device_out;     // bytes leaving per device
  std::int64_t total_bytes = 0;
  double est_seconds = 0;
};

TrafficReport simulate_traffic(const ExecutionPlan& p, const DeviceHierarchy& h);

// Runs the plan literally, node by node, and compares every device's final
// block of every tensor against the dense single-device execution.
struct NumericCheck {
  double max_abs = 0;
  double max_rel = 0;   // |diff| / max(|serial value|, 1)
  std::int64_t values = 0;
  std::uint64_t seed = 0;
};

NumericCheck execute_numeric(const ExecutionPlan& p, std::uint64_t seed);
NumericCheck execute_numeric(const ExecutionPlan& p, std::uint64_t seed,
                             const FunctionBindings& fb);

}  // namespace tileplan
