#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tileplan/cost.hpp"
#include "tileplan/dense.hpp"
#include "tileplan/graph.hpp"
#include "tileplan/tiling.hpp"

namespace tileplan {

// Conversion cost by literal enumeration of (element, device) pairs.
// Refuses shapes with more than 10^6 elements instead of approximating.
std::int64_t element_conversion_cost(const TilingState& src, const Tiling& dst,
                                     const Shape& shape, int k);
std::int64_t element_conversion_cost(const SourceTiling& src, const Tiling& dst,
                                     const Shape& shape, int k);

struct BruteForceResult {
  std::int64_t cost = 0;
  TilingAssignment witness;  // lexicographically first minimizer
  std::int64_t evaluated = 0;
};

// Exact minimum of the graph objective over every assignment of canonical
// k-cut tilings drawn from the shared candidate policy.  Refuses search
// spaces beyond 10^7 assignments instead of sampling.
BruteForceResult brute_force_tiling(const DataflowGraph& g, int k);

struct SerialOptions {
  FunctionBindings bindings = FunctionBindings::standard();
  std::map<std::string, DenseTensor> preset_inputs;  // overrides seeded values
};

// Dense single-device execution of the whole graph; returns every tensor's
// value.  Graph inputs take seeded values unless preset.
std::map<std::string, DenseTensor> serial_execute(const DataflowGraph& g, std::uint64_t seed);
std::map<std::string, DenseTensor> serial_execute(const DataflowGraph& g, std::uint64_t seed,
                                                  const SerialOptions& opts);

}  // namespace tileplan
