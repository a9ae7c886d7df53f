#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tileplan/graph.hpp"
#include "tileplan/tiling.hpp"

namespace tileplan {

// Breadth-first leveling of the undirected tensor-op incidence view.
struct LevelPlan {
  std::vector<std::vector<std::string>> levels;     // op ids, sorted within a level
  // frontier[l]: tensors incident both to ops in levels <= l and to ops in
  // levels > l; the dynamic program's state after processing level l.
  std::vector<std::vector<std::string>> frontiers;
};

LevelPlan bfs_levels(const DataflowGraph& g);

struct OnecutResult {
  TilingAssignment assignment;  // one cut per tensor
  std::int64_t cost = 0;        // sum of op costs under the assignment
  std::size_t max_states = 0;   // peak DP states in any level
};

// Exact single-cut optimum over the candidate policy, via dynamic
// programming along the BFS levels with frontier tilings as state.
OnecutResult onecut(const DataflowGraph& g);

}  // namespace tileplan
