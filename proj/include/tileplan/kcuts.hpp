#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tileplan/graph.hpp"
#include "tileplan/onecut.hpp"
#include "tileplan/tiling.hpp"

namespace tileplan {

// Shrink every tensor to the tile selected by a one-cut assignment.
// Outputs produced through a reducing form keep their full extent and are
// flagged partial; inside the halved device group they behave like ordinary
// tensors whose values happen to be partial sums.
DataflowGraph construct_tile_graph(const DataflowGraph& g, const TilingAssignment& a);

struct KCutResult {
  TilingAssignment assignment;          // k cuts per tensor, outermost first
  std::vector<std::int64_t> per_cut;    // cost of each cut, outermost first
  std::int64_t total = 0;               // per_cut[0] + 2*(remaining recursion)
};

// Greedy recursion: solve one cut exactly, shrink to the tile graph,
// recurse for the remaining k-1 cuts, and compose outermost-first.
KCutResult kcuts(const DataflowGraph& g, int k);

struct TheoremCheck {
  bool total_ok = false;   // total equals sum of per-cut costs, each doubled
                           // once per level of recursion beneath it
  bool greedy_ok = false;  // every outer cut costs at most twice its inner one
  std::string detail;      // first violation, if any
};

TheoremCheck verify_theorems(const KCutResult& r);

}  // namespace tileplan
