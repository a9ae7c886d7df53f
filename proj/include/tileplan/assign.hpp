#pragma once

#include <map>
#include <string>
#include <vector>

#include "tileplan/graph.hpp"
#include "tileplan/tiling.hpp"

namespace tileplan {

enum class PresetKind { data, model, hybrid };

PresetKind preset_from_string(const std::string& s);
std::string to_string(PresetKind p);

// The classic strategies expressed as k-cut assignments.  data: weights
// replicated, everything else split along rows (the batch dimension of
// matrix-shaped operands); model: weights row-split, activations
// column-split, the rest replicated; hybrid (k >= 2): floor(k/2) data cuts
// outermost, model cuts inside.
TilingAssignment preset_assignment(const DataflowGraph& g, PresetKind kind, int k);

// Per-tensor candidate tilings searched by the optimizers and the
// exhaustive oracle: canonical k-cut forms over the dimensions some
// incident op can usefully split, restricted by divisibility, plus
// replication.  Returned in normal form, lexicographic order.
std::map<std::string, std::vector<Tiling>> candidate_tilings(const DataflowGraph& g, int k);

// Single-cut options for one tensor (same policy, k = 1).
std::vector<Tiling> candidate_tilings_for(const DataflowGraph& g, const std::string& tensor_id,
                                          int k);

}  // namespace tileplan
