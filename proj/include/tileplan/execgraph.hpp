#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tileplan/cost.hpp"
#include "tileplan/graph.hpp"
#include "tileplan/placement.hpp"
#include "tileplan/tiling.hpp"

namespace tileplan {

enum class NodeKind { buffer, slice, fetch, concat, sub_op, reduce_partial };

std::string to_string(NodeKind k);
NodeKind node_kind_from_string(const std::string& s);

// One step of the per-device rewrite.  Values are dense blocks addressed in
// the logical tensor's absolute index space.
struct ExecNode {
  std::string id;
  NodeKind kind = NodeKind::buffer;
  int device = 0;
  std::string tensor;               // logical tensor the value belongs to
  std::string op;                   // sub_op nodes only
  std::string phase;                // "init", "<op>:in<j>", or "<op>:out"
  Region region;                    // block carried by this node
  int partial = -1;                 // partial-sum index, -1 for complete values
  std::vector<std::string> sources; // producing node ids, in paste order
  std::int64_t bytes = 0;           // fetch nodes: volume * dtype_bytes
  int src_device = -1;              // fetch nodes: holder's device
};

struct ExecutionPlan {
  int k = 0;
  DataflowGraph graph;
  TilingAssignment assignment;
  DeviceHierarchy hierarchy;
  std::vector<ExecNode> nodes;
  // tensor id -> node holding its assigned block, indexed by device
  std::map<std::string, std::vector<std::string>> holders;

  std::int64_t fetch_bytes_total() const;
  std::vector<std::string> phase_order() const;  // first-appearance order
  const ExecNode& node(const std::string& id) const;
};

// Rewrite every op into per-device sub-ops in its cheapest aligned form,
// with explicit slice/fetch/concat assembly for the input conversions and
// fetch/reduce recombination for reducing outputs.  Cross-device traffic in
// the result equals the communication cost of the assignment exactly.
ExecutionPlan build_execution_graph(const DataflowGraph& g, const TilingAssignment& a,
                                    const PlacementMap& pm);

std::string export_plan(const ExecutionPlan& p);
ExecutionPlan parse_plan(const std::string& json_text);

// Graphviz rendering, one cluster per device.
std::string export_dot(const ExecutionPlan& p);

}  // namespace tileplan
