#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tileplan/graph.hpp"
#include "tileplan/tiling.hpp"

namespace tileplan {

// One per-cut component of a distribution state.  `reduce` marks a cut
// whose two sides hold partial sums of the same region.
struct StateComponent {
  enum Kind { partition, replicate, reduce } kind = replicate;
  int dim = -1;

  static StateComponent from_basic(const BasicTiling& b) {
    if (b.is_replicate()) return {replicate, -1};
    return {partition, b.dim()};
  }
  bool operator==(const StateComponent& o) const { return kind == o.kind && dim == o.dim; }
};

// Distribution of a tensor over 2^k devices: a concrete tiling possibly
// interleaved with reduce cuts (partial sums awaiting recombination).
struct TilingState {
  std::vector<StateComponent> comps;

  static TilingState concrete(const Tiling& t);
  static TilingState all_reduce(int k);
  static TilingState parse(const std::string& text);  // accepts "red" tokens

  int k() const { return static_cast<int>(comps.size()); }
  bool has_reduce() const;
  int reduce_count() const;
  int partial_count() const { return 1 << reduce_count(); }
  std::string str() const;

  // Block held by the device at `coord` (reduce and replicate cuts do not
  // narrow), and the index of the partial sum it holds.
  Region block(const Shape& shape, const TileCoord& coord) const;
  int partial_index(const TileCoord& coord) const;

  bool operator==(const TilingState& o) const { return comps == o.comps; }
};

// Source side of a conversion: a concrete tiling, or the state left by a
// contraction executed in its reducing form (every device holds a
// full-shape partial sum).
struct SourceTiling {
  bool is_reduction = false;
  Tiling tiling;

  static SourceTiling concrete(Tiling t) { return {false, std::move(t)}; }
  static SourceTiling reduction() { return {true, {}}; }
  TilingState state(int k) const;
};

// Elements fetched across all 2^k devices to materialize `dst` from `src`:
// each device counts the part of its destination block it does not already
// hold, and with reduce cuts present every element counts once per partial
// sum the device is missing.
std::int64_t conversion_cost(const SourceTiling& src, const Tiling& dst, const Shape& shape,
                             int k);
std::int64_t state_conversion_cost(const TilingState& src, const Tiling& dst,
                                   const Shape& shape, int k);

// One zero-communication execution shape for an op: per-input single-cut
// tilings plus the output state the local kernels leave behind.
struct AlignedForm {
  std::string name;
  std::vector<BasicTiling> inputs;
  bool output_reduce = false;
  BasicTiling output = BasicTiling::replicate();
};

// Forms in preference order.  Contractions get row/column/reducing forms;
// elementwise ops one form per dimension plus all-replicated; generic ops
// the batch split only.
std::vector<AlignedForm> aligned_forms(const DataflowGraph& g, const OpNode& op);

struct OpCommCost {
  std::int64_t elements = 0;
  std::int64_t bytes = 0;
  std::vector<int> form_seq;  // chosen form index per cut, outermost first
  std::string form_str;       // names joined by '+'
  std::vector<std::int64_t> input_conv_elements;
  std::int64_t output_conv_elements = 0;
  // Composed per-input execution tilings and the output state they imply.
  std::vector<Tiling> input_exec_tilings;
  TilingState output_state;
};

// Minimum over per-cut form choices of the input conversion costs plus the
// cost of converting the form's output state to the assigned tiling.
OpCommCost op_comm_cost(const DataflowGraph& g, const OpNode& op,
                        const TilingAssignment& a);

struct CostReport {
  struct PerOp {
    std::string op_id;
    std::int64_t elements = 0;
    std::int64_t bytes = 0;
    std::string chosen_form;
  };
  std::vector<PerOp> per_op;
  std::int64_t total_elements = 0;
  std::int64_t total_bytes = 0;
};

CostReport graph_cost(const DataflowGraph& g, const TilingAssignment& a);

enum class RefStrategy { data, model, hybrid };

struct RefCost {
  std::int64_t total_bytes = 0;
  double megabytes = 0.0;  // decimal megabytes
};

// Closed-form per-step transfer volume of the classic strategies on a
// uniform multilayer perceptron (square weights, fixed batch).
RefCost reference_strategy_cost(int layers, int width, int batch, int devices,
                                int dtype_bytes, RefStrategy s, int groups = 4);

}  // namespace tileplan
