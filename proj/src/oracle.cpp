#include "tileplan/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "tileplan/assign.hpp"

namespace tileplan {

namespace {

constexpr std::int64_t kElementGuard = 1000000;       // elements per shape
constexpr std::int64_t kSearchGuard = 10000000;       // assignments

// Ownership test done per element: walk the cuts, narrowing the range of
// the split dimension, and check the index against the surviving range.
bool element_owned(const Shape& shape, const TilingState& state, const TileCoord& coord,
                   const std::vector<std::int64_t>& idx) {
  std::vector<std::int64_t> lo(shape.size(), 0), hi(shape.begin(), shape.end());
  for (std::size_t i = 0; i < state.comps.size(); ++i) {
    if (state.comps[i].kind != StateComponent::partition) continue;
    int d = state.comps[i].dim;
    std::int64_t len = hi[d] - lo[d];
    if (len % 2 != 0)
      fail("dimension " + std::to_string(d) + " with extent " + std::to_string(len) +
           " is not divisible by 2");
    std::int64_t mid = lo[d] + len / 2;
    if (coord[i])
      lo[d] = mid;
    else
      hi[d] = mid;
  }
  for (std::size_t d = 0; d < shape.size(); ++d)
    if (idx[d] < lo[d] || idx[d] >= hi[d]) return false;
  return true;
}

}  // namespace

std::int64_t element_conversion_cost(const TilingState& src, const Tiling& dst,
                                     const Shape& shape, int k) {
  if (src.k() != k || dst.k() != k) fail("cut-count mismatch");
  std::int64_t total_elems = 1;
  for (auto e : shape) total_elems *= e;
  if (total_elems > kElementGuard)
    fail("element enumeration guard exceeded: " + std::to_string(total_elems) + " elements");

  const std::int64_t partials = src.partial_count();
  const TilingState dst_state = TilingState::concrete(dst);
  std::int64_t cost = 0;
  for (int dev = 0; dev < device_count(k); ++dev) {
    TileCoord coord = index_to_coord(dev, k);
    std::vector<std::int64_t> idx(shape.size(), 0);
    bool done = shape.empty();
    while (!done) {
      if (element_owned(shape, dst_state, coord, idx)) {
        std::int64_t have = element_owned(shape, src, coord, idx) ? 1 : 0;
        cost += partials - have;
      }
      int d = static_cast<int>(shape.size()) - 1;
      for (; d >= 0; --d) {
        if (++idx[d] < shape[d]) break;
        idx[d] = 0;
      }
      if (d < 0) done = true;
    }
  }
  return cost;
}

std::int64_t element_conversion_cost(const SourceTiling& src, const Tiling& dst,
                                     const Shape& shape, int k) {
  return element_conversion_cost(src.state(k), dst, shape, k);
}

BruteForceResult brute_force_tiling(const DataflowGraph& g, int k) {
  auto candidates = candidate_tilings(g, k);
  std::vector<std::string> ids;
  std::vector<const std::vector<Tiling>*> cands;
  for (auto& [id, c] : candidates) {
    if (c.empty()) fail("no feasible tiling for tensor '" + id + "'");
    ids.push_back(id);
    cands.push_back(&c);
  }

  double space = 1.0;
  for (auto* c : cands) space *= static_cast<double>(c->size());
  if (space > static_cast<double>(kSearchGuard))
    fail("search-space guard exceeded: about 1e" +
         std::to_string(static_cast<int>(std::log10(space))) + " assignments");

  std::map<std::string, std::size_t> slot_of;
  for (std::size_t i = 0; i < ids.size(); ++i) slot_of[ids[i]] = i;

  // Per-op cost tables over the candidate indices of the op's operands.
  struct OpTable {
    std::vector<std::size_t> slots;   // operand slot per table axis
    std::vector<std::size_t> sizes;   // candidate count per axis
    std::vector<std::int64_t> cost;   // row-major over axes
  };
  std::vector<OpTable> tables;
  for (auto& op : g.ops) {
    OpTable t;
    std::vector<std::string> operands = op.inputs;
    operands.push_back(op.output);
    for (auto& id : operands) {
      t.slots.push_back(slot_of.at(id));
      t.sizes.push_back(cands[slot_of.at(id)]->size());
    }
    std::size_t entries = 1;
    for (auto s : t.sizes) entries *= s;
    t.cost.resize(entries);
    std::vector<std::size_t> pick(operands.size(), 0);
    for (std::size_t e = 0; e < entries; ++e) {
      TilingAssignment a;
      a.k = k;
      for (std::size_t j = 0; j < operands.size(); ++j) {
        // later mention of the same tensor overwrites with the same value
        a.tilings[operands[j]] = (*cands[t.slots[j]])[pick[j]];
      }
      bool consistent = true;
      for (std::size_t j = 0; j + 1 < operands.size() && consistent; ++j)
        for (std::size_t j2 = j + 1; j2 < operands.size(); ++j2)
          if (operands[j] == operands[j2] && pick[j] != pick[j2]) {
            consistent = false;
            break;
          }
      t.cost[e] = consistent ? op_comm_cost(g, op, a).elements : -1;
      int d = static_cast<int>(operands.size()) - 1;
      for (; d >= 0; --d) {
        if (++pick[d] < t.sizes[d]) break;
        pick[d] = 0;
      }
      (void)d;
    }
    tables.push_back(std::move(t));
  }

  auto table_entry = [&](const OpTable& t, const std::vector<std::size_t>& pick) {
    std::size_t e = 0;
    for (std::size_t j = 0; j < t.slots.size(); ++j) e = e * t.sizes[j] + pick[t.slots[j]];
    return t.cost[e];
  };

  BruteForceResult best;
  bool have_best = false;
  std::vector<std::size_t> pick(ids.size(), 0);
  while (true) {
    std::int64_t total = 0;
    for (auto& t : tables) total += table_entry(t, pick);
    ++best.evaluated;
    if (!have_best || total < best.cost) {
      best.cost = total;
      best.witness.k = k;
      best.witness.tilings.clear();
      for (std::size_t i = 0; i < ids.size(); ++i)
        best.witness.tilings[ids[i]] = (*cands[i])[pick[i]];
      have_best = true;
    }
    // advance with the last tensor fastest: assignments appear in
    // lexicographic order, so the kept minimum is the first one
    int d = static_cast<int>(ids.size()) - 1;
    for (; d >= 0; --d) {
      if (++pick[d] < cands[d]->size()) break;
      pick[d] = 0;
    }
    if (d < 0) break;
  }
  return best;
}

std::map<std::string, DenseTensor> serial_execute(const DataflowGraph& g, std::uint64_t seed) {
  return serial_execute(g, seed, SerialOptions{});
}

std::map<std::string, DenseTensor> serial_execute(const DataflowGraph& g, std::uint64_t seed,
                                                  const SerialOptions& opts) {
  std::map<std::string, DenseTensor> values;
  for (auto& [id, t] : g.tensors) {
    if (!g.is_graph_input(id)) continue;
    auto it = opts.preset_inputs.find(id);
    if (it != opts.preset_inputs.end()) {
      if (it->second.shape != t.shape) fail("preset value for '" + id + "' has wrong shape");
      values.emplace(id, it->second);
    } else {
      values.emplace(id, seeded_tensor(t.shape, seed, id));
    }
  }
  for (auto& op : g.ops) {
    std::vector<const DenseTensor*> ins;
    for (auto& id : op.inputs) {
      auto it = values.find(id);
      if (it == values.end()) fail("op '" + op.id + "' reads unavailable tensor '" + id + "'");
      ins.push_back(&it->second);
    }
    DenseTensor out = run_op_dense(op, ins, opts.bindings);
    if (out.shape != g.tensor(op.output).shape)
      fail("op '" + op.id + "' produced an unexpected shape");
    values[op.output] = std::move(out);
  }
  return values;
}

}  // namespace tileplan
