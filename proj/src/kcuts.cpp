#include "tileplan/kcuts.hpp"

#include <set>

#include "tileplan/cost.hpp"
#include "tileplan/error.hpp"

namespace tileplan {

DataflowGraph construct_tile_graph(const DataflowGraph& g, const TilingAssignment& a) {
  if (a.k != 1) fail("tile graph construction expects a single-cut assignment");

  // outputs whose cheapest aligned form reduces keep full shape as partials
  std::set<std::string> partial_outputs;
  for (const auto& op : g.ops) {
    OpCommCost c = op_comm_cost(g, op, a);
    if (c.output_state.has_reduce()) partial_outputs.insert(op.output);
  }

  DataflowGraph tile;
  tile.ops = g.ops;
  for (const auto& [id, t] : g.tensors) {
    TensorSpec s = t;
    if (partial_outputs.count(id)) {
      s.partial = true;
    } else {
      s.shape = tile_shape(t.shape, a.at(id));
      s.partial = false;
    }
    tile.tensors[id] = std::move(s);
  }
  return tile;
}

KCutResult kcuts(const DataflowGraph& g, int k) {
  if (k < 0) fail("cut count must be nonnegative");
  KCutResult r;
  r.assignment.k = k;
  if (k == 0) {
    for (const auto& [id, t] : g.tensors) {
      (void)t;
      r.assignment.tilings[id] = Tiling{};
    }
    return r;
  }

  OnecutResult oc = onecut(g);
  DataflowGraph tile = construct_tile_graph(g, oc.assignment);
  KCutResult inner = kcuts(tile, k - 1);

  for (const auto& [id, t] : g.tensors) {
    (void)t;
    r.assignment.tilings[id] =
        compose(oc.assignment.at(id), inner.assignment.at(id));
  }
  r.per_cut.push_back(oc.cost);
  r.per_cut.insert(r.per_cut.end(), inner.per_cut.begin(), inner.per_cut.end());
  r.total = oc.cost + 2 * inner.total;
  return r;
}

TheoremCheck verify_theorems(const KCutResult& r) {
  TheoremCheck c;
  const std::size_t k = r.per_cut.size();

  std::int64_t expect = 0;
  for (std::size_t j = 0; j < k; ++j) expect += r.per_cut[j] << j;
  c.total_ok = expect == r.total;
  if (!c.total_ok)
    c.detail = "total " + std::to_string(r.total) + " != weighted sum " +
               std::to_string(expect);

  c.greedy_ok = true;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    if (r.per_cut[j] > 2 * r.per_cut[j + 1]) {
      c.greedy_ok = false;
      if (!c.detail.empty()) c.detail += "; ";
      c.detail += "cut " + std::to_string(k - j) + " costs " +
                  std::to_string(r.per_cut[j]) + " > 2*" +
                  std::to_string(r.per_cut[j + 1]);
      break;
    }
  }
  return c;
}

}  // namespace tileplan
