#include "tileplan/execgraph.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"

#include "tileplan/error.hpp"

namespace tileplan {

std::string to_string(NodeKind k) {
  switch (k) {
    case NodeKind::buffer: return "buffer";
    case NodeKind::slice: return "slice";
    case NodeKind::fetch: return "fetch";
    case NodeKind::concat: return "concat";
    case NodeKind::sub_op: return "sub_op";
    case NodeKind::reduce_partial: return "reduce_partial";
  }
  fail("bad node kind");
}

NodeKind node_kind_from_string(const std::string& s) {
  if (s == "buffer") return NodeKind::buffer;
  if (s == "slice") return NodeKind::slice;
  if (s == "fetch") return NodeKind::fetch;
  if (s == "concat") return NodeKind::concat;
  if (s == "sub_op") return NodeKind::sub_op;
  if (s == "reduce_partial") return NodeKind::reduce_partial;
  fail("unknown node kind '" + s + "'");
}

std::int64_t ExecutionPlan::fetch_bytes_total() const {
  std::int64_t b = 0;
  for (const auto& n : nodes)
    if (n.kind == NodeKind::fetch) b += n.bytes;
  return b;
}

std::vector<std::string> ExecutionPlan::phase_order() const {
  std::vector<std::string> order;
  std::set<std::string> seen;
  for (const auto& n : nodes)
    if (seen.insert(n.phase).second) order.push_back(n.phase);
  return order;
}

const ExecNode& ExecutionPlan::node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return n;
  fail("no plan node with id " + id);
}

namespace {

bool region_lo_less(const Region& a, const Region& b) {
  for (std::size_t i = 0; i < a.bounds.size(); ++i) {
    if (a.bounds[i][0] != b.bounds[i][0]) return a.bounds[i][0] < b.bounds[i][0];
    if (a.bounds[i][1] != b.bounds[i][1]) return a.bounds[i][1] < b.bounds[i][1];
  }
  return false;
}

struct Builder {
  const DataflowGraph& g;
  const TilingAssignment& a;
  const PlacementMap& pm;
  int devices;
  ExecutionPlan plan;
  int counter = 0;

  Builder(const DataflowGraph& g_, const TilingAssignment& a_, const PlacementMap& pm_)
      : g(g_), a(a_), pm(pm_), devices(device_count(a_.k)) {}

  std::string add(ExecNode n) {
    n.id = "n" + std::to_string(counter++);
    plan.nodes.push_back(n);
    return plan.nodes.back().id;
  }

  // prefer the most local holder (deepest shared subtree), then lowest id
  int pick_source(int dst, const std::vector<int>& candidates) const {
    int best = candidates[0];
    int best_level = pm.common_level(best, dst);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      int lvl = pm.common_level(candidates[i], dst);
      if (lvl > best_level) {
        best = candidates[i];
        best_level = lvl;
      }
    }
    return best;
  }

  // Assemble `need` of tensor `t` on device `d` from per-device complete
  // values: `have[e]` is the region held by node `held[e]`, carrying partial
  // index p (or complete, -1).  Local overlap is free; everything else is
  // fetched from the preferred holder.  Returns the id of a node whose
  // region is exactly `need`.
  std::string assemble(const std::string& t, int d, const Region& need,
                       const std::string& phase,
                       const std::vector<std::string>& held,
                       const std::vector<Region>& have, int local_device,
                       int partial) {
    const TensorSpec& spec = g.tensor(t);
    struct Piece {
      Region region;
      std::string node;  // filled after emission
      int src = -1;      // -1: local slice
    };
    std::vector<Piece> pieces;

    Region local_overlap = local_device >= 0 ? need.intersect(have[local_device])
                                             : Region{};
    bool has_local = local_device >= 0 && !local_overlap.empty();
    std::vector<Region> missing =
        has_local ? need.subtract(have[local_device]) : std::vector<Region>{need};

    if (has_local) {
      if (local_overlap == need && local_overlap == have[local_device])
        return held[local_device];  // already holds exactly what is needed
      pieces.push_back({local_overlap, "", -1});
    }

    // distinct holder regions tile the space; split boxes along them
    std::vector<std::pair<Region, std::vector<int>>> cells;
    for (int e = 0; e < devices; ++e) {
      if (e == local_device || held[e].empty()) continue;
      bool found = false;
      for (auto& [r, devs] : cells)
        if (r == have[e]) {
          devs.push_back(e);
          found = true;
        }
      if (!found) cells.push_back({have[e], {e}});
    }
    for (const auto& box : missing) {
      std::int64_t covered = 0;
      for (const auto& [cell, devs] : cells) {
        Region piece = box.intersect(cell);
        if (piece.empty()) continue;
        pieces.push_back({piece, "", pick_source(d, devs)});
        covered += piece.volume();
      }
      if (covered != box.volume())
        fail("no holder covers part of tensor " + t + " needed on device " +
             std::to_string(d));
    }

    std::sort(pieces.begin(), pieces.end(),
              [](const Piece& x, const Piece& y) { return region_lo_less(x.region, y.region); });

    for (auto& p : pieces) {
      ExecNode n;
      n.device = d;
      n.tensor = t;
      n.phase = phase;
      n.region = p.region;
      n.partial = partial;
      if (p.src < 0) {
        if (p.region == have[local_device]) {
          p.node = held[local_device];  // whole local block, no slice needed
          continue;
        }
        n.kind = NodeKind::slice;
        n.sources = {held[local_device]};
      } else {
        n.kind = NodeKind::fetch;
        n.sources = {held[p.src]};
        n.src_device = p.src;
        n.bytes = p.region.volume() * spec.dtype_bytes;
      }
      p.node = add(n);
    }

    if (pieces.size() == 1 && pieces[0].region == need) return pieces[0].node;

    ExecNode cat;
    cat.kind = NodeKind::concat;
    cat.device = d;
    cat.tensor = t;
    cat.phase = phase;
    cat.region = need;
    cat.partial = partial;
    for (const auto& p : pieces) cat.sources.push_back(p.node);
    return add(cat);
  }

  void run() {
    plan.k = a.k;
    plan.graph = g;
    plan.assignment = a;
    plan.hierarchy = pm.hierarchy;

    // graph inputs start resident in their assigned distribution
    std::map<std::string, std::vector<std::string>> holder;
    std::map<std::string, std::vector<Region>> holder_region;
    for (const auto& [id, spec] : g.tensors) {
      holder[id].assign(devices, "");
      holder_region[id].assign(devices, Region{});
      if (!g.is_graph_input(id)) continue;
      for (int d = 0; d < devices; ++d) {
        ExecNode n;
        n.kind = NodeKind::buffer;
        n.device = d;
        n.tensor = id;
        n.phase = "init";
        n.region = tile_block(spec.shape, a.at(id), index_to_coord(d, a.k));
        holder_region[id][d] = n.region;
        holder[id][d] = add(n);
      }
    }

    for (const auto& op : g.ops) {
      OpCommCost cc = op_comm_cost(g, op, a);

      // convert each input to the execution tiling of the chosen form
      std::vector<std::vector<std::string>> exec_inputs(op.inputs.size());
      for (std::size_t j = 0; j < op.inputs.size(); ++j) {
        const std::string& t = op.inputs[j];
        const Shape& shape = g.tensor(t).shape;
        exec_inputs[j].resize(devices);
        std::string phase = op.id + ":in" + std::to_string(j);
        for (int d = 0; d < devices; ++d) {
          Region need = tile_block(shape, cc.input_exec_tilings[j], index_to_coord(d, a.k));
          exec_inputs[j][d] = assemble(t, d, need, phase, holder.at(t),
                                       holder_region.at(t), d, -1);
        }
      }

      // local sub-ops
      const Shape& out_shape = g.tensor(op.output).shape;
      std::vector<std::string> subs(devices);
      std::vector<Region> sub_region(devices);
      std::vector<int> sub_partial(devices);
      int partials = cc.output_state.partial_count();
      std::string out_phase = op.id + ":out";
      for (int d = 0; d < devices; ++d) {
        TileCoord c = index_to_coord(d, a.k);
        ExecNode n;
        n.kind = NodeKind::sub_op;
        n.device = d;
        n.tensor = op.output;
        n.op = op.id;
        n.phase = out_phase;
        n.region = cc.output_state.block(out_shape, c);
        n.partial = partials > 1 ? cc.output_state.partial_index(c) : -1;
        for (std::size_t j = 0; j < op.inputs.size(); ++j)
          n.sources.push_back(exec_inputs[j][d]);
        sub_region[d] = n.region;
        sub_partial[d] = n.partial;
        subs[d] = add(n);
      }

      // recombine into the assigned distribution of the output
      for (int d = 0; d < devices; ++d) {
        Region dst = tile_block(out_shape, a.at(op.output), index_to_coord(d, a.k));
        if (partials == 1) {
          holder[op.output][d] =
              assemble(op.output, d, dst, out_phase, subs, sub_region, d, -1);
        } else {
          std::vector<std::string> assembled;
          for (int p = 0; p < partials; ++p) {
            std::vector<std::string> held(devices);
            std::vector<Region> have(devices);
            for (int e = 0; e < devices; ++e)
              if (sub_partial[e] == p) {
                held[e] = subs[e];
                have[e] = sub_region[e];
              }
            int local = sub_partial[d] == p ? d : -1;
            assembled.push_back(
                assemble(op.output, d, dst, out_phase, held, have, local, p));
          }
          ExecNode red;
          red.kind = NodeKind::reduce_partial;
          red.device = d;
          red.tensor = op.output;
          red.phase = out_phase;
          red.region = dst;
          red.sources = assembled;
          holder[op.output][d] = add(red);
        }
        holder_region[op.output][d] = dst;
      }
    }

    for (const auto& [id, nodes] : holder) plan.holders[id] = nodes;
  }
};

}  // namespace

ExecutionPlan build_execution_graph(const DataflowGraph& g, const TilingAssignment& a,
                                    const PlacementMap& pm) {
  if (pm.k != a.k) fail("placement depth does not match assignment depth");
  for (const auto& [id, spec] : g.tensors) {
    (void)spec;
    if (!a.tilings.count(id)) fail("assignment missing tensor " + id);
  }
  Builder b(g, a, pm);
  b.run();
  return b.plan;
}

namespace {

nlohmann::json region_to_json(const Region& r) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : r.bounds) j.push_back({b[0], b[1]});
  return j;
}

Region region_from_json(const nlohmann::json& j) {
  Region r;
  for (const auto& b : j) r.bounds.push_back({b[0].get<std::int64_t>(), b[1].get<std::int64_t>()});
  return r;
}

}  // namespace

std::string export_plan(const ExecutionPlan& p) {
  nlohmann::json j;
  j["k"] = p.k;
  j["devices"] = device_count(p.k);
  j["graph"] = nlohmann::json::parse(serialize_graph(p.graph));
  nlohmann::json ja = nlohmann::json::object();
  for (const auto& [id, t] : p.assignment.tilings) ja[id] = t.str();
  j["assignment"] = ja;
  nlohmann::json jh = nlohmann::json::array();
  for (const auto& l : p.hierarchy.levels)
    jh.push_back({{"label", l.label},
                  {"fanout", l.fanout},
                  {"bandwidth_bytes_per_s", l.bandwidth_bytes_per_s}});
  j["hierarchy"] = {{"levels", jh}};
  nlohmann::json jn = nlohmann::json::array();
  for (const auto& n : p.nodes) {
    nlohmann::json e;
    e["id"] = n.id;
    e["kind"] = to_string(n.kind);
    e["device"] = n.device;
    if (!n.tensor.empty()) e["tensor"] = n.tensor;
    if (!n.op.empty()) e["op"] = n.op;
    e["phase"] = n.phase;
    e["region"] = region_to_json(n.region);
    if (n.partial >= 0) e["partial"] = n.partial;
    if (!n.sources.empty()) e["sources"] = n.sources;
    if (n.kind == NodeKind::fetch) {
      e["bytes"] = n.bytes;
      e["src_device"] = n.src_device;
    }
    jn.push_back(std::move(e));
  }
  j["nodes"] = std::move(jn);
  nlohmann::json jho = nlohmann::json::object();
  for (const auto& [id, hs] : p.holders) jho[id] = hs;
  j["holders"] = std::move(jho);
  j["fetch_bytes_total"] = p.fetch_bytes_total();
  return j.dump(2) + "\n";
}

ExecutionPlan parse_plan(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed plan document: ") + e.what());
  }
  ExecutionPlan p;
  try {
    p.k = j.at("k").get<int>();
    p.graph = parse_graph(j.at("graph").dump());
    p.assignment.k = p.k;
    for (const auto& [id, t] : j.at("assignment").items())
      p.assignment.tilings[id] = Tiling::parse(t.get<std::string>());
    p.hierarchy = parse_hierarchy(j.at("hierarchy").dump());
    for (const auto& e : j.at("nodes")) {
      ExecNode n;
      n.id = e.at("id").get<std::string>();
      n.kind = node_kind_from_string(e.at("kind").get<std::string>());
      n.device = e.at("device").get<int>();
      n.tensor = e.value("tensor", "");
      n.op = e.value("op", "");
      n.phase = e.at("phase").get<std::string>();
      n.region = region_from_json(e.at("region"));
      n.partial = e.value("partial", -1);
      if (e.contains("sources"))
        n.sources = e.at("sources").get<std::vector<std::string>>();
      n.bytes = e.value("bytes", std::int64_t{0});
      n.src_device = e.value("src_device", -1);
      p.nodes.push_back(std::move(n));
    }
    for (const auto& [id, hs] : j.at("holders").items())
      p.holders[id] = hs.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed plan document: ") + e.what());
  }
  return p;
}

std::string export_dot(const ExecutionPlan& p) {
  std::string s = "digraph plan {\n  rankdir=TB;\n  node [shape=box, fontsize=9];\n";
  PlacementMap pm = place_k(p.k, p.hierarchy);
  for (int d = 0; d < device_count(p.k); ++d) {
    s += "  subgraph cluster_" + std::to_string(d) + " {\n";
    s += "    label=\"dev" + std::to_string(d) + " (" + pm.device_label(d) + ")\";\n";
    for (const auto& n : p.nodes) {
      if (n.device != d) continue;
      std::string label = to_string(n.kind);
      if (!n.op.empty()) label += " " + n.op;
      else if (!n.tensor.empty()) label += " " + n.tensor;
      if (n.partial >= 0) label += " p" + std::to_string(n.partial);
      s += "    " + n.id + " [label=\"" + label + "\"";
      if (n.kind == NodeKind::fetch) s += ", style=dashed";
      if (n.kind == NodeKind::sub_op) s += ", style=filled, fillcolor=lightgray";
      s += "];\n";
    }
    s += "  }\n";
  }
  for (const auto& n : p.nodes)
    for (const auto& src : n.sources) {
      s += "  " + src + " -> " + n.id;
      if (n.kind == NodeKind::fetch) s += " [label=\"" + std::to_string(n.bytes) + "B\"]";
      s += ";\n";
    }
  s += "}\n";
  return s;
}

}  // namespace tileplan
