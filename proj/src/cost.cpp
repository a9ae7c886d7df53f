#include "tileplan/cost.hpp"

#include <algorithm>
#include <sstream>

namespace tileplan {

TilingState TilingState::concrete(const Tiling& t) {
  TilingState s;
  s.comps.reserve(t.cuts.size());
  for (auto& c : t.cuts) s.comps.push_back(StateComponent::from_basic(c));
  return s;
}

TilingState TilingState::all_reduce(int k) {
  TilingState s;
  s.comps.assign(k, StateComponent{StateComponent::reduce, -1});
  return s;
}

TilingState TilingState::parse(const std::string& text) {
  TilingState s;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    if (tok == "phi") continue;
    if (tok == "red")
      s.comps.push_back({StateComponent::reduce, -1});
    else
      s.comps.push_back(StateComponent::from_basic(BasicTiling::from_token(tok)));
  }
  return s;
}

bool TilingState::has_reduce() const { return reduce_count() > 0; }

int TilingState::reduce_count() const {
  int n = 0;
  for (auto& c : comps)
    if (c.kind == StateComponent::reduce) ++n;
  return n;
}

std::string TilingState::str() const {
  if (comps.empty()) return "phi";
  std::string out;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (i) out += ' ';
    switch (comps[i].kind) {
      case StateComponent::partition: out += BasicTiling::partition(comps[i].dim).str(); break;
      case StateComponent::replicate: out += 'r'; break;
      case StateComponent::reduce: out += "red"; break;
    }
  }
  return out;
}

Region TilingState::block(const Shape& shape, const TileCoord& coord) const {
  if (coord.size() != comps.size()) fail("coordinate length does not match cut count");
  Region r = Region::full(shape);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (comps[i].kind != StateComponent::partition) continue;
    int d = comps[i].dim;
    if (d >= static_cast<int>(shape.size()))
      fail("partition dimension " + std::to_string(d) + " out of range for rank " +
           std::to_string(shape.size()));
    std::int64_t len = r.bounds[d][1] - r.bounds[d][0];
    if (len % 2 != 0)
      fail("dimension " + std::to_string(d) + " with extent " + std::to_string(len) +
           " is not divisible by 2");
    std::int64_t mid = r.bounds[d][0] + len / 2;
    if (coord[i])
      r.bounds[d][0] = mid;
    else
      r.bounds[d][1] = mid;
  }
  return r;
}

int TilingState::partial_index(const TileCoord& coord) const {
  int idx = 0;
  for (std::size_t i = 0; i < comps.size(); ++i)
    if (comps[i].kind == StateComponent::reduce) idx = (idx << 1) | (coord[i] ? 1 : 0);
  return idx;
}

TilingState SourceTiling::state(int k) const {
  if (is_reduction) return TilingState::all_reduce(k);
  if (tiling.k() != k) fail("cut-count mismatch between source tiling and k");
  return TilingState::concrete(tiling);
}

std::int64_t state_conversion_cost(const TilingState& src, const Tiling& dst,
                                   const Shape& shape, int k) {
  if (src.k() != k) fail("cut-count mismatch: source has " + std::to_string(src.k()) +
                         " cuts, expected " + std::to_string(k));
  if (dst.k() != k) fail("cut-count mismatch: destination has " + std::to_string(dst.k()) +
                         " cuts, expected " + std::to_string(k));
  const std::int64_t partials = src.partial_count();
  std::int64_t total = 0;
  const int n = device_count(k);
  for (int d = 0; d < n; ++d) {
    TileCoord coord = index_to_coord(d, k);
    Region need = tile_block(shape, dst, coord);
    Region held = src.block(shape, coord);
    total += partials * need.volume() - need.intersect(held).volume();
  }
  return total;
}

std::int64_t conversion_cost(const SourceTiling& src, const Tiling& dst, const Shape& shape,
                             int k) {
  return state_conversion_cost(src.state(k), dst, shape, k);
}

std::vector<AlignedForm> aligned_forms(const DataflowGraph& g, const OpNode& op) {
  std::vector<AlignedForm> forms;
  switch (op.kind) {
    case OpKind::matmul:
    case OpKind::conv: {
      auto r = contraction_roles(op);
      AlignedForm row;
      row.name = "row";
      row.inputs = {BasicTiling::partition(r.in0_row), BasicTiling::replicate()};
      row.output = BasicTiling::partition(r.out_row);
      forms.push_back(row);
      AlignedForm col;
      col.name = "col";
      col.inputs = {BasicTiling::replicate(), BasicTiling::partition(r.in1_col)};
      col.output = BasicTiling::partition(r.out_col);
      forms.push_back(col);
      AlignedForm red;
      red.name = "reduce";
      red.inputs = {BasicTiling::partition(r.in0_inner), BasicTiling::partition(r.in1_inner)};
      red.output_reduce = true;
      forms.push_back(red);
      return forms;
    }
    case OpKind::elementwise: {
      const auto& out = g.tensor(op.output);
      int rank = static_cast<int>(out.shape.size());
      for (int d = 0; d < rank; ++d) {
        AlignedForm f;
        f.name = BasicTiling::partition(d).str();
        f.inputs.assign(op.inputs.size(), BasicTiling::partition(d));
        f.output = BasicTiling::partition(d);
        forms.push_back(f);
      }
      AlignedForm rep;
      rep.name = "rep";
      rep.inputs.assign(op.inputs.size(), BasicTiling::replicate());
      rep.output = BasicTiling::replicate();
      forms.push_back(rep);
      return forms;
    }
    case OpKind::generic: {
      AlignedForm f;
      f.name = "batch";
      int bd = op.generic().batch_dim;
      f.inputs.assign(op.inputs.size(), BasicTiling::partition(bd));
      f.output = BasicTiling::partition(bd);
      forms.push_back(f);
      return forms;
    }
  }
  fail("bad op kind");
}

OpCommCost op_comm_cost(const DataflowGraph& g, const OpNode& op, const TilingAssignment& a) {
  const int k = a.k;
  std::vector<const TensorSpec*> ins;
  for (auto& id : op.inputs) ins.push_back(&g.tensor(id));
  const TensorSpec& out = g.tensor(op.output);
  for (auto& id : op.inputs)
    if (a.at(id).k() != k)
      fail("tiling for tensor '" + id + "' has wrong cut count");
  if (a.at(op.output).k() != k)
    fail("tiling for tensor '" + op.output + "' has wrong cut count");

  auto forms = aligned_forms(g, op);
  const int nf = static_cast<int>(forms.size());

  OpCommCost best;
  bool have_best = false;
  std::vector<int> seq(k, 0);
  while (true) {
    OpCommCost cur;
    cur.form_seq = seq;
    cur.input_conv_elements.resize(ins.size());
    cur.input_exec_tilings.resize(ins.size());
    bool feasible = true;
    try {
      for (std::size_t j = 0; j < ins.size(); ++j) {
        Tiling exec;
        for (int i = 0; i < k; ++i) exec.cuts.push_back(forms[seq[i]].inputs[j]);
        std::int64_t c = state_conversion_cost(TilingState::concrete(a.at(op.inputs[j])),
                                               exec, ins[j]->shape, k);
        cur.input_exec_tilings[j] = std::move(exec);
        cur.input_conv_elements[j] = c;
        cur.elements += c;
        cur.bytes += c * ins[j]->dtype_bytes;
      }
      TilingState out_state;
      for (int i = 0; i < k; ++i) {
        if (forms[seq[i]].output_reduce)
          out_state.comps.push_back({StateComponent::reduce, -1});
        else
          out_state.comps.push_back(StateComponent::from_basic(forms[seq[i]].output));
      }
      std::int64_t c = state_conversion_cost(out_state, a.at(op.output), out.shape, k);
      cur.output_state = std::move(out_state);
      cur.output_conv_elements = c;
      cur.elements += c;
      cur.bytes += c * out.dtype_bytes;
    } catch (const Error&) {
      // A form can be infeasible when its execution tiling hits an odd
      // extent; skip it.  The assigned tilings themselves were validated
      // by tile_shape at assignment time.
      feasible = false;
    }
    if (feasible && (!have_best || cur.elements < best.elements)) {
      best = std::move(cur);
      have_best = true;
    }
    // next sequence, innermost digit fastest: lexicographic order
    int i = k - 1;
    for (; i >= 0; --i) {
      if (++seq[i] < nf) break;
      seq[i] = 0;
    }
    if (i < 0) break;
  }
  if (!have_best) fail("no feasible aligned form for op '" + op.id + "'");
  std::string names;
  for (int i = 0; i < k; ++i) {
    if (i) names += '+';
    names += forms[best.form_seq[i]].name;
  }
  if (k == 0) names = "none";
  best.form_str = std::move(names);
  return best;
}

CostReport graph_cost(const DataflowGraph& g, const TilingAssignment& a) {
  CostReport report;
  for (auto& op : g.ops) {
    auto c = op_comm_cost(g, op, a);
    report.per_op.push_back({op.id, c.elements, c.bytes, c.form_str});
    report.total_elements += c.elements;
    report.total_bytes += c.bytes;
  }
  return report;
}

RefCost reference_strategy_cost(int layers, int width, int batch, int devices,
                                int dtype_bytes, RefStrategy s, int groups) {
  if (layers < 1 || width < 1 || batch < 1 || devices < 1 || dtype_bytes < 1)
    fail("reference cost needs positive parameters");
  const std::int64_t param_bytes =
      static_cast<std::int64_t>(width) * width * layers * dtype_bytes;
  const std::int64_t act_bytes =
      static_cast<std::int64_t>(batch) * width * layers * dtype_bytes;
  RefCost rc;
  switch (s) {
    case RefStrategy::data:
      rc.total_bytes = param_bytes * devices * 2;
      break;
    case RefStrategy::model:
      rc.total_bytes = act_bytes * devices * 2;
      break;
    case RefStrategy::hybrid: {
      if (groups < 1 || devices % groups != 0)
        fail("hybrid grouping must divide the device count");
      if (act_bytes % groups != 0)
        fail("hybrid grouping must divide the activation volume");
      rc.total_bytes = param_bytes * groups * 2 +
                       groups * (act_bytes / groups) * (devices / groups) * 2;
      break;
    }
  }
  rc.megabytes = static_cast<double>(rc.total_bytes) / 1e6;
  return rc;
}

}  // namespace tileplan
