#include "tileplan/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "tileplan/error.hpp"
#include "tileplan/oracle.hpp"

namespace tileplan {

TrafficReport simulate_traffic(const ExecutionPlan& p, const DeviceHierarchy& h) {
  PlacementMap pm = place_k(p.k, h);
  const std::size_t nlevels = h.levels.size();

  TrafficReport r;
  r.level_bytes.assign(nlevels, 0);
  r.device_in.assign(device_count(p.k), 0);
  r.device_out.assign(device_count(p.k), 0);

  std::map<std::string, std::size_t> phase_index;
  for (const auto& phase : p.phase_order()) {
    phase_index[phase] = r.phases.size();
    r.phases.push_back({phase, 0, std::vector<std::int64_t>(nlevels, 0), 0});
  }

  for (const auto& n : p.nodes) {
    if (n.kind != NodeKind::fetch) continue;
    if (n.src_device == n.device) fail("fetch node " + n.id + " is not cross-device");
    int lvl = pm.common_level(n.src_device, n.device);
    if (lvl < 0) fail("fetch node " + n.id + " has no crossing level");
    auto& row = r.phases[phase_index.at(n.phase)];
    row.bytes += n.bytes;
    row.level_bytes[static_cast<std::size_t>(lvl)] += n.bytes;
    r.level_bytes[static_cast<std::size_t>(lvl)] += n.bytes;
    r.device_in[static_cast<std::size_t>(n.device)] += n.bytes;
    r.device_out[static_cast<std::size_t>(n.src_device)] += n.bytes;
    r.total_bytes += n.bytes;
  }

  for (auto& row : r.phases) {
    double t = 0;
    for (std::size_t l = 0; l < nlevels; ++l)
      t = std::max(t, static_cast<double>(row.level_bytes[l]) /
                          h.levels[l].bandwidth_bytes_per_s);
    row.seconds = t;
    r.est_seconds += t;
  }
  return r;
}

NumericCheck execute_numeric(const ExecutionPlan& p, std::uint64_t seed) {
  return execute_numeric(p, seed, FunctionBindings::standard());
}

NumericCheck execute_numeric(const ExecutionPlan& p, std::uint64_t seed,
                             const FunctionBindings& fb) {
  const DataflowGraph& g = p.graph;
  SerialOptions opts;
  opts.bindings = fb;
  std::map<std::string, DenseTensor> serial = serial_execute(g, seed, opts);

  std::map<std::string, const OpNode*> ops;
  for (const auto& op : g.ops) ops[op.id] = &op;

  struct Value {
    Region region;
    DenseTensor dense;
  };
  std::map<std::string, Value> values;

  auto region_shape = [](const Region& r) {
    Shape s;
    for (const auto& b : r.bounds) s.push_back(b[1] - b[0]);
    return s;
  };

  for (const auto& n : p.nodes) {
    Value v;
    v.region = n.region;
    switch (n.kind) {
      case NodeKind::buffer: {
        const TensorSpec& spec = g.tensor(n.tensor);
        // buffers materialize graph inputs; reuse the serial values so both
        // executions start from identical bits
        v.dense = extract_region(serial.at(n.tensor), Region::full(spec.shape), n.region);
        break;
      }
      case NodeKind::slice:
      case NodeKind::fetch: {
        const Value& src = values.at(n.sources.at(0));
        v.dense = extract_region(src.dense, src.region, n.region);
        break;
      }
      case NodeKind::concat: {
        v.dense = DenseTensor::zeros(region_shape(n.region));
        std::int64_t pasted = 0;
        for (const auto& sid : n.sources) {
          const Value& piece = values.at(sid);
          paste_region(v.dense, n.region, piece.dense, piece.region, false);
          pasted += piece.region.volume();
        }
        if (pasted != n.region.volume())
          fail("concat node " + n.id + " pieces do not tile its region");
        break;
      }
      case NodeKind::reduce_partial: {
        v.dense = DenseTensor::zeros(region_shape(n.region));
        for (const auto& sid : n.sources) {
          const Value& piece = values.at(sid);
          if (!(piece.region == n.region))
            fail("reduce node " + n.id + " sums mismatched regions");
          paste_region(v.dense, n.region, piece.dense, piece.region, true);
        }
        break;
      }
      case NodeKind::sub_op: {
        const OpNode* op = ops.at(n.op);
        std::vector<const DenseTensor*> ins;
        for (const auto& sid : n.sources) ins.push_back(&values.at(sid).dense);
        v.dense = run_op_dense(*op, ins, fb);
        if (v.dense.shape != region_shape(n.region))
          fail("sub-op node " + n.id + " produced a mismatched block");
        break;
      }
    }
    values[n.id] = std::move(v);
  }

  NumericCheck c;
  c.seed = seed;
  for (const auto& [tid, holders] : p.holders) {
    const TensorSpec& spec = g.tensor(tid);
    const DenseTensor& truth = serial.at(tid);
    for (const auto& hid : holders) {
      if (hid.empty()) fail("tensor " + tid + " has no holder on some device");
      const Value& held = values.at(hid);
      DenseTensor want = extract_region(truth, Region::full(spec.shape), held.region);
      for (std::int64_t i = 0; i < want.elements(); ++i) {
        double diff = std::abs(held.dense.data[static_cast<std::size_t>(i)] -
                               want.data[static_cast<std::size_t>(i)]);
        double rel = diff / std::max(std::abs(want.data[static_cast<std::size_t>(i)]), 1.0);
        c.max_abs = std::max(c.max_abs, diff);
        c.max_rel = std::max(c.max_rel, rel);
        ++c.values;
      }
    }
  }
  return c;
}

}  // namespace tileplan
