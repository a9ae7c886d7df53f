#include "tileplan/assign.hpp"

#include <algorithm>
#include <set>

#include "tileplan/cost.hpp"

namespace tileplan {

PresetKind preset_from_string(const std::string& s) {
  if (s == "data") return PresetKind::data;
  if (s == "model") return PresetKind::model;
  if (s == "hybrid") return PresetKind::hybrid;
  fail("unknown preset '" + s + "'");
}

std::string to_string(PresetKind p) {
  switch (p) {
    case PresetKind::data: return "data";
    case PresetKind::model: return "model";
    case PresetKind::hybrid: return "hybrid";
  }
  fail("bad preset");
}

namespace {

Tiling repeat(const BasicTiling& b, int n) {
  Tiling t;
  t.cuts.assign(n, b);
  return t;
}

}  // namespace

TilingAssignment preset_assignment(const DataflowGraph& g, PresetKind kind, int k) {
  if (k < 0) fail("cut count must be non-negative");
  if (kind == PresetKind::hybrid && k < 2) fail("hybrid preset requires k >= 2");
  const auto row = BasicTiling::partition(0);
  const auto col = BasicTiling::partition(1);
  const auto rep = BasicTiling::replicate();

  TilingAssignment a;
  a.k = k;
  for (auto& [id, t] : g.tensors) {
    Tiling choice;
    switch (kind) {
      case PresetKind::data:
        choice = t.role == TensorRole::weight ? repeat(rep, k) : repeat(row, k);
        break;
      case PresetKind::model:
        if (t.role == TensorRole::weight)
          choice = repeat(row, k);
        else if (t.role == TensorRole::activation) {
          if (t.shape.size() < 2)
            fail("tensor '" + id + "' lacks a column dimension for the model preset");
          choice = repeat(col, k);
        } else
          choice = repeat(rep, k);
        break;
      case PresetKind::hybrid: {
        const int kd = k / 2, km = k - kd;
        if (t.role == TensorRole::weight)
          choice = compose(repeat(rep, kd), repeat(row, km));
        else if (t.role == TensorRole::activation) {
          if (t.shape.size() < 2)
            fail("tensor '" + id + "' lacks a column dimension for the hybrid preset");
          choice = compose(repeat(row, kd), repeat(col, km));
        } else
          choice = compose(repeat(row, kd), repeat(rep, km));
        break;
      }
    }
    if (!t.shape.empty() && t.shape[0] >= 1) {
      // surface indivisibility now rather than at evaluation time
      tile_shape(t.shape, choice);
    }
    a.tilings.emplace(id, std::move(choice));
  }
  return a;
}

namespace {

// Dimensions of `tensor_id` that ops touching it can split without leaving
// every aligned form.  Splits outside this set are dominated by
// replication, so the search space drops them.
std::set<int> allowed_dims(const DataflowGraph& g, const std::string& tensor_id) {
  const auto& t = g.tensor(tensor_id);
  const int rank = static_cast<int>(t.shape.size());
  std::set<int> dims;
  for (int d = 0; d < rank; ++d) dims.insert(d);

  auto restrict_to = [&](std::set<int> keep) {
    std::set<int> merged;
    for (int d : dims)
      if (keep.count(d)) merged.insert(d);
    dims = std::move(merged);
  };

  for (auto& op : g.ops) {
    for (std::size_t j = 0; j < op.inputs.size(); ++j) {
      if (op.inputs[j] != tensor_id) continue;
      switch (op.kind) {
        case OpKind::matmul:
        case OpKind::conv: {
          auto r = contraction_roles(op);
          if (j == 0)
            restrict_to({r.in0_row, r.in0_inner});
          else
            restrict_to({r.in1_inner, r.in1_col});
          break;
        }
        case OpKind::elementwise:
          break;  // any dimension
        case OpKind::generic:
          restrict_to({op.generic().batch_dim});
          break;
      }
    }
    if (op.output == tensor_id) {
      switch (op.kind) {
        case OpKind::matmul:
        case OpKind::conv: {
          auto r = contraction_roles(op);
          restrict_to({r.out_row, r.out_col});
          break;
        }
        case OpKind::elementwise:
          break;
        case OpKind::generic:
          restrict_to({op.generic().batch_dim});
          break;
      }
    }
  }
  return dims;
}

void enumerate_multisets(const std::vector<int>& dims, const Shape& shape, int k, int from,
                         std::vector<int>& counts, int used, std::vector<Tiling>& out) {
  if (from == static_cast<int>(dims.size())) {
    CanonicalTiling c;
    for (std::size_t i = 0; i < dims.size(); ++i)
      if (counts[i] > 0) c.partition_counts[dims[i]] = counts[i];
    c.replicate_count = k - used;
    out.push_back(c.normal_form());
    return;
  }
  const int dim = dims[from];
  std::int64_t extent = shape[dim];
  for (int c = 0; used + c <= k; ++c) {
    if (c > 0) {
      if (extent % 2 != 0) break;
      extent /= 2;
    }
    counts[from] = c;
    enumerate_multisets(dims, shape, k, from + 1, counts, used + c, out);
  }
  counts[from] = 0;
}

}  // namespace

std::vector<Tiling> candidate_tilings_for(const DataflowGraph& g, const std::string& tensor_id,
                                          int k) {
  const auto& t = g.tensor(tensor_id);
  auto allowed = allowed_dims(g, tensor_id);
  std::vector<int> dims(allowed.begin(), allowed.end());
  std::vector<Tiling> out;
  std::vector<int> counts(dims.size(), 0);
  enumerate_multisets(dims, t.shape, k, 0, counts, 0, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::string, std::vector<Tiling>> candidate_tilings(const DataflowGraph& g, int k) {
  std::map<std::string, std::vector<Tiling>> out;
  for (auto& [id, t] : g.tensors) out.emplace(id, candidate_tilings_for(g, id, k));
  return out;
}

}  // namespace tileplan
