#include "tileplan/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tileplan {

using nlohmann::json;

std::string to_string(OpKind k) {
  switch (k) {
    case OpKind::matmul: return "matmul";
    case OpKind::elementwise: return "elementwise";
    case OpKind::conv: return "conv";
    case OpKind::generic: return "generic";
  }
  fail("bad op kind");
}

std::string to_string(TensorRole r) {
  switch (r) {
    case TensorRole::input: return "input";
    case TensorRole::weight: return "weight";
    case TensorRole::activation: return "activation";
    case TensorRole::gradient: return "gradient";
    case TensorRole::temp: return "temp";
  }
  fail("bad tensor role");
}

std::string to_string(EwFunc f) {
  switch (f) {
    case EwFunc::add: return "add";
    case EwFunc::sub: return "sub";
    case EwFunc::scale: return "scale";
    case EwFunc::pointwise_fn: return "pointwise_fn";
    case EwFunc::pointwise_fn_grad: return "pointwise_fn_grad";
  }
  fail("bad elementwise function");
}

std::string to_string(ConvMode m) {
  switch (m) {
    case ConvMode::forward: return "forward";
    case ConvMode::grad_weight: return "grad_weight";
    case ConvMode::grad_input: return "grad_input";
  }
  fail("bad conv mode");
}

static OpKind kind_from_string(const std::string& s) {
  if (s == "matmul") return OpKind::matmul;
  if (s == "elementwise") return OpKind::elementwise;
  if (s == "conv") return OpKind::conv;
  if (s == "generic") return OpKind::generic;
  fail("unknown op kind '" + s + "'");
}

static TensorRole role_from_string(const std::string& s) {
  if (s == "input") return TensorRole::input;
  if (s == "weight") return TensorRole::weight;
  if (s == "activation") return TensorRole::activation;
  if (s == "gradient") return TensorRole::gradient;
  if (s == "temp") return TensorRole::temp;
  fail("unknown tensor role '" + s + "'");
}

static EwFunc ewfunc_from_string(const std::string& s) {
  if (s == "add") return EwFunc::add;
  if (s == "sub") return EwFunc::sub;
  if (s == "scale") return EwFunc::scale;
  if (s == "pointwise_fn") return EwFunc::pointwise_fn;
  if (s == "pointwise_fn_grad") return EwFunc::pointwise_fn_grad;
  fail("unknown elementwise function '" + s + "'");
}

static ConvMode convmode_from_string(const std::string& s) {
  if (s == "forward") return ConvMode::forward;
  if (s == "grad_weight") return ConvMode::grad_weight;
  if (s == "grad_input") return ConvMode::grad_input;
  fail("unknown conv mode '" + s + "'");
}

const TensorSpec& DataflowGraph::tensor(const std::string& id) const {
  auto it = tensors.find(id);
  if (it == tensors.end()) fail("no tensor '" + id + "'");
  return it->second;
}

TensorSpec& DataflowGraph::tensor(const std::string& id) {
  auto it = tensors.find(id);
  if (it == tensors.end()) fail("no tensor '" + id + "'");
  return it->second;
}

bool DataflowGraph::is_graph_input(const std::string& id) const {
  return producer(id) == nullptr;
}

const OpNode* DataflowGraph::producer(const std::string& id) const {
  for (auto& op : ops)
    if (op.output == id) return &op;
  return nullptr;
}

std::vector<const OpNode*> DataflowGraph::consumers(const std::string& id) const {
  std::vector<const OpNode*> out;
  for (auto& op : ops)
    for (auto& in : op.inputs)
      if (in == id) {
        out.push_back(&op);
        break;
      }
  return out;
}

ContractionRoles contraction_roles(const OpNode& op) {
  ContractionRoles r;
  if (op.kind == OpKind::matmul) {
    auto& a = op.matmul();
    r.in0_row = a.transpose_a ? 1 : 0;
    r.in0_inner = a.transpose_a ? 0 : 1;
    r.in1_inner = a.transpose_b ? 1 : 0;
    r.in1_col = a.transpose_b ? 0 : 1;
    r.out_row = 0;
    r.out_col = 1;
    return r;
  }
  if (op.kind == OpKind::conv) {
    auto& a = op.conv();
    r.in0_row = a.row_dims[0];
    r.out_row = a.row_dims[1];
    r.in1_col = a.col_dims[0];
    r.out_col = a.col_dims[1];
    r.in0_inner = a.inner_dims[0];
    r.in1_inner = a.inner_dims[1];
    return r;
  }
  fail("op '" + op.id + "' has no contraction roles");
}

namespace {

void add_tensor(DataflowGraph& g, const std::string& id, Shape shape, TensorRole role) {
  TensorSpec t;
  t.id = id;
  t.shape = std::move(shape);
  t.role = role;
  if (!g.tensors.emplace(id, std::move(t)).second) fail("duplicate tensor id '" + id + "'");
}

OpNode make_matmul(const std::string& id, const std::string& a, const std::string& b,
                   const std::string& out, bool ta, bool tb) {
  OpNode op;
  op.id = id;
  op.kind = OpKind::matmul;
  op.inputs = {a, b};
  op.output = out;
  op.attrs = MatmulAttrs{ta, tb};
  return op;
}

OpNode make_ew(const std::string& id, std::vector<std::string> ins, const std::string& out,
               EwFunc fn, double scale = 0.0) {
  OpNode op;
  op.id = id;
  op.kind = OpKind::elementwise;
  op.inputs = std::move(ins);
  op.output = out;
  op.attrs = EwAttrs{fn, scale};
  return op;
}

}  // namespace

DataflowGraph gen_mlp(const MlpConfig& cfg) {
  if (cfg.dims.size() < 2) fail("gen_mlp needs at least two widths");
  if (cfg.batch < 1) fail("gen_mlp needs a positive batch");
  if (cfg.with_update && !cfg.with_backward) fail("weight update requires the backward sweep");
  const int L = static_cast<int>(cfg.dims.size()) - 1;

  DataflowGraph g;
  add_tensor(g, "x0", {cfg.batch, cfg.dims[0]}, TensorRole::input);
  for (int l = 1; l <= L; ++l) {
    std::string ls = std::to_string(l);
    add_tensor(g, "w" + ls, {cfg.dims[l - 1], cfg.dims[l]}, TensorRole::weight);
    add_tensor(g, "z" + ls, {cfg.batch, cfg.dims[l]}, TensorRole::activation);
    add_tensor(g, "x" + ls, {cfg.batch, cfg.dims[l]}, TensorRole::activation);
    g.ops.push_back(make_matmul("fwd" + ls, "x" + std::to_string(l - 1), "w" + ls, "z" + ls,
                                false, false));
    g.ops.push_back(make_ew("act" + ls, {"z" + ls}, "x" + ls, EwFunc::pointwise_fn));
  }

  if (cfg.with_backward) {
    // Gradient seed at the head, then per layer: dW, dX, and the pointwise
    // derivative applied to the propagated gradient.
    add_tensor(g, "g" + std::to_string(L), {cfg.batch, cfg.dims[L]}, TensorRole::gradient);
    g.ops.push_back(make_ew("seed", {"x" + std::to_string(L)}, "g" + std::to_string(L),
                            EwFunc::pointwise_fn_grad));
    for (int l = L; l >= 1; --l) {
      std::string ls = std::to_string(l);
      std::string ps = std::to_string(l - 1);
      add_tensor(g, "gw" + ls, {cfg.dims[l - 1], cfg.dims[l]}, TensorRole::gradient);
      g.ops.push_back(make_matmul("bwd_w" + ls, "x" + ps, "g" + ls, "gw" + ls, true, false));
      add_tensor(g, "h" + ps, {cfg.batch, cfg.dims[l - 1]}, TensorRole::gradient);
      g.ops.push_back(make_matmul("bwd_x" + ls, "g" + ls, "w" + ls, "h" + ps, false, true));
      if (l > 1) {
        add_tensor(g, "g" + ps, {cfg.batch, cfg.dims[l - 1]}, TensorRole::gradient);
        g.ops.push_back(make_ew("dact" + ps, {"h" + ps}, "g" + ps, EwFunc::pointwise_fn_grad));
      }
    }
  }

  if (cfg.with_update) {
    for (int l = 1; l <= L; ++l) {
      std::string ls = std::to_string(l);
      add_tensor(g, "wd" + ls, {cfg.dims[l - 1], cfg.dims[l]}, TensorRole::temp);
      add_tensor(g, "w" + ls + "_next", {cfg.dims[l - 1], cfg.dims[l]}, TensorRole::weight);
      g.ops.push_back(make_ew("step" + ls, {"gw" + ls}, "wd" + ls, EwFunc::scale,
                              cfg.learning_rate));
      g.ops.push_back(make_ew("upd" + ls, {"w" + ls, "wd" + ls}, "w" + ls + "_next",
                              EwFunc::sub));
    }
  }
  return g;
}

DataflowGraph gen_cnn(std::int64_t batch, std::array<std::int64_t, 2> image_hw,
                      const std::vector<std::int64_t>& channels,
                      std::array<std::int64_t, 2> filter_hw, bool with_backward) {
  if (channels.size() < 2) fail("gen_cnn needs at least two channel counts");
  if (batch < 1) fail("gen_cnn needs a positive batch");
  const int L = static_cast<int>(channels.size()) - 1;

  auto conv_op = [](const std::string& id, ConvMode mode, const std::string& a,
                    const std::string& b, const std::string& out) {
    OpNode op;
    op.id = id;
    op.kind = OpKind::conv;
    op.inputs = {a, b};
    op.output = out;
    ConvAttrs at;
    at.mode = mode;
    switch (mode) {
      case ConvMode::forward:
        // activations x weights -> activations; contraction over input channels
        at.row_dims = {0, 0};
        at.col_dims = {0, 1};
        at.inner_dims = {1, 1};
        break;
      case ConvMode::grad_weight:
        // activations x output gradient -> weight gradient; contraction over batch
        at.row_dims = {1, 1};
        at.col_dims = {1, 0};
        at.inner_dims = {0, 0};
        break;
      case ConvMode::grad_input:
        // output gradient x weights -> input gradient; contraction over output channels
        at.row_dims = {0, 0};
        at.col_dims = {1, 1};
        at.inner_dims = {1, 0};
        break;
    }
    op.attrs = at;
    return op;
  };

  DataflowGraph g;
  std::int64_t h = image_hw[0], w = image_hw[1];
  add_tensor(g, "a0", {batch, channels[0], h, w}, TensorRole::input);
  std::vector<std::array<std::int64_t, 2>> fmap{{h, w}};
  for (int l = 1; l <= L; ++l) {
    std::string ls = std::to_string(l);
    h = h - filter_hw[0] + 1;
    w = w - filter_hw[1] + 1;
    if (h < 1 || w < 1) fail("feature map shrinks below 1x1 at layer " + ls);
    fmap.push_back({h, w});
    add_tensor(g, "k" + ls, {channels[l], channels[l - 1], filter_hw[0], filter_hw[1]},
               TensorRole::weight);
    add_tensor(g, "z" + ls, {batch, channels[l], h, w}, TensorRole::activation);
    add_tensor(g, "a" + ls, {batch, channels[l], h, w}, TensorRole::activation);
    g.ops.push_back(conv_op("fwd" + ls, ConvMode::forward, "a" + std::to_string(l - 1),
                            "k" + ls, "z" + ls));
    g.ops.push_back(make_ew("act" + ls, {"z" + ls}, "a" + ls, EwFunc::pointwise_fn));
  }

  if (with_backward) {
    add_tensor(g, "g" + std::to_string(L),
               {batch, channels[L], fmap[L][0], fmap[L][1]}, TensorRole::gradient);
    g.ops.push_back(make_ew("seed", {"a" + std::to_string(L)}, "g" + std::to_string(L),
                            EwFunc::pointwise_fn_grad));
    for (int l = L; l >= 1; --l) {
      std::string ls = std::to_string(l);
      std::string ps = std::to_string(l - 1);
      add_tensor(g, "gk" + ls, {channels[l], channels[l - 1], filter_hw[0], filter_hw[1]},
                 TensorRole::gradient);
      g.ops.push_back(conv_op("bwd_k" + ls, ConvMode::grad_weight, "a" + ps, "g" + ls,
                              "gk" + ls));
      add_tensor(g, "h" + ps, {batch, channels[l - 1], fmap[l - 1][0], fmap[l - 1][1]},
                 TensorRole::gradient);
      g.ops.push_back(conv_op("bwd_a" + ls, ConvMode::grad_input, "g" + ls, "k" + ls,
                              "h" + ps));
      if (l > 1) {
        add_tensor(g, "g" + ps, {batch, channels[l - 1], fmap[l - 1][0], fmap[l - 1][1]},
                   TensorRole::gradient);
        g.ops.push_back(make_ew("dact" + ps, {"h" + ps}, "g" + ps, EwFunc::pointwise_fn_grad));
      }
    }
  }
  return g;
}

static json attrs_to_json(const OpNode& op) {
  json j = json::object();
  switch (op.kind) {
    case OpKind::matmul: {
      auto& a = op.matmul();
      j["transpose_a"] = a.transpose_a;
      j["transpose_b"] = a.transpose_b;
      break;
    }
    case OpKind::elementwise: {
      auto& a = op.elementwise();
      j["function"] = to_string(a.fn);
      if (a.fn == EwFunc::scale) j["scale"] = a.scale;
      break;
    }
    case OpKind::conv: {
      auto& a = op.conv();
      j["mode"] = to_string(a.mode);
      j["row_dims"] = a.row_dims;
      j["col_dims"] = a.col_dims;
      j["inner_dims"] = a.inner_dims;
      break;
    }
    case OpKind::generic: {
      j["batch_dim"] = op.generic().batch_dim;
      break;
    }
  }
  return j;
}

static void attrs_from_json(OpNode& op, const json& j) {
  switch (op.kind) {
    case OpKind::matmul: {
      MatmulAttrs a;
      a.transpose_a = j.value("transpose_a", false);
      a.transpose_b = j.value("transpose_b", false);
      op.attrs = a;
      break;
    }
    case OpKind::elementwise: {
      EwAttrs a;
      a.fn = ewfunc_from_string(j.at("function").get<std::string>());
      a.scale = j.value("scale", 0.0);
      op.attrs = a;
      break;
    }
    case OpKind::conv: {
      ConvAttrs a;
      a.mode = convmode_from_string(j.at("mode").get<std::string>());
      a.row_dims = j.at("row_dims").get<std::array<int, 2>>();
      a.col_dims = j.at("col_dims").get<std::array<int, 2>>();
      a.inner_dims = j.at("inner_dims").get<std::array<int, 2>>();
      op.attrs = a;
      break;
    }
    case OpKind::generic: {
      GenericAttrs a;
      a.batch_dim = j.value("batch_dim", 0);
      op.attrs = a;
      break;
    }
  }
}

std::string serialize_graph(const DataflowGraph& g) {
  json j;
  j["tensors"] = json::array();
  for (auto& [id, t] : g.tensors) {
    json tj;
    tj["id"] = t.id;
    tj["shape"] = t.shape;
    tj["dtype_bytes"] = t.dtype_bytes;
    tj["role"] = to_string(t.role);
    j["tensors"].push_back(std::move(tj));
  }
  j["ops"] = json::array();
  for (auto& op : g.ops) {
    json oj;
    oj["id"] = op.id;
    oj["kind"] = to_string(op.kind);
    oj["inputs"] = op.inputs;
    oj["output"] = op.output;
    oj["attrs"] = attrs_to_json(op);
    j["ops"].push_back(std::move(oj));
  }
  return j.dump(2) + "\n";
}

DataflowGraph parse_graph(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("malformed graph document: ") + e.what());
  }
  DataflowGraph g;
  try {
    if (!j.contains("tensors") || !j.contains("ops"))
      fail("graph document needs 'tensors' and 'ops'");
    for (auto& tj : j.at("tensors")) {
      TensorSpec t;
      t.id = tj.at("id").get<std::string>();
      t.shape = tj.at("shape").get<Shape>();
      t.dtype_bytes = tj.value("dtype_bytes", 4);
      t.role = role_from_string(tj.value("role", std::string("temp")));
      if (!g.tensors.emplace(t.id, t).second) fail("duplicate tensor id '" + t.id + "'");
    }
    for (auto& oj : j.at("ops")) {
      OpNode op;
      op.id = oj.at("id").get<std::string>();
      op.kind = kind_from_string(oj.at("kind").get<std::string>());
      op.inputs = oj.at("inputs").get<std::vector<std::string>>();
      op.output = oj.at("output").get<std::string>();
      attrs_from_json(op, oj.value("attrs", json::object()));
      g.ops.push_back(std::move(op));
    }
  } catch (const json::exception& e) {
    fail(std::string("malformed graph document: ") + e.what());
  }
  return g;
}

namespace {

// Expected output shape, or nullopt when inputs are inconsistent.
std::optional<Shape> infer_output_shape(const DataflowGraph& g, const OpNode& op,
                                        std::string& why) {
  std::vector<const TensorSpec*> ins;
  for (auto& id : op.inputs) ins.push_back(&g.tensor(id));
  switch (op.kind) {
    case OpKind::matmul: {
      if (ins.size() != 2) { why = "matmul needs two inputs"; return std::nullopt; }
      auto& A = ins[0]->shape;
      auto& B = ins[1]->shape;
      if (A.size() != 2 || B.size() != 2) { why = "matmul inputs must be rank 2"; return std::nullopt; }
      auto r = contraction_roles(op);
      if (A[r.in0_inner] != B[r.in1_inner]) {
        why = "matmul inner extents differ (" + std::to_string(A[r.in0_inner]) + " vs " +
              std::to_string(B[r.in1_inner]) + ")";
        return std::nullopt;
      }
      return Shape{A[r.in0_row], B[r.in1_col]};
    }
    case OpKind::elementwise: {
      if (ins.empty()) { why = "elementwise needs at least one input"; return std::nullopt; }
      for (auto* t : ins)
        if (t->shape != ins[0]->shape) { why = "elementwise inputs must share a shape"; return std::nullopt; }
      return ins[0]->shape;
    }
    case OpKind::conv: {
      if (ins.size() != 2) { why = "conv needs two inputs"; return std::nullopt; }
      auto& a = op.conv();
      auto& A = ins[0]->shape;
      auto& B = ins[1]->shape;
      if (A.size() != 4 || B.size() != 4) { why = "conv inputs must be rank 4"; return std::nullopt; }
      if (A[a.inner_dims[0]] != B[a.inner_dims[1]]) {
        why = "conv contraction extents differ";
        return std::nullopt;
      }
      switch (a.mode) {
        case ConvMode::forward: {
          std::int64_t ho = A[2] - B[2] + 1, wo = A[3] - B[3] + 1;
          if (ho < 1 || wo < 1) { why = "conv filter larger than image"; return std::nullopt; }
          return Shape{A[a.row_dims[0]], B[a.col_dims[0]], ho, wo};
        }
        case ConvMode::grad_weight: {
          std::int64_t fh = A[2] - B[2] + 1, fw = A[3] - B[3] + 1;
          if (fh < 1 || fw < 1) { why = "gradient map larger than image"; return std::nullopt; }
          return Shape{B[a.col_dims[0]], A[a.row_dims[0]], fh, fw};
        }
        case ConvMode::grad_input: {
          std::int64_t h = A[2] + B[2] - 1, w = A[3] + B[3] - 1;
          return Shape{A[a.row_dims[0]], B[a.col_dims[0]], h, w};
        }
      }
      why = "bad conv mode";
      return std::nullopt;
    }
    case OpKind::generic: {
      if (ins.empty()) { why = "generic needs at least one input"; return std::nullopt; }
      return ins[0]->shape;  // shape-preserving by convention
    }
  }
  why = "bad op kind";
  return std::nullopt;
}

}  // namespace

void validate_and_infer(DataflowGraph& g) {
  std::vector<std::string> diags;
  auto diag = [&](const std::string& m) { diags.push_back(m); };

  for (auto& [id, t] : g.tensors) {
    if (id != t.id) diag("tensor key '" + id + "' does not match id '" + t.id + "'");
    if (t.dtype_bytes < 1) diag("tensor '" + id + "' has non-positive dtype_bytes");
    for (auto e : t.shape)
      if (e < 1) diag("tensor '" + id + "' has non-positive extent");
  }

  std::set<std::string> produced;
  std::set<std::string> op_ids;
  for (auto& op : g.ops) {
    if (!op_ids.insert(op.id).second) diag("duplicate op id '" + op.id + "'");
    bool refs_ok = true;
    for (auto& in : op.inputs)
      if (!g.has_tensor(in)) {
        diag("op '" + op.id + "' reads undeclared tensor '" + in + "'");
        refs_ok = false;
      }
    if (!g.has_tensor(op.output)) {
      diag("op '" + op.id + "' writes undeclared tensor '" + op.output + "'");
      refs_ok = false;
    }
    if (!refs_ok) continue;

    for (auto& in : op.inputs) {
      if (in == op.output) diag("op '" + op.id + "' consumes its own output: cycle");
      if (!produced.count(in) && !g.is_graph_input(in) && g.producer(in) != nullptr)
        diag("op '" + op.id + "' reads tensor '" + in + "' before its producer: op order is not topological");
    }
    if (produced.count(op.output))
      diag("tensor '" + op.output + "' is produced by more than one op");
    produced.insert(op.output);
    if (g.tensor(op.output).role == TensorRole::input)
      diag("op '" + op.id + "' writes tensor '" + op.output + "' with role input");

    std::string why;
    auto want = infer_output_shape(g, op, why);
    if (!want) {
      diag("op '" + op.id + "': " + why);
      continue;
    }
    auto& out = g.tensor(op.output);
    if (out.shape.empty())
      out.shape = *want;
    else if (out.shape != *want)
      diag("op '" + op.id + "' output shape mismatch for tensor '" + op.output + "'");
  }

  for (auto& [id, t] : g.tensors)
    if (t.shape.empty()) diag("tensor '" + id + "' has no shape and none is derivable");
  if (!diags.empty()) {
    std::string all = diags[0];
    for (std::size_t i = 1; i < diags.size(); ++i) all += "; " + diags[i];
    fail(all);
  }
}

}  // namespace tileplan
