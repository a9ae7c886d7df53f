#include "doctest.h"

#include <set>

#include "tileplan/error.hpp"
#include "tileplan/graph.hpp"

using namespace tileplan;

namespace {

DataflowGraph train_mlp(int depth, int batch = 8, int width = 8) {
  MlpConfig c;
  c.batch = batch;
  c.dims.assign(static_cast<std::size_t>(depth) + 1, width);
  c.with_backward = true;
  c.with_update = true;
  return gen_mlp(c);
}

}  // namespace

TEST_CASE("perceptron training graph has three matmuls per layer") {
  for (int depth : {1, 2, 3}) {
    DataflowGraph g = train_mlp(depth);
    validate_and_infer(g);
    int matmuls = 0;
    for (const auto& op : g.ops)
      if (op.kind == OpKind::matmul) ++matmuls;
    CHECK(matmuls == 3 * depth);  // forward, weight grad, input grad
  }
}

TEST_CASE("each weight is consumed by forward, input-grad, and update ops") {
  DataflowGraph g = train_mlp(2);
  auto uses = g.consumers("w1");
  std::set<std::string> ids;
  for (const auto* op : uses) ids.insert(op->id);
  CHECK(ids == std::set<std::string>{"fwd1", "bwd_x1", "upd1"});
}

TEST_CASE("updates write fresh weight tensors, keeping single assignment") {
  DataflowGraph g = train_mlp(2);
  validate_and_infer(g);
  CHECK(g.tensors.count("w1_next") == 1);
  CHECK(g.tensors.count("w2_next") == 1);
  std::set<std::string> produced;
  for (const auto& op : g.ops) CHECK(produced.insert(op.output).second);
}

TEST_CASE("input gradient reaches the graph input") {
  DataflowGraph g = train_mlp(1);
  CHECK(g.tensors.count("h0") == 1);  // dC/dx0 exists even for the first layer
  CHECK(g.tensor("h0").shape == g.tensor("x0").shape);
}

TEST_CASE("serialization round trips") {
  DataflowGraph g = train_mlp(2);
  std::string text = serialize_graph(g);
  DataflowGraph back = parse_graph(text);
  validate_and_infer(back);
  CHECK(serialize_graph(back) == text);
  CHECK(back.ops.size() == g.ops.size());
  CHECK(back.tensors.size() == g.tensors.size());
}

TEST_CASE("parse rejects malformed documents") {
  CHECK_THROWS_WITH_AS(parse_graph("{not json"), doctest::Contains("malformed"), Error);
  CHECK_THROWS_AS(parse_graph(R"({"tensors": [], "ops": 5})"), Error);
}

TEST_CASE("validation catches structural mistakes") {
  DataflowGraph g;
  g.tensors["a"] = {"a", {4, 4}, 4, TensorRole::input, false};
  g.tensors["b"] = {"b", {4, 4}, 4, TensorRole::activation, false};

  SUBCASE("undeclared tensor reference") {
    OpNode op;
    op.id = "e";
    op.kind = OpKind::elementwise;
    op.inputs = {"missing"};
    op.output = "b";
    op.attrs = EwAttrs{};
    g.ops.push_back(op);
    CHECK_THROWS_WITH_AS(validate_and_infer(g), doctest::Contains("missing"), Error);
  }
  SUBCASE("self consumption") {
    OpNode op;
    op.id = "e";
    op.kind = OpKind::elementwise;
    op.inputs = {"b"};
    op.output = "b";
    op.attrs = EwAttrs{};
    g.ops.push_back(op);
    CHECK_THROWS_AS(validate_and_infer(g), Error);
  }
  SUBCASE("two producers for one tensor") {
    for (const char* id : {"e1", "e2"}) {
      OpNode op;
      op.id = id;
      op.kind = OpKind::elementwise;
      op.inputs = {"a"};
      op.output = "b";
      op.attrs = EwAttrs{};
      g.ops.push_back(op);
    }
    CHECK_THROWS_AS(validate_and_infer(g), Error);
  }
  SUBCASE("matmul contraction extent mismatch") {
    g.tensors["w"] = {"w", {6, 4}, 4, TensorRole::weight, false};
    OpNode op;
    op.id = "mm";
    op.kind = OpKind::matmul;
    op.inputs = {"a", "w"};
    op.output = "b";
    op.attrs = MatmulAttrs{};
    g.ops.push_back(op);
    CHECK_THROWS_AS(validate_and_infer(g), Error);
  }
  SUBCASE("consumer listed before producer") {
    g.tensors["c"] = {"c", {4, 4}, 4, TensorRole::activation, false};
    OpNode use;
    use.id = "use";
    use.kind = OpKind::elementwise;
    use.inputs = {"b"};
    use.output = "c";
    use.attrs = EwAttrs{};
    OpNode make;
    make.id = "make";
    make.kind = OpKind::elementwise;
    make.inputs = {"a"};
    make.output = "b";
    make.attrs = EwAttrs{};
    g.ops.push_back(use);
    g.ops.push_back(make);
    CHECK_THROWS_AS(validate_and_infer(g), Error);
  }
}

TEST_CASE("convolution graphs shrink feature maps and mirror shapes backward") {
  DataflowGraph g = gen_cnn(8, {6, 6}, {2, 4}, {3, 3}, true);
  validate_and_infer(g);
  CHECK(g.tensor("z1").shape == Shape{8, 4, 4, 4});  // 6 - 3 + 1
  CHECK(g.tensor("gk1").shape == g.tensor("k1").shape);
  CHECK(g.tensor("h0").shape == g.tensor("a0").shape);
  int fwd = 0, gw = 0, gi = 0;
  for (const auto& op : g.ops) {
    if (op.kind != OpKind::conv) continue;
    switch (op.conv().mode) {
      case ConvMode::forward: ++fwd; break;
      case ConvMode::grad_weight: ++gw; break;
      case ConvMode::grad_input: ++gi; break;
    }
  }
  CHECK(fwd == 1);
  CHECK(gw == 1);
  CHECK(gi == 1);
  CHECK_THROWS_AS(gen_cnn(8, {2, 2}, {2, 4}, {3, 3}, false), Error);  // map underflow
}

TEST_CASE("contraction roles cover both matmul transposes and conv modes") {
  DataflowGraph g;
  g.tensors["x"] = {"x", {4, 6}, 4, TensorRole::input, false};
  g.tensors["y"] = {"y", {4, 8}, 4, TensorRole::weight, false};
  g.tensors["z"] = {"z", {6, 8}, 4, TensorRole::activation, false};
  OpNode op;
  op.id = "mm";
  op.kind = OpKind::matmul;
  op.inputs = {"x", "y"};
  op.output = "z";
  MatmulAttrs ma;
  ma.transpose_a = true;
  op.attrs = ma;
  g.ops.push_back(op);
  validate_and_infer(g);
  ContractionRoles r = contraction_roles(g.ops[0]);
  CHECK(r.in0_row == 1);    // row of the product comes from x's column index
  CHECK(r.in0_inner == 0);
  CHECK(r.in1_inner == 0);
  CHECK(r.in1_col == 1);

  DataflowGraph c = gen_cnn(8, {6, 6}, {2, 4}, {3, 3}, true);
  for (const auto& op2 : c.ops) {
    if (op2.kind != OpKind::conv) continue;
    ContractionRoles cr = contraction_roles(op2);
    CHECK(cr.out_row >= 0);
    CHECK(cr.out_col >= 0);
    CHECK(cr.in0_inner >= 0);
  }
}
