#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tileplan/tiling.hpp"

namespace tileplan {

enum class OpKind { matmul, elementwise, conv, generic };
enum class TensorRole { input, weight, activation, gradient, temp };
enum class EwFunc { add, sub, scale, pointwise_fn, pointwise_fn_grad };
enum class ConvMode { forward, grad_weight, grad_input };

std::string to_string(OpKind k);
std::string to_string(TensorRole r);
std::string to_string(EwFunc f);
std::string to_string(ConvMode m);

struct TensorSpec {
  std::string id;
  Shape shape;
  int dtype_bytes = 4;
  TensorRole role = TensorRole::temp;
  // Set only on tile graphs: the tensor stands for a per-group partial sum
  // of full extent and its shape is not narrowed by the owning cut.
  bool partial = false;

  std::int64_t elements() const {
    std::int64_t n = 1;
    for (auto e : shape) n *= e;
    return n;
  }
};

struct MatmulAttrs {
  bool transpose_a = false;
  bool transpose_b = false;
};

struct EwAttrs {
  EwFunc fn = EwFunc::add;
  double scale = 0.0;  // learning-rate scalar for scale nodes
};

// Dimension indices playing the row/column/inner roles of a
// two-operand contraction: pairs are {operand dim, other dim} as
// {input0, output}, {input1, output}, {input0, input1}.
struct ConvAttrs {
  ConvMode mode = ConvMode::forward;
  std::array<int, 2> row_dims = {0, 0};
  std::array<int, 2> col_dims = {0, 1};
  std::array<int, 2> inner_dims = {1, 1};
};

struct GenericAttrs {
  int batch_dim = 0;
};

struct OpNode {
  std::string id;
  OpKind kind = OpKind::generic;
  std::vector<std::string> inputs;
  std::string output;
  std::variant<MatmulAttrs, EwAttrs, ConvAttrs, GenericAttrs> attrs;

  const MatmulAttrs& matmul() const { return std::get<MatmulAttrs>(attrs); }
  const EwAttrs& elementwise() const { return std::get<EwAttrs>(attrs); }
  const ConvAttrs& conv() const { return std::get<ConvAttrs>(attrs); }
  const GenericAttrs& generic() const { return std::get<GenericAttrs>(attrs); }
};

struct DataflowGraph {
  std::map<std::string, TensorSpec> tensors;
  std::vector<OpNode> ops;  // a valid topological order

  const TensorSpec& tensor(const std::string& id) const;
  TensorSpec& tensor(const std::string& id);
  bool has_tensor(const std::string& id) const { return tensors.count(id) > 0; }
  // Tensor produced by no op.
  bool is_graph_input(const std::string& id) const;
  const OpNode* producer(const std::string& id) const;
  std::vector<const OpNode*> consumers(const std::string& id) const;
};

// Row/column/inner dimension roles of a contraction op (matmul or conv),
// resolved through transpose attrs or conv role markers.
struct ContractionRoles {
  int in0_row = 0, in0_inner = 1;
  int in1_inner = 0, in1_col = 1;
  int out_row = 0, out_col = 1;
};
ContractionRoles contraction_roles(const OpNode& op);

struct MlpConfig {
  std::int64_t batch = 1;
  std::vector<std::int64_t> dims;  // layer widths d_0..d_L, so L = dims.size()-1 layers
  bool with_backward = false;
  bool with_update = false;
  double learning_rate = 0.01;
};

// Fully-connected chain: per layer a matmul plus a pointwise_fn node,
// optionally followed by the backward sweep and weight updates.
DataflowGraph gen_mlp(const MlpConfig& cfg);

// Convolution chain over square feature maps (stride 1, no padding),
// optionally with the backward sweep.
DataflowGraph gen_cnn(std::int64_t batch, std::array<std::int64_t, 2> image_hw,
                      const std::vector<std::int64_t>& channels,
                      std::array<std::int64_t, 2> filter_hw, bool with_backward);

DataflowGraph parse_graph(const std::string& text);
std::string serialize_graph(const DataflowGraph& g);

// Checks shapes, references, single assignment and op order; fills shapes
// of produced tensors that are empty but derivable.  Throws with every
// problem found, not just the first.
void validate_and_infer(DataflowGraph& g);

}  // namespace tileplan
