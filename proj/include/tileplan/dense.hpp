#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tileplan/graph.hpp"
#include "tileplan/tiling.hpp"

namespace tileplan {

struct DenseTensor {
  Shape shape;
  std::vector<double> data;

  static DenseTensor zeros(Shape s);
  std::int64_t elements() const {
    std::int64_t n = 1;
    for (auto e : shape) n *= e;
    return n;
  }
  double& at(const std::vector<std::int64_t>& idx);
  double at(const std::vector<std::int64_t>& idx) const;
};

// Deterministic values in [-1, 1], independent of platform and of the
// order tensors are filled in: the stream is keyed by (seed, tensor id).
DenseTensor seeded_tensor(const Shape& shape, std::uint64_t seed, const std::string& tensor_id);

struct FunctionBindings {
  std::function<double(double)> fn;       // pointwise_fn
  std::function<double(double)> fn_grad;  // pointwise_fn_grad
  static FunctionBindings standard();     // tanh and its derivative
};

// Runs one op on dense operands.  Works on full tensors and on tiles:
// only batch/channel-style dimensions are ever narrowed by tilings, so
// the kernels see consistent contraction extents.
DenseTensor run_op_dense(const OpNode& op, const std::vector<const DenseTensor*>& inputs,
                         const FunctionBindings& fb);

// Copy or accumulate `piece` (covering `piece_region`) into `dst`
// (covering `dst_region`); the piece region must lie inside the dst region.
void paste_region(DenseTensor& dst, const Region& dst_region, const DenseTensor& piece,
                  const Region& piece_region, bool accumulate);

// Extract `sub` from `src` (covering `src_region`).
DenseTensor extract_region(const DenseTensor& src, const Region& src_region, const Region& sub);

}  // namespace tileplan
