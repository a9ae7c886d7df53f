#include "tileplan/dense.hpp"

#include <cmath>

namespace tileplan {

DenseTensor DenseTensor::zeros(Shape s) {
  DenseTensor t;
  t.shape = std::move(s);
  t.data.assign(static_cast<std::size_t>(t.elements()), 0.0);
  return t;
}

static std::int64_t flat_offset(const Shape& shape, const std::vector<std::int64_t>& idx) {
  std::int64_t off = 0;
  for (std::size_t d = 0; d < shape.size(); ++d) off = off * shape[d] + idx[d];
  return off;
}

double& DenseTensor::at(const std::vector<std::int64_t>& idx) {
  return data[static_cast<std::size_t>(flat_offset(shape, idx))];
}

double DenseTensor::at(const std::vector<std::int64_t>& idx) const {
  return data[static_cast<std::size_t>(flat_offset(shape, idx))];
}

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

DenseTensor seeded_tensor(const Shape& shape, std::uint64_t seed, const std::string& tensor_id) {
  DenseTensor t = DenseTensor::zeros(shape);
  std::uint64_t state = seed ^ fnv1a(tensor_id);
  for (auto& v : t.data) {
    std::uint64_t bits = splitmix64(state) >> 11;  // 53 bits
    v = static_cast<double>(bits) * (2.0 / 9007199254740992.0) - 1.0;
  }
  return t;
}

FunctionBindings FunctionBindings::standard() {
  FunctionBindings fb;
  fb.fn = [](double v) { return std::tanh(v); };
  fb.fn_grad = [](double v) {
    double t = std::tanh(v);
    return 1.0 - t * t;
  };
  return fb;
}

namespace {

DenseTensor run_matmul(const OpNode& op, const DenseTensor& A, const DenseTensor& B) {
  auto& at = op.matmul();
  const std::int64_t m = at.transpose_a ? A.shape[1] : A.shape[0];
  const std::int64_t kk = at.transpose_a ? A.shape[0] : A.shape[1];
  const std::int64_t kb = at.transpose_b ? B.shape[1] : B.shape[0];
  const std::int64_t n = at.transpose_b ? B.shape[0] : B.shape[1];
  if (kk != kb) fail("op '" + op.id + "': matmul inner extents differ");
  DenseTensor out = DenseTensor::zeros({m, n});
  for (std::int64_t i = 0; i < m; ++i)
    for (std::int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::int64_t p = 0; p < kk; ++p) {
        double a = at.transpose_a ? A.data[p * m + i] : A.data[i * kk + p];
        double b = at.transpose_b ? B.data[j * kk + p] : B.data[p * n + j];
        acc += a * b;
      }
      out.data[i * n + j] = acc;
    }
  return out;
}

DenseTensor run_conv(const OpNode& op, const DenseTensor& A, const DenseTensor& B) {
  auto mode = op.conv().mode;
  if (A.shape.size() != 4 || B.shape.size() != 4)
    fail("op '" + op.id + "': conv operands must be rank 4");
  if (mode == ConvMode::forward) {
    // A: (n, ci, h, w)  B: (co, ci, fh, fw) -> (n, co, h-fh+1, w-fw+1)
    const auto n = A.shape[0], ci = A.shape[1], h = A.shape[2], w = A.shape[3];
    const auto co = B.shape[0], fh = B.shape[2], fw = B.shape[3];
    if (B.shape[1] != ci) fail("op '" + op.id + "': conv channel extents differ");
    const auto ho = h - fh + 1, wo = w - fw + 1;
    DenseTensor out = DenseTensor::zeros({n, co, ho, wo});
    for (std::int64_t in = 0; in < n; ++in)
      for (std::int64_t oc = 0; oc < co; ++oc)
        for (std::int64_t y = 0; y < ho; ++y)
          for (std::int64_t x = 0; x < wo; ++x) {
            double acc = 0.0;
            for (std::int64_t c = 0; c < ci; ++c)
              for (std::int64_t u = 0; u < fh; ++u)
                for (std::int64_t v = 0; v < fw; ++v)
                  acc += A.at({in, c, y + u, x + v}) * B.at({oc, c, u, v});
            out.at({in, oc, y, x}) = acc;
          }
    return out;
  }
  if (mode == ConvMode::grad_weight) {
    // A: (n, ci, h, w)  B: (n, co, ho, wo) -> (co, ci, h-ho+1, w-wo+1)
    const auto n = A.shape[0], ci = A.shape[1], h = A.shape[2], w = A.shape[3];
    const auto co = B.shape[1], ho = B.shape[2], wo = B.shape[3];
    if (B.shape[0] != n) fail("op '" + op.id + "': conv batch extents differ");
    const auto fh = h - ho + 1, fw = w - wo + 1;
    DenseTensor out = DenseTensor::zeros({co, ci, fh, fw});
    for (std::int64_t oc = 0; oc < co; ++oc)
      for (std::int64_t c = 0; c < ci; ++c)
        for (std::int64_t u = 0; u < fh; ++u)
          for (std::int64_t v = 0; v < fw; ++v) {
            double acc = 0.0;
            for (std::int64_t in = 0; in < n; ++in)
              for (std::int64_t y = 0; y < ho; ++y)
                for (std::int64_t x = 0; x < wo; ++x)
                  acc += A.at({in, c, y + u, x + v}) * B.at({in, oc, y, x});
            out.at({oc, c, u, v}) = acc;
          }
    return out;
  }
  // grad_input.  A: (n, co, ho, wo)  B: (co, ci, fh, fw) -> (n, ci, ho+fh-1, wo+fw-1)
  const auto n = A.shape[0], co = A.shape[1], ho = A.shape[2], wo = A.shape[3];
  const auto ci = B.shape[1], fh = B.shape[2], fw = B.shape[3];
  if (B.shape[0] != co) fail("op '" + op.id + "': conv channel extents differ");
  const auto h = ho + fh - 1, w = wo + fw - 1;
  DenseTensor out = DenseTensor::zeros({n, ci, h, w});
  for (std::int64_t in = 0; in < n; ++in)
    for (std::int64_t c = 0; c < ci; ++c)
      for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
          double acc = 0.0;
          for (std::int64_t oc = 0; oc < co; ++oc)
            for (std::int64_t u = 0; u < fh; ++u)
              for (std::int64_t v = 0; v < fw; ++v) {
                std::int64_t yy = y - u, xx = x - v;
                if (yy < 0 || yy >= ho || xx < 0 || xx >= wo) continue;
                acc += A.at({in, oc, yy, xx}) * B.at({oc, c, u, v});
              }
          out.at({in, c, y, x}) = acc;
        }
  return out;
}

}  // namespace

DenseTensor run_op_dense(const OpNode& op, const std::vector<const DenseTensor*>& inputs,
                         const FunctionBindings& fb) {
  switch (op.kind) {
    case OpKind::matmul:
      if (inputs.size() != 2) fail("op '" + op.id + "': matmul needs two inputs");
      return run_matmul(op, *inputs[0], *inputs[1]);
    case OpKind::conv:
      if (inputs.size() != 2) fail("op '" + op.id + "': conv needs two inputs");
      return run_conv(op, *inputs[0], *inputs[1]);
    case OpKind::elementwise: {
      auto& at = op.elementwise();
      for (auto* in : inputs)
        if (in->shape != inputs[0]->shape)
          fail("op '" + op.id + "': elementwise operands must share a shape");
      DenseTensor out = DenseTensor::zeros(inputs[0]->shape);
      const std::size_t n = out.data.size();
      switch (at.fn) {
        case EwFunc::add:
          if (inputs.size() != 2) fail("op '" + op.id + "': add needs two inputs");
          for (std::size_t i = 0; i < n; ++i)
            out.data[i] = inputs[0]->data[i] + inputs[1]->data[i];
          break;
        case EwFunc::sub:
          if (inputs.size() != 2) fail("op '" + op.id + "': sub needs two inputs");
          for (std::size_t i = 0; i < n; ++i)
            out.data[i] = inputs[0]->data[i] - inputs[1]->data[i];
          break;
        case EwFunc::scale:
          if (inputs.size() != 1) fail("op '" + op.id + "': scale needs one input");
          for (std::size_t i = 0; i < n; ++i) out.data[i] = at.scale * inputs[0]->data[i];
          break;
        case EwFunc::pointwise_fn:
          if (inputs.size() != 1) fail("op '" + op.id + "': pointwise_fn needs one input");
          if (!fb.fn) fail("op '" + op.id + "': unbound function tag pointwise_fn");
          for (std::size_t i = 0; i < n; ++i) out.data[i] = fb.fn(inputs[0]->data[i]);
          break;
        case EwFunc::pointwise_fn_grad:
          if (inputs.size() != 1) fail("op '" + op.id + "': pointwise_fn_grad needs one input");
          if (!fb.fn_grad) fail("op '" + op.id + "': unbound function tag pointwise_fn_grad");
          for (std::size_t i = 0; i < n; ++i) out.data[i] = fb.fn_grad(inputs[0]->data[i]);
          break;
      }
      return out;
    }
    case OpKind::generic:
      fail("op '" + op.id + "': unbound function tag (generic ops have no numeric binding)");
  }
  fail("bad op kind");
}

namespace {

void walk_copy(DenseTensor& dst, const Region& dst_region, const DenseTensor& src,
               const Region& src_region, const Region& window, bool accumulate,
               bool src_is_window) {
  const int rank = static_cast<int>(window.bounds.size());
  std::vector<std::int64_t> idx(rank);
  for (int d = 0; d < rank; ++d) idx[d] = window.bounds[d][0];
  if (window.volume() == 0) return;
  while (true) {
    std::vector<std::int64_t> di(rank), si(rank);
    for (int d = 0; d < rank; ++d) {
      di[d] = idx[d] - dst_region.bounds[d][0];
      si[d] = idx[d] - src_region.bounds[d][0];
    }
    double v = src.at(si);
    if (accumulate)
      dst.at(di) += v;
    else
      dst.at(di) = v;
    int d = rank - 1;
    for (; d >= 0; --d) {
      if (++idx[d] < window.bounds[d][1]) break;
      idx[d] = window.bounds[d][0];
    }
    if (d < 0) break;
  }
  (void)src_is_window;
}

}  // namespace

void paste_region(DenseTensor& dst, const Region& dst_region, const DenseTensor& piece,
                  const Region& piece_region, bool accumulate) {
  if (piece_region.intersect(dst_region).volume() != piece_region.volume())
    fail("piece region escapes destination region");
  walk_copy(dst, dst_region, piece, piece_region, piece_region, accumulate, true);
}

DenseTensor extract_region(const DenseTensor& src, const Region& src_region, const Region& sub) {
  if (sub.intersect(src_region).volume() != sub.volume())
    fail("slice region escapes source region");
  Shape shape;
  for (auto& b : sub.bounds) shape.push_back(b[1] - b[0]);
  DenseTensor out = DenseTensor::zeros(shape);
  Region out_region = sub;
  walk_copy(out, out_region, src, src_region, sub, false, false);
  return out;
}

}  // namespace tileplan
