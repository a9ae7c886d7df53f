#include "tileplan/tiling.hpp"

#include <algorithm>
#include <sstream>

namespace tileplan {

BasicTiling BasicTiling::partition(int dim) {
  if (dim < 0) fail("partition dimension must be non-negative");
  return BasicTiling(dim);
}

int BasicTiling::dim() const {
  if (is_replicate()) fail("replicate step has no partition dimension");
  return dim_;
}

std::string BasicTiling::str() const {
  if (is_replicate()) return "r";
  if (dim_ == 0) return "R";
  if (dim_ == 1) return "C";
  return "P" + std::to_string(dim_);
}

BasicTiling BasicTiling::from_token(const std::string& tok) {
  if (tok == "r") return replicate();
  if (tok == "R") return partition(0);
  if (tok == "C") return partition(1);
  if (tok.size() >= 2 && tok[0] == 'P') {
    for (std::size_t i = 1; i < tok.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(tok[i])))
        fail("bad tiling token '" + tok + "'");
    }
    return partition(std::stoi(tok.substr(1)));
  }
  fail("bad tiling token '" + tok + "'");
}

std::string Tiling::str() const {
  if (cuts.empty()) return "phi";
  std::string out;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    if (i) out += ' ';
    out += cuts[i].str();
  }
  return out;
}

Tiling Tiling::parse(const std::string& text) {
  Tiling t;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    if (tok == "phi") continue;
    t.cuts.push_back(BasicTiling::from_token(tok));
  }
  return t;
}

bool Tiling::operator<(const Tiling& o) const {
  return std::lexicographical_compare(cuts.begin(), cuts.end(), o.cuts.begin(), o.cuts.end());
}

Tiling compose(const Tiling& outer, const Tiling& inner) {
  Tiling out = outer;
  out.cuts.insert(out.cuts.end(), inner.cuts.begin(), inner.cuts.end());
  return out;
}

int CanonicalTiling::total() const {
  int n = replicate_count;
  for (auto& [dim, count] : partition_counts) n += count;
  return n;
}

Tiling CanonicalTiling::normal_form() const {
  Tiling t;
  for (auto& [dim, count] : partition_counts)
    for (int i = 0; i < count; ++i) t.cuts.push_back(BasicTiling::partition(dim));
  for (int i = 0; i < replicate_count; ++i) t.cuts.push_back(BasicTiling::replicate());
  return t;
}

CanonicalTiling canonicalize(const Tiling& t) {
  CanonicalTiling c;
  for (auto& cut : t.cuts) {
    if (cut.is_replicate())
      ++c.replicate_count;
    else
      ++c.partition_counts[cut.dim()];
  }
  return c;
}

Region Region::full(const Shape& shape) {
  Region r;
  r.bounds.reserve(shape.size());
  for (auto extent : shape) r.bounds.push_back({0, extent});
  return r;
}

std::int64_t Region::volume() const {
  std::int64_t v = 1;
  for (auto& b : bounds) {
    if (b[1] <= b[0]) return 0;
    v *= b[1] - b[0];
  }
  return v;
}

Region Region::intersect(const Region& o) const {
  if (bounds.size() != o.bounds.size()) fail("region rank mismatch");
  Region r;
  r.bounds.resize(bounds.size());
  for (std::size_t d = 0; d < bounds.size(); ++d) {
    r.bounds[d][0] = std::max(bounds[d][0], o.bounds[d][0]);
    r.bounds[d][1] = std::min(bounds[d][1], o.bounds[d][1]);
  }
  return r;
}

std::vector<Region> Region::subtract(const Region& o) const {
  Region overlap = intersect(o);
  if (overlap.empty()){
    if (empty()) return {};
    return {*this};
  }
  std::vector<Region> pieces;
  Region rest = *this;
  // Peel off the non-overlapping slabs dimension by dimension.
  for (std::size_t d = 0; d < bounds.size(); ++d) {
    if (rest.bounds[d][0] < overlap.bounds[d][0]) {
      Region low = rest;
      low.bounds[d][1] = overlap.bounds[d][0];
      if (!low.empty()) pieces.push_back(low);
      rest.bounds[d][0] = overlap.bounds[d][0];
    }
    if (rest.bounds[d][1] > overlap.bounds[d][1]) {
      Region high = rest;
      high.bounds[d][0] = overlap.bounds[d][1];
      if (!high.empty()) pieces.push_back(high);
      rest.bounds[d][1] = overlap.bounds[d][1];
    }
  }
  return pieces;
}

bool Region::contains_point(const std::vector<std::int64_t>& idx) const {
  if (idx.size() != bounds.size()) return false;
  for (std::size_t d = 0; d < bounds.size(); ++d)
    if (idx[d] < bounds[d][0] || idx[d] >= bounds[d][1]) return false;
  return true;
}

Shape tile_shape(const Shape& shape, const Tiling& t) {
  Shape s = shape;
  for (auto& cut : t.cuts) {
    if (cut.is_replicate()) continue;
    int d = cut.dim();
    if (d >= static_cast<int>(s.size()))
      fail("partition dimension " + std::to_string(d) + " out of range for rank " +
           std::to_string(s.size()));
    if (s[d] % 2 != 0)
      fail("dimension " + std::to_string(d) + " with extent " + std::to_string(s[d]) +
           " is not divisible by 2");
    s[d] /= 2;
  }
  return s;
}

Region tile_block(const Shape& shape, const Tiling& t, const TileCoord& coord) {
  if (static_cast<int>(coord.size()) != t.k()) fail("coordinate length does not match cut count");
  Region r = Region::full(shape);
  for (int i = 0; i < t.k(); ++i) {
    auto& cut = t.cuts[i];
    if (cut.is_replicate()) continue;
    int d = cut.dim();
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

const Tiling& TilingAssignment::at(const std::string& tensor_id) const {
  auto it = tilings.find(tensor_id);
  if (it == tilings.end()) fail("assignment is missing tensor '" + tensor_id + "'");
  return it->second;
}

int coord_to_index(const TileCoord& c) {
  int idx = 0;
  for (auto bit : c) idx = (idx << 1) | (bit ? 1 : 0);
  return idx;
}

TileCoord index_to_coord(int index, int k) {
  TileCoord c(k);
  for (int i = 0; i < k; ++i) c[i] = (index >> (k - 1 - i)) & 1;
  return c;
}

}  // namespace tileplan
