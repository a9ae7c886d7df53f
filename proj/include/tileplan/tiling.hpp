#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tileplan/error.hpp"

namespace tileplan {

using Shape = std::vector<std::int64_t>;

// One branch bit per cut, outermost cut first.
using TileCoord = std::vector<std::uint8_t>;

// A single half-split step: partition one dimension in two, or replicate.
class BasicTiling {
 public:
  static BasicTiling partition(int dim);
  static BasicTiling replicate() { return BasicTiling(-1); }

  bool is_replicate() const { return dim_ < 0; }
  int dim() const;

  // Partition(0) < Partition(1) < ... < Replicate
  int order_key() const { return dim_ < 0 ? 1 << 20 : dim_; }
  bool operator==(const BasicTiling& o) const { return dim_ == o.dim_; }
  bool operator!=(const BasicTiling& o) const { return dim_ != o.dim_; }
  bool operator<(const BasicTiling& o) const { return order_key() < o.order_key(); }

  // "R" and "C" for dims 0 and 1, "P<d>" beyond, "r" for replicate.
  std::string str() const;
  static BasicTiling from_token(const std::string& tok);

 private:
  explicit BasicTiling(int d) : dim_(d) {}
  int dim_;
};

// Sequence of half-split steps, outermost first.  Empty = trivial tiling.
struct Tiling {
  std::vector<BasicTiling> cuts;

  int k() const { return static_cast<int>(cuts.size()); }
  std::string str() const;  // tokens joined by spaces, "phi" when empty
  static Tiling parse(const std::string& text);

  bool operator==(const Tiling& o) const { return cuts == o.cuts; }
  bool operator!=(const Tiling& o) const { return !(*this == o); }
  bool operator<(const Tiling& o) const;  // lexicographic in basic-tiling order
};

Tiling compose(const Tiling& outer, const Tiling& inner);

// Order-free summary: how many times each dimension is cut plus the
// replication count.  Two tilings with equal canonical form produce the
// same multiset of tile blocks.
struct CanonicalTiling {
  std::map<int, int> partition_counts;  // dim -> count, entries > 0 only
  int replicate_count = 0;

  int total() const;
  Tiling normal_form() const;  // P0^a P1^b ... r^c
  bool operator==(const CanonicalTiling& o) const {
    return partition_counts == o.partition_counts && replicate_count == o.replicate_count;
  }
};

CanonicalTiling canonicalize(const Tiling& t);

// Axis-aligned box of index space, [lo, hi) per dimension.
struct Region {
  std::vector<std::array<std::int64_t, 2>> bounds;

  static Region full(const Shape& shape);
  std::int64_t volume() const;
  bool empty() const { return volume() == 0; }
  Region intersect(const Region& o) const;
  // this minus o as disjoint boxes (skips empty pieces)
  std::vector<Region> subtract(const Region& o) const;
  bool contains_point(const std::vector<std::int64_t>& idx) const;
  bool operator==(const Region& o) const { return bounds == o.bounds; }
};

// Shape of one tile.  Throws when a cut dimension has odd extent,
// naming the offending dimension.
Shape tile_shape(const Shape& shape, const Tiling& t);

// Block of the full index space owned by the tile at `coord`.
Region tile_block(const Shape& shape, const Tiling& t, const TileCoord& coord);

// Per-tensor tiling choices for one graph; every tiling has length k.
struct TilingAssignment {
  int k = 0;
  std::map<std::string, Tiling> tilings;

  const Tiling& at(const std::string& tensor_id) const;
};

inline int device_count(int k) { return 1 << k; }

// Pack coordinate bits, outermost cut = most significant bit.
int coord_to_index(const TileCoord& c);
TileCoord index_to_coord(int index, int k);

}  // namespace tileplan
