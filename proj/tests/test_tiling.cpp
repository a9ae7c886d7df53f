#include "doctest.h"

#include <algorithm>
#include <set>

#include "tileplan/error.hpp"
#include "tileplan/tiling.hpp"

using namespace tileplan;

TEST_CASE("basic tiling tokens and order") {
  CHECK(BasicTiling::partition(0).str() == "R");
  CHECK(BasicTiling::partition(1).str() == "C");
  CHECK(BasicTiling::partition(3).str() == "P3");
  CHECK(BasicTiling::replicate().str() == "r");
  CHECK(BasicTiling::from_token("R") == BasicTiling::partition(0));
  CHECK(BasicTiling::from_token("P2") == BasicTiling::partition(2));
  CHECK(BasicTiling::from_token("r") == BasicTiling::replicate());
  CHECK(BasicTiling::partition(0) < BasicTiling::partition(1));
  CHECK(BasicTiling::partition(5) < BasicTiling::replicate());
  CHECK_THROWS_AS(BasicTiling::from_token("Q"), Error);
}

TEST_CASE("tiling parse and print round trip") {
  CHECK(Tiling{}.str() == "phi");
  CHECK(Tiling::parse("phi").k() == 0);
  Tiling t = Tiling::parse("R C r");
  CHECK(t.k() == 3);
  CHECK(t.str() == "R C r");
  CHECK(Tiling::parse(t.str()) == t);
}

TEST_CASE("composition appends inner cuts") {
  Tiling outer = Tiling::parse("R");
  Tiling inner = Tiling::parse("C r");
  CHECK(compose(outer, inner).str() == "R C r");
  CHECK(compose(Tiling{}, inner) == inner);
  CHECK(compose(outer, Tiling{}) == outer);
}

TEST_CASE("tile shape halves cut dimensions and rejects odd extents") {
  Shape s{4, 6};
  CHECK(tile_shape(s, Tiling::parse("R C")) == Shape{2, 3});
  CHECK(tile_shape(s, Tiling::parse("r r")) == Shape{4, 6});
  // 6 -> 3 -> cannot halve again
  CHECK_THROWS_WITH_AS(tile_shape(s, Tiling::parse("C C")),
                       doctest::Contains("dimension 1"), Error);
}

TEST_CASE("tile blocks partition the index space") {
  Shape s{4, 4};
  Tiling t = Tiling::parse("R C");
  std::int64_t covered = 0;
  std::set<std::vector<std::int64_t>> seen;
  for (int d = 0; d < device_count(2); ++d) {
    Region b = tile_block(s, t, index_to_coord(d, 2));
    covered += b.volume();
    for (std::int64_t i = b.bounds[0][0]; i < b.bounds[0][1]; ++i)
      for (std::int64_t j = b.bounds[1][0]; j < b.bounds[1][1]; ++j)
        CHECK(seen.insert({i, j}).second);
  }
  CHECK(covered == 16);
}

TEST_CASE("replicated cuts repeat the same block") {
  Shape s{4, 4};
  Tiling t = Tiling::parse("R r");
  Region b0 = tile_block(s, t, {0, 0});
  Region b1 = tile_block(s, t, {0, 1});
  CHECK(b0 == b1);
  Region other = tile_block(s, t, {1, 0});
  CHECK(b0.intersect(other).empty());
}

TEST_CASE("flattening: reordered cuts produce the same block multiset") {
  Shape s{8, 8};
  auto blocks = [&](const Tiling& t) {
    std::vector<std::vector<std::array<std::int64_t, 2>>> out;
    for (int d = 0; d < device_count(t.k()); ++d)
      out.push_back(tile_block(s, t, index_to_coord(d, t.k())).bounds);
    std::sort(out.begin(), out.end());
    return out;
  };
  for (auto [a, b] : {std::pair{"R C", "C R"}, {"R r C", "C r R"}, {"r R R", "R R r"}}) {
    Tiling ta = Tiling::parse(a), tb = Tiling::parse(b);
    CHECK(canonicalize(ta) == canonicalize(tb));
    CHECK(blocks(ta) == blocks(tb));
  }
  CHECK(canonicalize(Tiling::parse("C r R")).normal_form().str() == "R C r");
}

TEST_CASE("region subtract yields a disjoint exact cover") {
  Region a{{{0, 4}, {0, 4}}};
  Region b{{{1, 3}, {1, 3}}};
  auto pieces = a.subtract(b);
  std::int64_t vol = 0;
  for (const auto& p : pieces) {
    vol += p.volume();
    CHECK(p.intersect(b).empty());
    for (const auto& q : pieces)
      if (&p != &q) CHECK(p.intersect(q).empty());
  }
  CHECK(vol == 16 - 4);
  CHECK(a.subtract(a).empty());
  CHECK(a.subtract(Region{{{9, 12}, {9, 12}}}).size() == 1);
}

TEST_CASE("device index packing is outermost-first") {
  CHECK(coord_to_index({1, 0}) == 2);
  CHECK(coord_to_index({0, 1}) == 1);
  CHECK(index_to_coord(5, 3) == TileCoord{1, 0, 1});
  for (int d = 0; d < 8; ++d) CHECK(coord_to_index(index_to_coord(d, 3)) == d);
}
