#include "tileplan/placement.hpp"

#include <cmath>

#include "json.hpp"

#include "tileplan/error.hpp"

namespace tileplan {

namespace {

int log2_exact(int v, const std::string& what) {
  int bits = 0;
  int p = 1;
  while (p < v) {
    p <<= 1;
    ++bits;
  }
  if (p != v) fail(what + " must be a power of two, got " + std::to_string(v));
  return bits;
}

}  // namespace

int DeviceHierarchy::device_count() const {
  int n = 1;
  for (const auto& l : levels) n *= l.fanout;
  return n;
}

int DeviceHierarchy::total_bits() const {
  int bits = 0;
  for (const auto& l : levels) bits += log2_exact(l.fanout, "fanout of level " + l.label);
  return bits;
}

int DeviceHierarchy::bits_through(std::size_t level) const {
  int bits = 0;
  for (std::size_t i = 0; i <= level && i < levels.size(); ++i)
    bits += log2_exact(levels[i].fanout, "fanout of level " + levels[i].label);
  return bits;
}

DeviceHierarchy parse_hierarchy(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed hierarchy document: ") + e.what());
  }
  DeviceHierarchy h;
  if (!j.is_object() || !j.contains("levels") || !j["levels"].is_array())
    fail("hierarchy document needs a 'levels' array");
  for (const auto& jl : j["levels"]) {
    HierarchyLevel l;
    l.label = jl.value("label", "level" + std::to_string(h.levels.size()));
    l.fanout = jl.value("fanout", 2);
    if (l.fanout < 2) fail("fanout of level " + l.label + " must be at least 2");
    if (jl.contains("bandwidth_bytes_per_s"))
      l.bandwidth_bytes_per_s = jl["bandwidth_bytes_per_s"].get<double>();
    else if (jl.contains("bandwidth_gbps"))  // 1e9 bytes per second
      l.bandwidth_bytes_per_s = jl["bandwidth_gbps"].get<double>() * 1e9;
    else
      fail("level " + l.label + " needs bandwidth_bytes_per_s or bandwidth_gbps");
    if (!(l.bandwidth_bytes_per_s > 0))
      fail("level " + l.label + " needs positive bandwidth");
    h.levels.push_back(std::move(l));
  }
  h.total_bits();  // validates fanouts
  return h;
}

int PlacementMap::device_of(const TileCoord& c) const { return coord_to_index(c); }

TileCoord PlacementMap::coord_of(int device) const { return index_to_coord(device, k); }

int PlacementMap::common_level(int a, int b) const {
  if (a == b) return -1;
  for (std::size_t j = 0; j < hierarchy.levels.size(); ++j) {
    int shift = k - hierarchy.bits_through(j);
    if ((a >> shift) != (b >> shift)) return static_cast<int>(j);
  }
  return static_cast<int>(hierarchy.levels.size()) - 1;
}

std::string PlacementMap::device_label(int device) const {
  std::string s;
  int consumed = 0;
  for (std::size_t j = 0; j < hierarchy.levels.size(); ++j) {
    int bits = hierarchy.bits_through(j) - consumed;
    int idx = (device >> (k - hierarchy.bits_through(j))) & ((1 << bits) - 1);
    if (!s.empty()) s += '.';
    s += hierarchy.levels[j].label + std::to_string(idx);
    consumed = hierarchy.bits_through(j);
  }
  if (s.empty()) s = "dev" + std::to_string(device);
  return s;
}

PlacementMap place_k(int k, const DeviceHierarchy& h) {
  if (k < 0) fail("cut depth must be nonnegative");
  if (h.total_bits() != k)
    fail("hierarchy provides " + std::to_string(h.device_count()) +
         " devices but the plan needs " + std::to_string(std::int64_t(1) << k));
  PlacementMap m;
  m.hierarchy = h;
  m.k = k;
  for (std::size_t j = 0; j + 1 < h.levels.size(); ++j) {
    if (h.levels[j].bandwidth_bytes_per_s > h.levels[j + 1].bandwidth_bytes_per_s)
      m.warnings.push_back("level " + h.levels[j].label +
                           " is faster than inner level " + h.levels[j + 1].label +
                           "; outer cuts land on the slower links");
  }
  return m;
}

}  // namespace tileplan
