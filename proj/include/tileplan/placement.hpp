#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tileplan/tiling.hpp"

namespace tileplan {

// One branching level of a machine, fastest links innermost.
struct HierarchyLevel {
  std::string label;                 // e.g. "machine", "gpu"
  int fanout = 2;                    // children per node at this level
  double bandwidth_bytes_per_s = 0;  // links crossing this level
};

struct DeviceHierarchy {
  std::vector<HierarchyLevel> levels;  // outermost first
  int device_count() const;
  // number of binary cut levels the hierarchy absorbs (log2 of device count);
  // every fanout must be a power of two
  int total_bits() const;
  // bits consumed by levels strictly above `level` plus this one, i.e. the
  // cut depth at which two coords must agree to share this level's subtree
  int bits_through(std::size_t level) const;
};

// Parse a hierarchy document: {"levels":[{"label":..,"fanout":..,
// "bandwidth_gbps":..}|{"bandwidth_bytes_per_s":..}, ...]}.
DeviceHierarchy parse_hierarchy(const std::string& json_text);

struct PlacementMap {
  DeviceHierarchy hierarchy;
  int k = 0;  // cut depth being placed
  std::vector<std::string> warnings;

  int device_of(const TileCoord& c) const;     // branch bits, outermost first
  TileCoord coord_of(int device) const;
  // deepest level (largest index) whose subtree contains both devices;
  // -1 when the devices are identical
  int common_level(int a, int b) const;
  std::string device_label(int device) const;  // e.g. "m0.g1"
};

// Bind k cut levels onto the hierarchy: outermost cut to outermost level.
// The hierarchy must provide exactly 2^k devices.
PlacementMap place_k(int k, const DeviceHierarchy& h);

}  // namespace tileplan
