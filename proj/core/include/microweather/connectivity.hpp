#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "microweather/geometry.hpp"
#include "microweather/types.hpp"

namespace mw {

/// Which station-station (self) and target-station (cross) attention pairs are allowed.
struct AttentionMask {
  std::size_t n_backbone = 0;
  std::size_t n_targets = 0;
  std::vector<std::uint8_t> self_mask;   // n_backbone x n_backbone, row-major, 1 = allowed
  std::vector<std::uint8_t> cross_mask;  // n_targets x n_backbone
  bool fell_back_to_full = false;        // requested geometry was degenerate

  [[nodiscard]] bool self_allowed(std::size_t i, std::size_t j) const { return self_mask[i * n_backbone + j] != 0; }
  [[nodiscard]] bool cross_allowed(std::size_t t, std::size_t j) const { return cross_mask[t * n_backbone + j] != 0; }

  static AttentionMask full(std::size_t n_backbone, std::size_t n_targets);
  /// Throws MaskRowEmpty if a self row lacks its diagonal or a cross row has no allowed entry.
  void validate() const;
};

struct Site {
  std::string id;
  GeoPoint position;
};

/// Full: everything allowed. Delaunay: self pairs joined by a Delaunay edge (plus the diagonal);
/// each target sees the vertices of its enclosing (or nearest) triangle and their one-ring.
/// KNearest: each target sees its k nearest stations by great-circle distance (ties by id); the
/// self mask stays full. Degenerate Delaunay input falls back to Full with a warning.
AttentionMask build_connectivity(std::span<const Site> backbone, std::span<const GeoPoint> targets,
                                 const Connectivity& connectivity);

}  // namespace mw
