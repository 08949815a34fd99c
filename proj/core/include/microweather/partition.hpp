#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>

#include "microweather/types.hpp"

namespace mw {

enum class Role : std::uint8_t { Backbone, Train, Val, Test };

std::string_view role_name(Role r) noexcept;
Role parse_role(std::string_view s);

/// Four pairwise-disjoint station-id sets.
struct Partition {
  std::set<std::string> backbone;
  std::set<std::string> train;
  std::set<std::string> val;
  std::set<std::string> test;

  [[nodiscard]] std::optional<Role> role_of(const std::string& id) const;
  [[nodiscard]] const std::set<std::string>& members(Role r) const;
  [[nodiscard]] std::set<std::string>& members(Role r);
  /// Throws PartitionError if sets overlap or contain ids outside `known_ids`.
  void validate(const std::set<std::string>& known_ids) const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Quality thresholds: backbone >= backbone_min; train in [train_min, backbone_min); val/test in
/// [holdout_min, train_min), split by a seeded per-station coin; lower quality dropped.
struct PartitionThresholds {
  double backbone_min = 0.80;
  double train_min = 0.70;
  double holdout_min = 0.60;
  double val_fraction = 0.5;  // probability a holdout station lands in val
  std::uint64_t seed = 0;
};

/// Full-scale counts (backbone / train / val / test); documentation only.
inline constexpr std::size_t kReferencePartitionCounts[4] = {8180, 2260, 854, 555};

/// Throws PartitionError when the backbone comes out empty.
Partition partition_stations(std::span<const Station> stations, const PartitionThresholds& thresholds);

}  // namespace mw
