#include "microweather/partition.hpp"

#include <array>

#include "microweather/errors.hpp"
#include "microweather/hash.hpp"

namespace mw {

std::string_view role_name(Role r) noexcept {
  switch (r) {
    case Role::Backbone:
      return "backbone";
    case Role::Train:
      return "train";
    case Role::Val:
      return "val";
    case Role::Test:
      return "test";
  }
  return "?";
}

Role parse_role(std::string_view s) {
  if (s == "backbone") return Role::Backbone;
  if (s == "train") return Role::Train;
  if (s == "val") return Role::Val;
  if (s == "test") return Role::Test;
  throw SchemaError("unknown partition role '" + std::string(s) + "'");
}

std::optional<Role> Partition::role_of(const std::string& id) const {
  for (Role r : {Role::Backbone, Role::Train, Role::Val, Role::Test}) {
    if (members(r).contains(id)) return r;
  }
  return std::nullopt;
}

const std::set<std::string>& Partition::members(Role r) const {
  switch (r) {
    case Role::Backbone:
      return backbone;
    case Role::Train:
      return train;
    case Role::Val:
      return val;
    default:
      return test;
  }
}

std::set<std::string>& Partition::members(Role r) {
  return const_cast<std::set<std::string>&>(static_cast<const Partition&>(*this).members(r));
}

void Partition::validate(const std::set<std::string>& known_ids) const {
  const std::array<Role, 4> roles{Role::Backbone, Role::Train, Role::Val, Role::Test};
  std::set<std::string> seen;
  for (Role r : roles) {
    for (const auto& id : members(r)) {
      if (!known_ids.contains(id)) {
        throw PartitionError("partition lists unknown station '" + id + "'");
      }
      if (!seen.insert(id).second) {
        throw PartitionError("station '" + id + "' appears in more than one partition set");
      }
    }
  }
}

Partition partition_stations(std::span<const Station> stations, const PartitionThresholds& th) {
  Partition p;
  const std::uint64_t seed_mix = mix64(th.seed);
  for (const auto& s : stations) {
    const double q = s.quality_fraction;
    if (q >= th.backbone_min) {
      p.backbone.insert(s.id);
    } else if (q >= th.train_min) {
      p.train.insert(s.id);
    } else if (q >= th.holdout_min) {
      // Per-station coin keyed on (seed, id): independent of input order.
      const double u = unit_interval(mix64(seed_mix ^ fnv1a64(s.id)));
      (u < th.val_fraction ? p.val : p.test).insert(s.id);
    }
  }
  if (p.backbone.empty()) {
    throw PartitionError("no station reaches the backbone quality threshold " + std::to_string(th.backbone_min));
  }
  return p;
}

}  // namespace mw
