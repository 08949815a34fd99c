#pragma once

#include <array>
#include <cstdint>

#include "microweather/dataset.hpp"

namespace mw {

struct SyntheticWorldSpec {
  std::size_t n_backbone = 40;
  std::size_t n_train = 10;
  std::size_t n_val = 5;
  std::size_t n_test = 5;
  double lat0 = 37.0;
  double lon0 = -100.0;
  double dlat = 0.25;
  double dlon = 0.25;
  std::size_t nlat = 8;
  std::size_t nlon = 8;
  std::size_t time_steps = 720;
  Timestamp start = 438288;  // 2020-01-01T00Z
  std::size_t surface_dim = 8;
  std::size_t latent_factors = 2;
  std::size_t response_units = 4;
  double smooth_fraction = 0.5;        // variance share of smooth (0.5-2 deg) surface structure
  double idiosyncratic_weight = 0.3;   // per-dimension independent surface texture
  double response_gain = 1.5;          // scale of W s before tanh
  std::array<double, kChannels> channel_mean{15.0, 8.0, 1.5, 0.5};
  std::array<double, kChannels> coarse_scale{4.0, 3.5, 2.5, 2.5};
  std::array<double, kChannels> surface_scale{1.5, 1.2, 1.2, 1.2};
  std::array<double, kChannels> noise_std{0.3, 0.3, 0.3, 0.3};
  /// Target quality fraction per role (backbone, train, val, test); missing hours are whole rows.
  std::array<double, 4> role_quality{0.9, 0.75, 0.65, 0.65};
  SurfaceKind surface_kind = SurfaceKind::Embedding;
  std::size_t coarse_chip_bands = 2;  // chips mode: last bands are 30 m, 16x16
  std::uint64_t seed = 7;

  /// Throws InvalidConfig.
  void validate() const;
};

/// Chip geometry used for synthetic worlds: fine bands 48 px at 10 m, coarse bands 16 px at 30 m.
inline constexpr double kFinePixelM = 10.0;
inline constexpr double kCoarsePixelM = 30.0;

ChipSchema synthetic_chip_schema(const SyntheticWorldSpec& spec);

/// Band stack centred on `p`, sampled from the surface function.
ChipStack synthetic_chips(const SurfaceResponse& truth, const GeoPoint& p, const ChipSchema& schema);

/// Surface feature of kind `kind` at `p`.
SurfaceFeature synthetic_surface(const SurfaceResponse& truth, const GeoPoint& p, SurfaceKind kind,
                                 const ChipSchema& schema);

/// y = coarse(x, t) + A g(s(x)) + noise. Station series carry noisy y; dataset.truth holds the
/// surface-response coefficients. Deterministic in spec.seed.
Dataset generate_synthetic_world(const SyntheticWorldSpec& spec);

/// Noiseless truth at any point inside the hull. Throws InvalidConfig if the dataset has no truth.
WeatherVector ground_truth(const Dataset& dataset, double lat, double lon, Timestamp t);

}  // namespace mw
