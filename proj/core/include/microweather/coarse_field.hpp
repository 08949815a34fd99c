#pragma once

#include "microweather/types.hpp"

namespace mw {

/// Lower-left node and fractional offsets of a point inside the grid hull.
struct BilinearStencil {
  std::size_t i0 = 0;
  std::size_t j0 = 0;
  double wy = 0.0;  // fraction toward node i0 + 1
  double wx = 0.0;  // fraction toward node j0 + 1
};

/// Throws OutOfHull. Points within 1e-12 grid units of a node snap onto it, so node queries are
/// bit-exact.
BilinearStencil bilinear_stencil(const CoarseField& field, double lat, double lon);

WeatherVector sample_coarse(const CoarseField& field, const BilinearStencil& stencil, std::size_t time_index) noexcept;

/// Bilinear sample at (lat, lon) and timestamp t. Throws OutOfHull, UnknownTimestamp.
WeatherVector sample_coarse(const CoarseField& field, double lat, double lon, Timestamp t);

}  // namespace mw
