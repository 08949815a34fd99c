#pragma once

#include <span>
#include <vector>

#include "microweather/coarse_field.hpp"
#include "microweather/geometry.hpp"
#include "microweather/types.hpp"

namespace mw {

/// Linear-kernel RBF, phi(r) = r, with a polynomial tail of degree <= 1 and orthogonality side
/// conditions. The tail drops the directions the sites do not span (collinear or coincident
/// sites). Near-singular systems get diagonal jitter. Throws InsufficientStations (< 2 sites),
/// SingularSystem, DimensionMismatch.
std::vector<double> rbf_interpolate_planar(std::span<const PlanarPoint> sites, std::span<const double> values,
                                           std::span<const PlanarPoint> queries);

/// Same on geographic points, projected about the mean site position.
std::vector<double> rbf_interpolate(std::span<const GeoPoint> sites, std::span<const double> values,
                                    std::span<const GeoPoint> queries);

/// Bilinear interpolation of the coarse field. Throws OutOfHull, UnknownTimestamp.
WeatherVector era5_baseline(const CoarseField& coarse, const GeoPoint& query, Timestamp t);

}  // namespace mw
