#include "microweather/coarse_field.hpp"

#include <cmath>
#include <sstream>

#include "microweather/errors.hpp"

namespace mw {

namespace {

// Splits a fractional grid coordinate into (cell, weight) with the last cell absorbing the
// upper edge.
bool split_axis(double f, std::size_t n, std::size_t& cell, double& w) {
  constexpr double kSnap = 1e-12;
  const double nearest = std::round(f);
  if (std::abs(f - nearest) <= kSnap * std::max(1.0, std::abs(f))) f = nearest;
  const double upper = static_cast<double>(n - 1);
  if (!(f >= 0.0) || f > upper) return false;
  double base = std::floor(f);
  if (base >= upper) base = upper - 1.0;
  cell = static_cast<std::size_t>(base);
  w = f - base;
  return true;
}

}  // namespace

BilinearStencil bilinear_stencil(const CoarseField& field, double lat, double lon) {
  BilinearStencil s;
  const double fi = (lat - field.lat0) / field.dlat;
  const double fj = (lon - field.lon0) / field.dlon;
  if (!split_axis(fi, field.nlat, s.i0, s.wy) || !split_axis(fj, field.nlon, s.j0, s.wx)) {
    std::ostringstream msg;
    msg << "point (" << lat << ", " << lon << ") lies outside the coarse grid hull [" << field.lat0 << ", "
        << field.lat_max() << "] x [" << field.lon0 << ", " << field.lon_max() << "]";
    throw OutOfHull(msg.str());
  }
  return s;
}

WeatherVector sample_coarse(const CoarseField& field, const BilinearStencil& s, std::size_t t) noexcept {
  const WeatherVector& v00 = field.at(t, s.i0, s.j0);
  const WeatherVector& v01 = field.at(t, s.i0, s.j0 + 1);
  const WeatherVector& v10 = field.at(t, s.i0 + 1, s.j0);
  const WeatherVector& v11 = field.at(t, s.i0 + 1, s.j0 + 1);
  const double w00 = (1.0 - s.wy) * (1.0 - s.wx);
  const double w01 = (1.0 - s.wy) * s.wx;
  const double w10 = s.wy * (1.0 - s.wx);
  const double w11 = s.wy * s.wx;
  WeatherVector out;
  for (std::size_t c = 0; c < kChannels; ++c) {
    out[c] = w00 * v00[c] + w01 * v01[c] + w10 * v10[c] + w11 * v11[c];
  }
  return out;
}

WeatherVector sample_coarse(const CoarseField& field, double lat, double lon, Timestamp t) {
  const auto idx = field.times.index_of(t);
  if (!idx) throw UnknownTimestamp("timestamp " + std::to_string(t) + " is not on the coarse time axis");
  return sample_coarse(field, bilinear_stencil(field, lat, lon), *idx);
}

}  // namespace mw
