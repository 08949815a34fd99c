#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "microweather/geometry.hpp"
#include "microweather/types.hpp"

namespace mw {

/// Plane wave in (lat, lon) degrees: amp * cos(2*pi*(ky*lat + kx*lon) + phase).
struct FourierMode {
  double ky = 0.0;  // cycles per degree
  double kx = 0.0;
  double phase = 0.0;
  double amp = 0.0;
  friend bool operator==(const FourierMode&, const FourierMode&) = default;
};

struct FourierField {
  std::vector<FourierMode> modes;
  [[nodiscard]] double value(const GeoPoint& p) const noexcept;
  friend bool operator==(const FourierField&, const FourierField&) = default;
};

/// Static surface descriptor s(x) and the saturating response A * tanh(W s + b) that the synthetic
/// world adds to the coarse state. Stored with the dataset so the truth can be re-evaluated anywhere.
struct SurfaceResponse {
  std::size_t surface_dim = 0;
  std::size_t units = 0;                     // G hidden units
  std::vector<FourierField> latent;          // R shared factors
  std::vector<FourierField> idiosyncratic;   // one per surface dimension
  std::vector<double> mixing;                // D x R
  double idiosyncratic_weight = 0.0;
  std::vector<double> w;                     // G x D
  std::vector<double> b;                     // G
  std::vector<double> a;                     // 4 x G

  [[nodiscard]] std::vector<double> surface_at(const GeoPoint& p) const;
  [[nodiscard]] WeatherVector response(std::span<const double> s) const;
  [[nodiscard]] WeatherVector response_at(const GeoPoint& p) const { return response(surface_at(p)); }

  friend bool operator==(const SurfaceResponse&, const SurfaceResponse&) = default;
};

}  // namespace mw
