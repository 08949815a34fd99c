#include "microweather/types.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <set>

#include "microweather/errors.hpp"

namespace mw {

std::string_view channel_name(Channel c) noexcept {
  switch (c) {
    case Channel::Temperature:
      return "temperature";
    case Channel::Dewpoint:
      return "dewpoint";
    case Channel::WindU:
      return "wind_u";
    case Channel::WindV:
      return "wind_v";
  }
  return "?";
}

double WeatherVector::operator[](std::size_t c) const noexcept {
  switch (c) {
    case 0:
      return temperature_c;
    case 1:
      return dewpoint_c;
    case 2:
      return wind_u_ms;
    default:
      return wind_v_ms;
  }
}

double& WeatherVector::operator[](std::size_t c) noexcept {
  switch (c) {
    case 0:
      return temperature_c;
    case 1:
      return dewpoint_c;
    case 2:
      return wind_u_ms;
    default:
      return wind_v_ms;
  }
}

bool ChannelFlags::any_observed() const noexcept {
  for (auto s : state) {
    if (s == SlotState::Observed) return true;
  }
  return false;
}

ChannelFlags ChannelFlags::all(SlotState s) noexcept {
  ChannelFlags f;
  f.state.fill(s);
  return f;
}

WindUV wind_from_speed_dir(double speed_ms, double dir_deg) {
  if (!std::isfinite(speed_ms) || !std::isfinite(dir_deg)) {
    throw InvalidObservation("wind speed/direction must be finite");
  }
  if (speed_ms < 0.0) {
    throw InvalidObservation("negative wind speed " + std::to_string(speed_ms));
  }
  const double rad = dir_deg * std::numbers::pi / 180.0;
  return {-speed_ms * std::sin(rad), -speed_ms * std::cos(rad)};
}

WindSpeedDir wind_to_speed_dir(double u_ms, double v_ms) noexcept {
  const double speed = std::hypot(u_ms, v_ms);
  if (speed == 0.0) return {0.0, 0.0};
  double dir = std::atan2(-u_ms, -v_ms) * 180.0 / std::numbers::pi;
  if (dir < 0.0) dir += 360.0;
  if (dir >= 360.0) dir -= 360.0;
  return {speed, dir};
}

double circular_difference_deg(double a_deg, double b_deg) noexcept {
  double d = std::fmod(std::abs(a_deg - b_deg), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

std::optional<std::size_t> TimeAxis::index_of(Timestamp t) const noexcept {
  if (t < start || t >= start + static_cast<Timestamp>(count)) return std::nullopt;
  return static_cast<std::size_t>(t - start);
}

double compute_quality_fraction(const Series& series) noexcept {
  if (series.size() == 0) return 0.0;
  std::size_t valid = 0;
  for (const auto& f : series.flags) {
    valid += f.observed(0) ? 1 : 0;
    valid += f.observed(1) ? 1 : 0;
    valid += (f.observed(2) && f.observed(3)) ? 1 : 0;
  }
  return static_cast<double>(valid) / (3.0 * static_cast<double>(series.size()));
}

std::string_view resolution_name(Resolution r) noexcept { return r == Resolution::Fine ? "fine" : "coarse"; }

Resolution parse_resolution(std::string_view s) {
  if (s == "fine") return Resolution::Fine;
  if (s == "coarse") return Resolution::Coarse;
  throw SchemaError("unknown resolution tag '" + std::string(s) + "'");
}

void ChipSchema::validate() const {
  if (bands.empty()) throw InvalidConfig("chip schema has no bands");
  std::set<std::string> names;
  bool any_coarse = false;
  for (const auto& b : bands) {
    if (!names.insert(b.name).second) throw InvalidConfig("duplicate chip band '" + b.name + "'");
    any_coarse = any_coarse || b.resolution == Resolution::Coarse;
  }
  if (fine_px == 0) throw InvalidConfig("fine chip size must be positive");
  if (any_coarse && (coarse_px == 0 || fine_px % coarse_px != 0)) {
    throw InvalidConfig("fine chip size must be an integer multiple of the coarse chip size");
  }
}

void validate_embedding(const Embedding& e, std::size_t expected_dim) {
  if (e.vector.size() != expected_dim) {
    throw DimensionMismatch("surface embedding has length " + std::to_string(e.vector.size()) + ", expected " +
                            std::to_string(expected_dim));
  }
  for (double x : e.vector) {
    if (!std::isfinite(x)) throw EncodingError("surface embedding contains a non-finite value");
  }
}

void validate_chips(const ChipStack& chips, const ChipSchema& schema) {
  if (chips.bands.size() != schema.bands.size()) {
    throw ShapeError("chip stack has " + std::to_string(chips.bands.size()) + " bands, schema expects " +
                     std::to_string(schema.bands.size()));
  }
  for (std::size_t b = 0; b < chips.bands.size(); ++b) {
    const auto& chip = chips.bands[b];
    const auto& want = schema.bands[b];
    if (chip.band != want.name || chip.resolution != want.resolution) {
      throw ShapeError("chip band " + std::to_string(b) + " is '" + chip.band + "', expected '" + want.name + "'");
    }
    const std::size_t px = want.resolution == Resolution::Fine ? schema.fine_px : schema.coarse_px;
    if (chip.rows != px || chip.cols != px || chip.pixels.size() != px * px) {
      throw ShapeError("chip band '" + chip.band + "' is " + std::to_string(chip.rows) + "x" +
                       std::to_string(chip.cols) + ", expected " + std::to_string(px) + "x" + std::to_string(px));
    }
    for (double x : chip.pixels) {
      if (!std::isfinite(x)) throw EncodingError("chip band '" + chip.band + "' has a non-finite pixel");
    }
  }
}

bool CoarseField::in_hull(double lat, double lon) const noexcept {
  return lat >= lat0 && lat <= lat_max() && lon >= lon0 && lon <= lon_max();
}

void CoarseField::validate() const {
  if (!(dlat > 0.0) || !(dlon > 0.0)) throw SchemaError("coarse grid spacing must be positive");
  if (nlat < 2 || nlon < 2) throw SchemaError("coarse grid needs at least 2x2 nodes");
  if (times.count == 0) throw SchemaError("coarse field has an empty time axis");
  if (values.size() != times.count * nlat * nlon) throw SchemaError("coarse field is not dense");
  for (const auto& v : values) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      if (!std::isfinite(v[c])) throw SchemaError("coarse field contains a non-finite cell");
    }
  }
}

std::string Connectivity::to_string() const {
  switch (mode) {
    case ConnectivityMode::Full:
      return "full";
    case ConnectivityMode::Delaunay:
      return "delaunay";
    case ConnectivityMode::KNearest:
      return "knn:" + std::to_string(k);
  }
  return "full";
}

Connectivity Connectivity::parse(std::string_view s) {
  if (s == "full") return {ConnectivityMode::Full, 20};
  if (s == "delaunay") return {ConnectivityMode::Delaunay, 20};
  if (s.starts_with("knn:")) {
    auto digits = s.substr(4);
    std::size_t k = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || k == 0) {
      throw InvalidConfig("bad k in connectivity '" + std::string(s) + "'");
    }
    return {ConnectivityMode::KNearest, k};
  }
  throw InvalidConfig("unknown connectivity '" + std::string(s) + "' (full, delaunay, knn:K)");
}

std::string_view surface_mode_name(SurfaceMode m) noexcept {
  switch (m) {
    case SurfaceMode::None:
      return "none";
    case SurfaceMode::Embedding:
      return "embedding";
    case SurfaceMode::ChipEncoder:
      return "chips";
  }
  return "none";
}

SurfaceMode parse_surface_mode(std::string_view s) {
  if (s == "none") return SurfaceMode::None;
  if (s == "embedding") return SurfaceMode::Embedding;
  if (s == "chips") return SurfaceMode::ChipEncoder;
  throw InvalidConfig("unknown surface mode '" + std::string(s) + "' (none, embedding, chips)");
}

void ModelConfig::validate() const {
  if (d_latent == 0 || n_heads == 0 || n_layers_self == 0 || n_layers_cross == 0) {
    throw InvalidConfig("d_latent, n_heads and layer counts must be positive");
  }
  if (d_latent % n_heads != 0) {
    throw InvalidConfig("d_latent " + std::to_string(d_latent) + " is not divisible by n_heads " +
                        std::to_string(n_heads));
  }
  if (location_encoding_degree == 0 || location_hidden == 0 || location_dim == 0 || mlp_hidden == 0) {
    throw InvalidConfig("encoder widths and location degree must be positive");
  }
  if (connectivity.mode == ConnectivityMode::KNearest && connectivity.k == 0) {
    throw InvalidConfig("knn connectivity needs k >= 1");
  }
  if (surface_mode == SurfaceMode::Embedding && surface_dim == 0) {
    throw InvalidConfig("embedding surface mode needs surface_dim >= 1");
  }
  if (surface_mode == SurfaceMode::ChipEncoder) {
    chips.validate();
    if (chip_channels == 0) throw InvalidConfig("chip_channels must be positive");
  }
}

}  // namespace mw
