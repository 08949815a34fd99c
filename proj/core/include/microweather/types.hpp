#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mw {

/// Hours since 1970-01-01T00:00Z. The time axis is plain hourly UTC integers.
using Timestamp = std::int64_t;

inline constexpr std::size_t kChannels = 4;

enum class Channel : std::uint8_t { Temperature = 0, Dewpoint = 1, WindU = 2, WindV = 3 };

std::string_view channel_name(Channel c) noexcept;

/// The 4-channel near-surface state in physical units.
struct WeatherVector {
  double temperature_c = 0.0;
  double dewpoint_c = 0.0;
  double wind_u_ms = 0.0;  // toward east
  double wind_v_ms = 0.0;  // toward north

  [[nodiscard]] double operator[](std::size_t c) const noexcept;
  [[nodiscard]] double& operator[](std::size_t c) noexcept;
  [[nodiscard]] double operator[](Channel c) const noexcept { return (*this)[static_cast<std::size_t>(c)]; }

  friend bool operator==(const WeatherVector&, const WeatherVector&) = default;
};

/// State of a single channel slot in a station series.
enum class SlotState : std::uint8_t { Missing = 0, Observed = 1, Filled = 2 };

struct ChannelFlags {
  std::array<SlotState, kChannels> state{};

  [[nodiscard]] bool observed(std::size_t c) const noexcept { return state[c] == SlotState::Observed; }
  /// Observed or filled: the value slot holds a finite number.
  [[nodiscard]] bool usable(std::size_t c) const noexcept { return state[c] != SlotState::Missing; }
  [[nodiscard]] bool any_observed() const noexcept;
  [[nodiscard]] static ChannelFlags all(SlotState s) noexcept;

  friend bool operator==(const ChannelFlags&, const ChannelFlags&) = default;
};

struct WindUV {
  double u_ms = 0.0;
  double v_ms = 0.0;
};

struct WindSpeedDir {
  double speed_ms = 0.0;
  double dir_deg = 0.0;  // meteorological from-direction, [0, 360)
};

/// Meteorological convention: u = -s sin(dir), v = -s cos(dir). Throws InvalidObservation on
/// negative or non-finite speed, or non-finite direction.
WindUV wind_from_speed_dir(double speed_ms, double dir_deg);

/// Inverse of wind_from_speed_dir. Calm wind reports direction 0.
WindSpeedDir wind_to_speed_dir(double u_ms, double v_ms) noexcept;

/// Circular absolute difference of two directions in degrees, in [0, 180].
double circular_difference_deg(double a_deg, double b_deg) noexcept;

/// Hourly time axis.
struct TimeAxis {
  Timestamp start = 0;
  std::size_t count = 0;

  [[nodiscard]] Timestamp at(std::size_t i) const noexcept { return start + static_cast<Timestamp>(i); }
  [[nodiscard]] std::optional<std::size_t> index_of(Timestamp t) const noexcept;

  friend bool operator==(const TimeAxis&, const TimeAxis&) = default;
};

/// Per-station series aligned to a dataset time axis.
struct Series {
  std::vector<WeatherVector> values;
  std::vector<ChannelFlags> flags;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const Series&, const Series&) = default;
};

/// Fraction of valid variable readings. Temperature, dewpoint and wind (u,v jointly) each count as
/// one reading per timestamp, so the denominator is 3 * series length.
double compute_quality_fraction(const Series& series) noexcept;

enum class Resolution : std::uint8_t { Fine, Coarse };

std::string_view resolution_name(Resolution r) noexcept;
Resolution parse_resolution(std::string_view s);

struct Chip {
  std::string band;
  Resolution resolution = Resolution::Fine;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> pixels;  // row-major

  friend bool operator==(const Chip&, const Chip&) = default;
};

struct Embedding {
  std::vector<double> vector;
  friend bool operator==(const Embedding&, const Embedding&) = default;
};

struct ChipStack {
  std::vector<Chip> bands;
  friend bool operator==(const ChipStack&, const ChipStack&) = default;
};

/// Static per-location descriptor. monostate means "no surface information".
using SurfaceFeature = std::variant<std::monostate, Embedding, ChipStack>;

struct ChipBand {
  std::string name;
  Resolution resolution = Resolution::Fine;
  friend bool operator==(const ChipBand&, const ChipBand&) = default;
};

struct ChipSchema {
  std::vector<ChipBand> bands;
  std::size_t fine_px = 48;
  std::size_t coarse_px = 16;

  [[nodiscard]] std::size_t upsample_factor() const noexcept { return coarse_px ? fine_px / coarse_px : 0; }
  void validate() const;
  friend bool operator==(const ChipSchema&, const ChipSchema&) = default;
};

/// Throws DimensionMismatch / EncodingError if the embedding has the wrong length or non-finite entries.
void validate_embedding(const Embedding& e, std::size_t expected_dim);
/// Throws ShapeError if any band deviates from the schema (names, order, tile sizes).
void validate_chips(const ChipStack& chips, const ChipSchema& schema);

struct Station {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  double quality_fraction = 0.0;
  Series series;
  SurfaceFeature surface;

  friend bool operator==(const Station&, const Station&) = default;
};

/// Regular lat/lon grid of hourly weather. Node (i, j) sits at (lat0 + i*dlat, lon0 + j*dlon).
struct CoarseField {
  double lat0 = 0.0;
  double lon0 = 0.0;
  double dlat = 0.25;
  double dlon = 0.25;
  std::size_t nlat = 0;
  std::size_t nlon = 0;
  TimeAxis times;
  std::vector<WeatherVector> values;  // [time][lat][lon]

  [[nodiscard]] const WeatherVector& at(std::size_t t, std::size_t i, std::size_t j) const noexcept {
    return values[(t * nlat + i) * nlon + j];
  }
  [[nodiscard]] WeatherVector& at(std::size_t t, std::size_t i, std::size_t j) noexcept {
    return values[(t * nlat + i) * nlon + j];
  }
  [[nodiscard]] double lat_max() const noexcept { return lat0 + dlat * static_cast<double>(nlat - 1); }
  [[nodiscard]] double lon_max() const noexcept { return lon0 + dlon * static_cast<double>(nlon - 1); }
  [[nodiscard]] bool in_hull(double lat, double lon) const noexcept;
  /// Throws SchemaError on bad geometry or non-finite cells.
  void validate() const;

  friend bool operator==(const CoarseField&, const CoarseField&) = default;
};

enum class ConnectivityMode : std::uint8_t { Full, Delaunay, KNearest };

struct Connectivity {
  ConnectivityMode mode = ConnectivityMode::Full;
  std::size_t k = 20;  // KNearest only

  [[nodiscard]] std::string to_string() const;
  /// Accepts "full", "delaunay", "knn:K".
  static Connectivity parse(std::string_view s);
  friend bool operator==(const Connectivity&, const Connectivity&) = default;
};

enum class SurfaceMode : std::uint8_t { None, Embedding, ChipEncoder };

std::string_view surface_mode_name(SurfaceMode m) noexcept;
/// Accepts "none", "embedding", "chips".
SurfaceMode parse_surface_mode(std::string_view s);

struct ModelConfig {
  std::size_t d_latent = 96;
  std::size_t n_heads = 3;
  std::size_t n_layers_self = 5;
  std::size_t n_layers_cross = 5;
  std::size_t location_encoding_degree = 10;
  std::size_t location_hidden = 64;
  std::size_t location_dim = 32;
  double siren_w0 = 30.0;
  std::size_t mlp_hidden = 64;
  std::size_t ffn_hidden = 0;  // 0 selects 2 * d_latent
  Connectivity connectivity;
  SurfaceMode surface_mode = SurfaceMode::Embedding;
  std::size_t surface_dim = 64;
  ChipSchema chips;
  std::size_t chip_channels = 16;
  bool chip_center_only = false;  // ablation hook: chips carry only their center pixel
  bool pre_norm = false;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t d_head() const noexcept { return d_latent / n_heads; }
  [[nodiscard]] std::size_t ffn_width() const noexcept { return ffn_hidden ? ffn_hidden : 2 * d_latent; }
  /// Throws InvalidConfig.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Per-channel affine normalization.
struct ChannelStats {
  std::array<double, kChannels> mean{0.0, 0.0, 0.0, 0.0};
  std::array<double, kChannels> std{1.0, 1.0, 1.0, 1.0};

  [[nodiscard]] double normalize(std::size_t c, double x) const noexcept { return (x - mean[c]) / std[c]; }
  [[nodiscard]] double denormalize(std::size_t c, double z) const noexcept { return z * std[c] + mean[c]; }
  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

struct Normalization {
  ChannelStats station;
  ChannelStats coarse;
  friend bool operator==(const Normalization&, const Normalization&) = default;
};

}  // namespace mw
