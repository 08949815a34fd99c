#pragma once

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "microweather/geometry.hpp"
#include "microweather/types.hpp"

namespace mw {

/// One (station, hour) pair for one model. `valid` marks observed (never filled) channels.
struct EvalRecord {
  std::string station_id;
  Timestamp timestamp = 0;
  WeatherVector observed;
  std::array<bool, kChannels> valid{};
  WeatherVector predicted;
};

/// Observed wind speeds below this are excluded from direction metrics.
inline constexpr double kCalmWindMs = 0.5;

/// Full-scale reference wind vector errors (ERA5 and full model, m/s). Documentation only.
inline constexpr double kReferenceEra5WindVectorError = 2.35;
inline constexpr double kReferenceFullWindVectorError = 1.67;

struct ErrorStats {
  double mae = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
};

/// Throw EmptySample when no record is valid for the channel.
double mae(std::span<const EvalRecord> records, Channel c);
double rmse(std::span<const EvalRecord> records, Channel c);
ErrorStats channel_errors(std::span<const EvalRecord> records, Channel c);

/// Mean Euclidean norm of the wind-vector error over records with u and v valid. Throws EmptySample.
double vector_error(std::span<const EvalRecord> records);

/// Speed errors over records with u and v valid. Throws EmptySample.
ErrorStats wind_speed_errors(std::span<const EvalRecord> records);

/// Circular direction errors (degrees) over records with u, v valid and observed speed >= kCalmWindMs.
/// Throws EmptySample.
ErrorStats wind_direction_errors(std::span<const EvalRecord> records);

/// R^2 after removing the across-station mean from observations and predictions. All records
/// should share one timestamp. Throws InsufficientStations (< 2 valid) or DegenerateVariance.
double spatial_r2(std::span<const EvalRecord> records, Channel c);
/// Vector version on (u, v).
double spatial_r2_wind(std::span<const EvalRecord> records);

struct SpatialR2Summary {
  double mean = 0.0;
  std::size_t timesteps = 0;  // used
  std::size_t skipped = 0;    // degenerate or fewer than 2 stations
};

/// Mean of per-timestep spatial R^2; `c` empty selects the wind variant. Throws EmptySample when
/// every timestep is skipped.
SpatialR2Summary mean_spatial_r2(std::span<const EvalRecord> records, std::optional<Channel> c);

struct MetricValue {
  std::string variable;
  std::string metric;
  double value = 0.0;
  std::size_t n = 0;
};

/// Metric suite for one model. Metrics without samples are omitted.
struct MetricTable {
  std::string model;
  std::vector<MetricValue> values;

  [[nodiscard]] const MetricValue* find(const std::string& variable, const std::string& metric) const;
  /// Throws EmptySample when the entry is absent.
  [[nodiscard]] double value(const std::string& variable, const std::string& metric) const;
};

MetricTable metric_table(const std::string& model, std::span<const EvalRecord> records);

/// CSV `model,variable,metric,value,n`.
void write_metric_csv(std::ostream& out, std::span<const MetricTable> tables);

struct CategoryTable {
  std::string category;
  std::size_t stations = 0;
  std::size_t records = 0;
  bool empty = false;  // no station in this category
  MetricTable table;
};

/// Metric suite per category. `categories` lists every category to report (empty ones are
/// flagged). Throws SchemaError when a record's station has no category.
std::vector<CategoryTable> stratify_errors(const std::string& model, std::span<const EvalRecord> records,
                                           const std::map<std::string, std::string>& category_of,
                                           std::span<const std::string> categories);

/// CSV `model,category,stations,variable,metric,value,n`; empty categories get one `empty` row.
void write_category_csv(std::ostream& out, std::span<const CategoryTable> tables);

/// Mean great-circle distance (km) from `p` to its k nearest sites. Throws KTooLarge.
double mean_knn_distance_km(const GeoPoint& p, std::span<const GeoPoint> sites, std::size_t k);

struct DistanceBin {
  std::size_t k = 0;
  std::size_t bin = 0;
  double distance_lo_km = 0.0;
  double distance_hi_km = 0.0;
  std::size_t stations = 0;
  double temperature_mae = 0.0;  // mean of station-level values; NaN when no station has data
  double dewpoint_mae = 0.0;
  double wind_vector_error = 0.0;
};

/// Station-level mean errors binned by mean distance to the k nearest backbone stations
/// (equal-count bins). Throws KTooLarge, EmptySample (no backbone or no positions).
std::vector<DistanceBin> distance_sensitivity(std::span<const EvalRecord> records,
                                              const std::map<std::string, GeoPoint>& station_positions,
                                              std::span<const GeoPoint> backbone, std::span<const std::size_t> k_list,
                                              std::size_t bins = 10);

/// CSV `model,k,bin,distance_lo_km,distance_hi_km,stations,variable,metric,value`.
void write_distance_csv(std::ostream& out, const std::string& model, std::span<const DistanceBin> bins);

}  // namespace mw
