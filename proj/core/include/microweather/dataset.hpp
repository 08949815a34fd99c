#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "microweather/partition.hpp"
#include "microweather/synthetic_truth.hpp"
#include "microweather/types.hpp"

namespace mw {

enum class SurfaceKind : std::uint8_t { None, Embedding, Chips };

std::string_view surface_kind_name(SurfaceKind k) noexcept;
SurfaceKind parse_surface_kind(std::string_view s);

struct SurfaceSchema {
  SurfaceKind kind = SurfaceKind::None;
  std::size_t embedding_dim = 0;  // 0 on load: infer from the file
  ChipSchema chips;
  friend bool operator==(const SurfaceSchema&, const SurfaceSchema&) = default;
};

struct IngestionReport {
  std::size_t stations = 0;
  std::size_t rows = 0;
  std::size_t dropped_rows = 0;         // quality_flag = bad
  std::size_t rejected_readings = 0;    // unparsable or physically invalid values
  std::size_t unfillable_channels = 0;  // station channels with no observed value
  double coverage_fraction = 0.0;       // observed readings / (3 * stations * T)
  friend bool operator==(const IngestionReport&, const IngestionReport&) = default;
};

/// Stations, coarse field, partition and surface schema on one hourly time axis.
struct Dataset {
  std::vector<Station> stations;
  CoarseField coarse;
  Partition partition;
  SurfaceSchema surface;
  IngestionReport report;
  std::optional<SurfaceResponse> truth;  // synthetic worlds only

  [[nodiscard]] const TimeAxis& times() const noexcept { return coarse.times; }
  [[nodiscard]] std::optional<std::size_t> index_of(const std::string& id) const;
  [[nodiscard]] const Station& station(const std::string& id) const;
  /// Station indices of a role, in id order.
  [[nodiscard]] std::vector<std::size_t> indices(Role r) const;
  /// Throws CoverageError / TimeAxisError / SchemaError / PartitionError.
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct DatasetPaths {
  std::filesystem::path stations;
  std::filesystem::path coarse;
  std::optional<std::filesystem::path> surface;        // embedding table or chip manifest
  std::optional<std::filesystem::path> partition;      // station_id,role; derived when absent
};

struct LoadOptions {
  SurfaceSchema surface;
  PartitionThresholds thresholds;
};

/// Reads the text formats. Missing readings are filled linearly in time (flagged Filled);
/// quality_fraction is recomputed. Throws SchemaError, CoverageError, TimeAxisError.
Dataset load_dataset(const DatasetPaths& paths, const LoadOptions& options);

/// Writes stations.csv, coarse.csv, partition.csv, dataset.json and the surface files into `dir`.
/// Wind is written as speed/direction, so u/v survive only to a few ulps; use the binary cache
/// for exact round-trips.
void write_dataset_text(const Dataset& dataset, const std::filesystem::path& dir);

/// Reads a directory produced by write_dataset_text (schema from dataset.json).
Dataset read_dataset_text(const std::filesystem::path& dir);

/// Lossless binary mirror of a dataset (magic MWD1, CRC32 trailer).
void save_dataset_cache(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset_cache(const std::filesystem::path& path);

inline constexpr const char* kDatasetCacheName = "dataset.mwd";

/// Prefers `dir/dataset.mwd`, else the text files.
Dataset open_dataset(const std::filesystem::path& dir);

}  // namespace mw
