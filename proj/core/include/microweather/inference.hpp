#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "microweather/checkpoint.hpp"
#include "microweather/dataset.hpp"
#include "microweather/geometry.hpp"

namespace mw {

struct PointTarget {
  GeoPoint position;
  SurfaceFeature surface;
};

/// One forward pass for all targets at timestamp t, conditioned on the backbone stations observed
/// at t. A target at a station location gets a model output, not that station's observation.
/// Throws OutOfHull, UnknownTimestamp, SurfaceModeMismatch, MaskRowEmpty (no backbone observation).
std::vector<WeatherVector> infer_points(const ModelState& state, const Dataset& dataset,
                                        std::span<const PointTarget> targets, Timestamp t);

/// Pixel (r, c) is centred (c + 0.5) * pixel_m east and (r + 0.5) * pixel_m south of `origin`
/// (the north-west corner) on a local flat projection.
struct TileSpec {
  GeoPoint origin;
  double pixel_m = 10.0;
  std::size_t rows = 1024;
  std::size_t cols = 1024;
  Timestamp timestamp = 0;

  [[nodiscard]] GeoPoint pixel_center(std::size_t r, std::size_t c) const noexcept;
  /// Throws InvalidConfig (empty, non-positive pixel) or OutOfHull (a corner pixel outside the grid).
  void validate(const CoarseField& coarse) const;
};

/// Surface feature for a pixel centre. Called concurrently; must be thread-safe.
using SurfaceSource = std::function<SurfaceFeature(const GeoPoint& center, std::size_t row, std::size_t col)>;

/// Synthetic worlds: evaluate the generator's surface function.
SurfaceSource synthetic_surface_source(const Dataset& dataset);

/// Per-pixel embeddings, row-major [row][col][dim].
struct EmbeddingRaster {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t dim = 0;
  std::vector<float> values;
};

/// `path` holds little-endian float32 values; `path`.json holds {"rows","cols","dim"}.
EmbeddingRaster load_embedding_raster(const std::filesystem::path& path);
void save_embedding_raster(const EmbeddingRaster& raster, const std::filesystem::path& path);
/// Throws DimensionMismatch on lookup when the raster shape differs from the tile.
SurfaceSource embedding_raster_source(EmbeddingRaster raster);

struct FieldRaster {
  TileSpec tile;
  std::vector<float> values;  // [channel][row][col]
  std::string checkpoint_id;
  std::string connectivity;

  [[nodiscard]] float at(std::size_t channel, std::size_t r, std::size_t c) const noexcept {
    return values[(channel * tile.rows + r) * tile.cols + c];
  }
};

struct TileOptions {
  std::size_t block = 256;                    // square block side in pixels
  std::size_t workers = 1;
  std::size_t memory_budget_bytes = 512u << 20;  // per block; larger blocks are split
};

/// Runs blocks of pixels through the cross-attention decoder against one shared backbone context.
/// Raster values do not depend on block size or worker count. Throws OutOfHull, UnknownTimestamp,
/// SurfaceModeMismatch.
FieldRaster infer_tile(const ModelState& state, const Dataset& dataset, const TileSpec& tile,
                       const SurfaceSource& surface, const TileOptions& options = {});

/// Stable hash of the parameters and configuration.
std::string model_fingerprint(const ModelState& state);

/// Writes `stem`.f32 (float32 little-endian, channel-major) and `stem`.json (georeference, channel
/// order, provenance).
void write_raster(const FieldRaster& raster, const std::filesystem::path& stem);
FieldRaster read_raster(const std::filesystem::path& stem);

}  // namespace mw
