#pragma once

#include <span>
#include <vector>

#include "microweather/attention.hpp"
#include "microweather/checkpoint.hpp"
#include "microweather/coarse_field.hpp"
#include "microweather/connectivity.hpp"
#include "microweather/dataset.hpp"
#include "microweather/encoders.hpp"

namespace mw {

/// Fresh parameters for `config` (seeded by config.seed), rounded to float32 so that checkpoints
/// round-trip exactly.
ModelState init_model_state(const ModelConfig& config, const Normalization& normalization);

/// Station statistics over observed values of backbone and train stations; coarse statistics over
/// every grid value.
Normalization compute_normalization(const Dataset& dataset);

/// Time-invariant inputs of a set of locations.
struct StaticInputs {
  std::vector<GeoPoint> positions;
  nn::Matrix basis;       // spherical-harmonic rows
  nn::Matrix embeddings;  // Embedding mode
  ChipBatch chips;        // ChipEncoder mode
  [[nodiscard]] std::size_t size() const noexcept { return positions.size(); }
};

/// Throws SurfaceModeMismatch when a surface is absent or of the wrong kind for config.surface_mode,
/// DimensionMismatch / ShapeError when it has the wrong size.
StaticInputs make_static_inputs(std::span<const GeoPoint> positions, std::span<const SurfaceFeature* const> surfaces,
                                const ModelConfig& config);

/// Location codes and surface tokens for a StaticInputs set; `surface` is empty in None mode.
struct StaticEncoding {
  nn::Var location;
  nn::Var surface;
};

StaticEncoding encode_static(nn::Graph& g, const ModelState& state, const StaticInputs& in);

/// Per-timestep inputs. `rows` index into the matching StaticInputs.
struct BackboneSlice {
  std::vector<std::size_t> rows;
  WeatherBatch observations;
  WeatherBatch coarse;
};

struct TargetSlice {
  std::vector<std::size_t> rows;
  WeatherBatch coarse;
};

nn::Var backbone_tokens(nn::Graph& g, const ModelState& state, const StaticEncoding& enc, const BackboneSlice& slice);
nn::Var target_tokens(nn::Graph& g, const ModelState& state, const StaticEncoding& enc, const TargetSlice& slice);

struct ForwardOptions {
  bool skip_self_attention = false;  // test hook: context = backbone tokens
  bool record_trace = false;
};

MaskBuffer mask_buffer(const std::vector<std::uint8_t>& mask);

/// Self-attention stack over backbone tokens (or identity under skip_self_attention).
nn::Var encode_context(nn::Graph& g, const ModelState& state, const nn::Var& tokens, const MaskBuffer& self_mask,
                       const ForwardOptions& options, ForwardTrace* trace);

/// Cross-attention stack and head; returns normalized predictions (targets x 4).
nn::Var decode_targets(nn::Graph& g, const ModelState& state, const nn::Var& targets, const nn::Var& context,
                       const MaskBuffer& cross_mask, ForwardTrace* trace);

struct ForwardInputs {
  StaticInputs backbone_static;
  BackboneSlice backbone;
  StaticInputs target_static;
  TargetSlice targets;
  AttentionMask mask;
};

struct ForwardResult {
  nn::Var normalized;  // targets x 4
  std::vector<WeatherVector> predictions;
  ForwardTrace trace;
};

/// encoders -> self stack -> cross stack -> head. Throws MaskRowEmpty on an invalid mask.
ForwardResult forward(nn::Graph& g, const ModelState& state, const ForwardInputs& in,
                      const ForwardOptions& options = {});

// ---- dataset helpers ---------------------------------------------------------------------------

/// Observations of `stations` (dataset indices) at time index t. Stations without any observed
/// channel are dropped; filled slots are treated as missing. `kept` receives the positions (into
/// `stations`) of the stations that remain.
BackboneSlice backbone_slice(const Dataset& dataset, std::span<const std::size_t> stations, std::size_t t,
                             const Normalization& normalization, const std::vector<BilinearStencil>& stencils,
                             std::vector<std::size_t>& kept);

/// Coarse samples for target rows at time index t.
TargetSlice target_slice(const CoarseField& coarse, std::span<const BilinearStencil> stencils,
                         std::vector<std::size_t> rows, std::size_t t, const Normalization& normalization);

std::vector<BilinearStencil> stencils_for(const CoarseField& coarse, std::span<const GeoPoint> positions);

/// A fixed group of dataset stations with their static inputs and coarse stencils.
struct StationSet {
  std::vector<std::size_t> indices;  // into dataset.stations
  std::vector<Site> sites;
  StaticInputs statics;
  std::vector<BilinearStencil> stencils;
  [[nodiscard]] std::size_t size() const noexcept { return indices.size(); }
};

StationSet make_station_set(const Dataset& dataset, std::vector<std::size_t> indices, const ModelConfig& config);

/// Normalized predictions (rows x 4) for `target_rows` of `targets` at time index t, conditioned on
/// the backbone stations with an observation at t. Returns an empty Var when there are none.
nn::Var predict_stations(nn::Graph& g, const ModelState& state, const Dataset& dataset, const StationSet& backbone,
                         const StaticEncoding& backbone_enc, const StationSet& targets,
                         const StaticEncoding& target_enc, std::vector<std::size_t> target_rows, std::size_t t,
                         const ForwardOptions& options = {}, ForwardTrace* trace = nullptr);

}  // namespace mw
