#pragma once

#include <random>
#include <span>
#include <string>

#include "microweather/nn/graph.hpp"
#include "microweather/types.hpp"

namespace mw {

/// Normalized weather inputs for a batch of locations. Invalid channels hold 0 in `values` and 0
/// in `valid`; the network multiplies values by `valid`, so masked slots never reach a token.
struct WeatherBatch {
  nn::Matrix values;  // n x 4
  nn::Matrix valid;   // n x 4, entries 0 or 1
};

/// Throws EncodingError when a valid channel is non-finite.
WeatherBatch prepare_weather(std::span<const WeatherVector> obs, std::span<const ChannelFlags> flags,
                             const ChannelStats& stats);
/// Every channel valid (coarse samples).
WeatherBatch prepare_weather(std::span<const WeatherVector> obs, const ChannelStats& stats);

// ---- parameter registration ------------------------------------------------------------------

void add_weather_tokenizer(nn::ParameterStore& store, const std::string& prefix, std::size_t hidden,
                           std::size_t d_out, std::mt19937_64& rng);
void add_location_encoder(nn::ParameterStore& store, const std::string& prefix, const ModelConfig& config,
                          std::mt19937_64& rng);
void add_surface_embedding_encoder(nn::ParameterStore& store, const std::string& prefix, std::size_t dim,
                                   std::size_t hidden, std::size_t d_out, std::mt19937_64& rng);
void add_chip_encoder(nn::ParameterStore& store, const std::string& prefix, const ChipSchema& schema,
                      std::size_t channels, std::size_t hidden, std::size_t d_out, std::mt19937_64& rng);

// ---- graph builders ----------------------------------------------------------------------------

/// Temperature, dewpoint and wind (u, v jointly) each pass their own 2-layer ReLU MLP over
/// [values | indicator]; the three embeddings are concatenated and projected to d_out.
nn::Var tokenize_weather(nn::Graph& g, const nn::ParameterStore& store, const std::string& prefix,
                         const nn::Var& values, const nn::Matrix& valid);

/// Spherical-harmonic basis rows (n x (degree+1)^2) for the given points.
nn::Matrix location_basis(std::span<const double> lat, std::span<const double> lon, std::size_t degree);

/// Two sine layers: sin(w0 * (B W1 + b1)) then sin(H W2 + b2).
nn::Var encode_location(nn::Graph& g, const nn::ParameterStore& store, const std::string& prefix,
                        const nn::Var& basis, double w0);

/// ReLU(x W1 + b1) W2 + b2. Throws DimensionMismatch if x has the wrong width.
nn::Var encode_surface_embedding(nn::Graph& g, const nn::ParameterStore& store, const std::string& prefix,
                                 const nn::Var& x);

/// Chip images laid out for the encoder: fine bands (rows loc*Bf + b, fine_px^2 columns) and coarse
/// bands (rows loc*Bc + b, coarse_px^2 columns), each in schema order within its resolution.
struct ChipBatch {
  std::size_t locations = 0;
  nn::Matrix fine;
  nn::Matrix coarse;
};

/// Throws ShapeError. With center_only, every band is replaced by a constant image of its center
/// pixel (ablation that removes spatial context).
ChipBatch prepare_chips(std::span<const ChipStack* const> stacks, const ChipSchema& schema, bool center_only);

/// Coarse bands are upsampled to the fine grid by a learned block transposed convolution, then
/// depthwise 3x3 conv, pointwise conv, ReLU, spatial mean and a 2-layer MLP; a linear skip from the
/// centre pixels of all bands is added to the result.
nn::Var encode_surface_chips(nn::Graph& g, const nn::ParameterStore& store, const std::string& prefix,
                             const ChipSchema& schema, const nn::Var& fine, const nn::Var& coarse,
                             std::size_t locations);

enum class TokenRole : std::uint8_t { Backbone, Target };

/// Concatenates [era5 | station (backbone only) | surface (optional) | location] and applies the
/// role's projection. Throws RoleMismatch when a station token is given for a target or missing
/// for a backbone token.
nn::Var assemble_token(nn::Graph& g, const nn::ParameterStore& store, const std::string& prefix, TokenRole role,
                       const nn::Var& era5, const nn::Var* station, const nn::Var* surface, const nn::Var& location);

void add_token_assembler(nn::ParameterStore& store, const std::string& prefix, TokenRole role, std::size_t width,
                         std::size_t d_out, std::mt19937_64& rng);

}  // namespace mw
