#include "microweather/model.hpp"

#include <cmath>
#include <random>

#include "microweather/errors.hpp"
#include "microweather/hash.hpp"
#include "microweather/spherical_harmonics.hpp"

namespace mw {

using nn::Matrix;
using nn::Var;

namespace {

std::size_t surface_width(const ModelConfig& c) { return c.surface_mode == SurfaceMode::None ? 0 : c.d_latent; }

}  // namespace

ModelState init_model_state(const ModelConfig& c, const Normalization& normalization) {
  c.validate();
  ModelState s;
  s.config = c;
  s.normalization = normalization;
  std::mt19937_64 rng(mix64(c.seed));
  auto& P = s.parameters;
  add_weather_tokenizer(P, "tok.era5", c.mlp_hidden, c.d_latent, rng);
  add_weather_tokenizer(P, "tok.station", c.mlp_hidden, c.d_latent, rng);
  add_location_encoder(P, "loc", c, rng);
  if (c.surface_mode == SurfaceMode::Embedding) {
    add_surface_embedding_encoder(P, "surf", c.surface_dim, c.mlp_hidden, c.d_latent, rng);
  } else if (c.surface_mode == SurfaceMode::ChipEncoder) {
    add_chip_encoder(P, "chip", c.chips, c.chip_channels, c.mlp_hidden, c.d_latent, rng);
  }
  const std::size_t sw = surface_width(c);
  add_token_assembler(P, "asm", TokenRole::Backbone, 2 * c.d_latent + sw + c.location_dim, c.d_latent, rng);
  add_token_assembler(P, "asm", TokenRole::Target, c.d_latent + sw + c.location_dim, c.d_latent, rng);
  const std::size_t layers = c.n_layers_self + c.n_layers_cross;
  for (std::size_t l = 0; l < c.n_layers_self; ++l) add_attention_layer(P, "self." + std::to_string(l), c, layers, rng);
  for (std::size_t l = 0; l < c.n_layers_cross; ++l) add_attention_layer(P, "cross." + std::to_string(l), c, layers, rng);
  P.add("head.w", nn::glorot(c.d_latent, kChannels, rng));
  P.add("head.b", Matrix(1, kChannels));
  P.round_to_float32();
  return s;
}

Normalization compute_normalization(const Dataset& d) {
  Normalization n;
  std::array<double, kChannels> sum{};
  std::array<double, kChannels> sum2{};
  std::array<double, kChannels> count{};
  for (Role r : {Role::Backbone, Role::Train}) {
    for (std::size_t i : d.indices(r)) {
      const auto& s = d.stations[i].series;
      for (std::size_t t = 0; t < s.size(); ++t) {
        for (std::size_t c = 0; c < kChannels; ++c) {
          if (!s.flags[t].observed(c)) continue;
          const double x = s.values[t][c];
          sum[c] += x;
          sum2[c] += x * x;
          count[c] += 1.0;
        }
      }
    }
  }
  for (std::size_t c = 0; c < kChannels; ++c) {
    if (count[c] > 0.0) {
      n.station.mean[c] = sum[c] / count[c];
      n.station.std[c] = std::max(std::sqrt(std::max(sum2[c] / count[c] - n.station.mean[c] * n.station.mean[c], 0.0)), 1e-6);
    }
  }
  sum = {};
  sum2 = {};
  for (const auto& v : d.coarse.values) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      sum[c] += v[c];
      sum2[c] += v[c] * v[c];
    }
  }
  const double m = static_cast<double>(std::max<std::size_t>(d.coarse.values.size(), 1));
  for (std::size_t c = 0; c < kChannels; ++c) {
    n.coarse.mean[c] = sum[c] / m;
    n.coarse.std[c] = std::max(std::sqrt(std::max(sum2[c] / m - n.coarse.mean[c] * n.coarse.mean[c], 0.0)), 1e-6);
  }
  return n;
}

StaticInputs make_static_inputs(std::span<const GeoPoint> positions, std::span<const SurfaceFeature* const> surfaces,
                                const ModelConfig& c) {
  if (surfaces.size() != positions.size()) throw DimensionMismatch("one surface entry per location required");
  StaticInputs in;
  in.positions.assign(positions.begin(), positions.end());
  in.basis = Matrix(positions.size(), sh_basis_size(c.location_encoding_degree));
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const auto row = real_spherical_harmonics(positions[i].lat, positions[i].lon, c.location_encoding_degree);
    std::copy(row.begin(), row.end(), in.basis.row(i));
  }
  if (c.surface_mode == SurfaceMode::Embedding) {
    in.embeddings = Matrix(positions.size(), c.surface_dim);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const auto* e = surfaces[i] ? std::get_if<Embedding>(surfaces[i]) : nullptr;
      if (!e) throw SurfaceModeMismatch("model expects surface embeddings but location " + std::to_string(i) + " has none");
      validate_embedding(*e, c.surface_dim);
      std::copy(e->vector.begin(), e->vector.end(), in.embeddings.row(i));
    }
  } else if (c.surface_mode == SurfaceMode::ChipEncoder) {
    std::vector<const ChipStack*> stacks(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
      stacks[i] = surfaces[i] ? std::get_if<ChipStack>(surfaces[i]) : nullptr;
      if (!stacks[i]) throw SurfaceModeMismatch("model expects surface chips but location " + std::to_string(i) + " has none");
    }
    in.chips = prepare_chips(stacks, c.chips, c.chip_center_only);
  }
  return in;
}

StaticEncoding encode_static(nn::Graph& g, const ModelState& s, const StaticInputs& in) {
  const auto& c = s.config;
  StaticEncoding enc;
  enc.location = encode_location(g, s.parameters, "loc", g.constant(in.basis), c.siren_w0);
  if (c.surface_mode == SurfaceMode::Embedding) {
    enc.surface = encode_surface_embedding(g, s.parameters, "surf", g.constant(in.embeddings));
  } else if (c.surface_mode == SurfaceMode::ChipEncoder) {
    enc.surface = encode_surface_chips(g, s.parameters, "chip", c.chips, g.constant(in.chips.fine),
                                       g.constant(in.chips.coarse), in.chips.locations);
  }
  return enc;
}

namespace {

Var tokens_for(nn::Graph& g, const ModelState& s, const StaticEncoding& enc, const std::vector<std::size_t>& rows,
               const WeatherBatch& coarse, const WeatherBatch* obs) {
  Var era5 = tokenize_weather(g, s.parameters, "tok.era5", g.constant(coarse.values), coarse.valid);
  Var loc = nn::gather_rows(enc.location, rows);
  Var surf;
  if (enc.surface) surf = nn::gather_rows(enc.surface, rows);
  if (obs) {
    Var st = tokenize_weather(g, s.parameters, "tok.station", g.constant(obs->values), obs->valid);
    return assemble_token(g, s.parameters, "asm", TokenRole::Backbone, era5, &st, surf ? &surf : nullptr, loc);
  }
  return assemble_token(g, s.parameters, "asm", TokenRole::Target, era5, nullptr, surf ? &surf : nullptr, loc);
}

}  // namespace

Var backbone_tokens(nn::Graph& g, const ModelState& s, const StaticEncoding& enc, const BackboneSlice& slice) {
  return tokens_for(g, s, enc, slice.rows, slice.coarse, &slice.observations);
}

Var target_tokens(nn::Graph& g, const ModelState& s, const StaticEncoding& enc, const TargetSlice& slice) {
  return tokens_for(g, s, enc, slice.rows, slice.coarse, nullptr);
}

MaskBuffer mask_buffer(const std::vector<std::uint8_t>& mask) {
  return std::make_shared<const std::vector<unsigned char>>(mask.begin(), mask.end());
}

Var encode_context(nn::Graph& g, const ModelState& s, const Var& tokens, const MaskBuffer& self_mask,
                   const ForwardOptions& options, ForwardTrace* trace) {
  if (options.skip_self_attention) return tokens;
  return self_attention_stack(g, s.parameters, s.config, tokens, self_mask, trace);
}

Var decode_targets(nn::Graph& g, const ModelState& s, const Var& targets, const Var& context,
                   const MaskBuffer& cross_mask, ForwardTrace* trace) {
  Var latents = cross_attention_stack(g, s.parameters, s.config, targets, context, cross_mask, trace);
  return prediction_head(g, s.parameters, latents);
}

ForwardResult forward(nn::Graph& g, const ModelState& s, const ForwardInputs& in, const ForwardOptions& options) {
  in.mask.validate();
  if (in.mask.n_backbone != in.backbone.rows.size() || in.mask.n_targets != in.targets.rows.size()) {
    throw DimensionMismatch("attention mask does not match the token counts");
  }
  ForwardResult r;
  ForwardTrace* trace = options.record_trace ? &r.trace : nullptr;
  const StaticEncoding bb = encode_static(g, s, in.backbone_static);
  const StaticEncoding tg = encode_static(g, s, in.target_static);
  Var ctx = encode_context(g, s, backbone_tokens(g, s, bb, in.backbone), mask_buffer(in.mask.self_mask), options, trace);
  r.normalized = decode_targets(g, s, target_tokens(g, s, tg, in.targets), ctx, mask_buffer(in.mask.cross_mask), trace);
  r.predictions = denormalize_predictions(r.normalized.value(), s.normalization.station);
  return r;
}

BackboneSlice backbone_slice(const Dataset& d, std::span<const std::size_t> stations, std::size_t t,
                             const Normalization& norm, const std::vector<BilinearStencil>& stencils,
                             std::vector<std::size_t>& kept) {
  kept.clear();
  std::vector<WeatherVector> obs;
  std::vector<ChannelFlags> flags;
  std::vector<WeatherVector> coarse;
  for (std::size_t k = 0; k < stations.size(); ++k) {
    const auto& s = d.stations[stations[k]].series;
    ChannelFlags f = s.flags[t];
    for (auto& st : f.state) {
      if (st != SlotState::Observed) st = SlotState::Missing;
    }
    if (!f.any_observed()) continue;
    kept.push_back(k);
    obs.push_back(s.values[t]);
    flags.push_back(f);
    coarse.push_back(sample_coarse(d.coarse, stencils[k], t));
  }
  BackboneSlice slice;
  slice.rows = kept;
  slice.observations = prepare_weather(obs, flags, norm.station);
  slice.coarse = prepare_weather(coarse, norm.coarse);
  return slice;
}

TargetSlice target_slice(const CoarseField& coarse, std::span<const BilinearStencil> stencils,
                         std::vector<std::size_t> rows, std::size_t t, const Normalization& norm) {
  std::vector<WeatherVector> v(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) v[i] = sample_coarse(coarse, stencils[rows[i]], t);
  TargetSlice slice;
  slice.coarse = prepare_weather(v, norm.coarse);
  slice.rows = std::move(rows);
  return slice;
}

std::vector<BilinearStencil> stencils_for(const CoarseField& coarse, std::span<const GeoPoint> positions) {
  std::vector<BilinearStencil> out;
  out.reserve(positions.size());
  for (const auto& p : positions) out.push_back(bilinear_stencil(coarse, p.lat, p.lon));
  return out;
}

StationSet make_station_set(const Dataset& d, std::vector<std::size_t> indices, const ModelConfig& c) {
  StationSet set;
  std::vector<GeoPoint> positions;
  std::vector<const SurfaceFeature*> surfaces;
  for (std::size_t i : indices) {
    const auto& st = d.stations[i];
    positions.push_back({st.lat, st.lon});
    surfaces.push_back(&st.surface);
    set.sites.push_back({st.id, {st.lat, st.lon}});
  }
  set.statics = make_static_inputs(positions, surfaces, c);
  set.stencils = stencils_for(d.coarse, positions);
  set.indices = std::move(indices);
  return set;
}

Var predict_stations(nn::Graph& g, const ModelState& s, const Dataset& d, const StationSet& backbone,
                     const StaticEncoding& backbone_enc, const StationSet& targets, const StaticEncoding& target_enc,
                     std::vector<std::size_t> target_rows, std::size_t t, const ForwardOptions& options,
                     ForwardTrace* trace) {
  std::vector<std::size_t> kept;
  BackboneSlice bb = backbone_slice(d, backbone.indices, t, s.normalization, backbone.stencils, kept);
  if (kept.empty()) return {};
  std::vector<Site> sites;
  sites.reserve(kept.size());
  for (std::size_t k : kept) sites.push_back(backbone.sites[k]);
  std::vector<GeoPoint> tpos;
  tpos.reserve(target_rows.size());
  for (std::size_t r : target_rows) tpos.push_back(targets.sites[r].position);
  const AttentionMask mask = build_connectivity(sites, tpos, s.config.connectivity);
  TargetSlice ts = target_slice(d.coarse, targets.stencils, std::move(target_rows), t, s.normalization);
  Var ctx = encode_context(g, s, backbone_tokens(g, s, backbone_enc, bb), mask_buffer(mask.self_mask), options, trace);
  return decode_targets(g, s, target_tokens(g, s, target_enc, ts), ctx, mask_buffer(mask.cross_mask), trace);
}

}  // namespace mw
