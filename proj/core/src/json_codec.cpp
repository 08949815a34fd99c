#include "json_codec.hpp"

#include "microweather/errors.hpp"

namespace mw {

using nlohmann::json;

namespace {

template <typename T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad value for '") + key + "': " + e.what());
  }
}

json field_to_json(const FourierField& f) {
  json modes = json::array();
  for (const auto& m : f.modes) modes.push_back({m.ky, m.kx, m.phase, m.amp});
  return modes;
}

FourierField field_from_json(const json& j) {
  FourierField f;
  for (const auto& m : j) {
    const auto v = m.get<std::vector<double>>();
    if (v.size() != 4) throw SchemaError("Fourier mode needs 4 numbers");
    f.modes.push_back({v[0], v[1], v[2], v[3]});
  }
  return f;
}

json stats_to_json(const ChannelStats& s) { return {{"mean", s.mean}, {"std", s.std}}; }

ChannelStats stats_from_json(const json& j) {
  ChannelStats s;
  s.mean = get<std::array<double, kChannels>>(j, "mean");
  s.std = get<std::array<double, kChannels>>(j, "std");
  return s;
}

}  // namespace

json to_json(const ChipSchema& s) {
  json bands = json::array();
  for (const auto& b : s.bands) bands.push_back({{"name", b.name}, {"resolution", resolution_name(b.resolution)}});
  return {{"bands", bands}, {"fine_px", s.fine_px}, {"coarse_px", s.coarse_px}};
}

ChipSchema chip_schema_from_json(const json& j) {
  ChipSchema s;
  s.fine_px = get<std::size_t>(j, "fine_px");
  s.coarse_px = get<std::size_t>(j, "coarse_px");
  for (const auto& b : get<json>(j, "bands")) {
    s.bands.push_back({get<std::string>(b, "name"), parse_resolution(get<std::string>(b, "resolution"))});
  }
  return s;
}

json to_json(const SurfaceSchema& s) {
  return {{"kind", surface_kind_name(s.kind)}, {"embedding_dim", s.embedding_dim}, {"chips", to_json(s.chips)}};
}

SurfaceSchema surface_schema_from_json(const json& j) {
  SurfaceSchema s;
  s.kind = parse_surface_kind(get<std::string>(j, "kind"));
  s.embedding_dim = get<std::size_t>(j, "embedding_dim");
  s.chips = chip_schema_from_json(get<json>(j, "chips"));
  return s;
}

json to_json(const SurfaceResponse& r) {
  json latent = json::array();
  for (const auto& f : r.latent) latent.push_back(field_to_json(f));
  json idio = json::array();
  for (const auto& f : r.idiosyncratic) idio.push_back(field_to_json(f));
  return {{"surface_dim", r.surface_dim}, {"units", r.units},       {"latent", latent},
          {"idiosyncratic", idio},        {"mixing", r.mixing},     {"idiosyncratic_weight", r.idiosyncratic_weight},
          {"w", r.w},                     {"b", r.b},               {"a", r.a}};
}

SurfaceResponse surface_response_from_json(const json& j) {
  SurfaceResponse r;
  r.surface_dim = get<std::size_t>(j, "surface_dim");
  r.units = get<std::size_t>(j, "units");
  for (const auto& f : get<json>(j, "latent")) r.latent.push_back(field_from_json(f));
  for (const auto& f : get<json>(j, "idiosyncratic")) r.idiosyncratic.push_back(field_from_json(f));
  r.mixing = get<std::vector<double>>(j, "mixing");
  r.idiosyncratic_weight = get<double>(j, "idiosyncratic_weight");
  r.w = get<std::vector<double>>(j, "w");
  r.b = get<std::vector<double>>(j, "b");
  r.a = get<std::vector<double>>(j, "a");
  if (r.idiosyncratic.size() != r.surface_dim || r.mixing.size() != r.surface_dim * r.latent.size() ||
      r.w.size() != r.units * r.surface_dim || r.b.size() != r.units || r.a.size() != kChannels * r.units) {
    throw SchemaError("surface response coefficients have inconsistent sizes");
  }
  return r;
}

json to_json(const ModelConfig& c) {
  return {{"d_latent", c.d_latent},
          {"n_heads", c.n_heads},
          {"n_layers_self", c.n_layers_self},
          {"n_layers_cross", c.n_layers_cross},
          {"location_encoding_degree", c.location_encoding_degree},
          {"location_hidden", c.location_hidden},
          {"location_dim", c.location_dim},
          {"siren_w0", c.siren_w0},
          {"mlp_hidden", c.mlp_hidden},
          {"ffn_hidden", c.ffn_hidden},
          {"connectivity", c.connectivity.to_string()},
          {"surface_mode", surface_mode_name(c.surface_mode)},
          {"surface_dim", c.surface_dim},
          {"chips", to_json(c.chips)},
          {"chip_channels", c.chip_channels},
          {"chip_center_only", c.chip_center_only},
          {"pre_norm", c.pre_norm},
          {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.d_latent = get<std::size_t>(j, "d_latent");
  c.n_heads = get<std::size_t>(j, "n_heads");
  c.n_layers_self = get<std::size_t>(j, "n_layers_self");
  c.n_layers_cross = get<std::size_t>(j, "n_layers_cross");
  c.location_encoding_degree = get<std::size_t>(j, "location_encoding_degree");
  c.location_hidden = get<std::size_t>(j, "location_hidden");
  c.location_dim = get<std::size_t>(j, "location_dim");
  c.siren_w0 = get<double>(j, "siren_w0");
  c.mlp_hidden = get<std::size_t>(j, "mlp_hidden");
  c.ffn_hidden = get<std::size_t>(j, "ffn_hidden");
  c.connectivity = Connectivity::parse(get<std::string>(j, "connectivity"));
  c.surface_mode = parse_surface_mode(get<std::string>(j, "surface_mode"));
  c.surface_dim = get<std::size_t>(j, "surface_dim");
  c.chips = chip_schema_from_json(get<json>(j, "chips"));
  c.chip_channels = get<std::size_t>(j, "chip_channels");
  c.chip_center_only = get<bool>(j, "chip_center_only");
  c.pre_norm = get<bool>(j, "pre_norm");
  c.seed = get<std::uint64_t>(j, "seed");
  return c;
}

json to_json(const Normalization& n) { return {{"station", stats_to_json(n.station)}, {"coarse", stats_to_json(n.coarse)}}; }

Normalization normalization_from_json(const json& j) {
  return {stats_from_json(get<json>(j, "station")), stats_from_json(get<json>(j, "coarse"))};
}

}  // namespace mw
