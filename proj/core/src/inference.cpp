#include "microweather/inference.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "json_codec.hpp"
#include "microweather/errors.hpp"
#include "microweather/hash.hpp"
#include "microweather/model.hpp"
#include "microweather/spherical_harmonics.hpp"
#include "microweather/synthetic.hpp"

namespace mw {

using nn::Matrix;
using nn::Var;

namespace {

std::size_t time_index(const Dataset& d, Timestamp t) {
  auto i = d.times().index_of(t);
  if (!i) throw UnknownTimestamp("timestamp " + std::to_string(t) + " is not on the coarse time axis");
  return *i;
}

StationSet point_set(const Dataset& d, const ModelConfig& c, std::span<const GeoPoint> positions,
                     std::span<const SurfaceFeature* const> surfaces) {
  StationSet set;
  set.stencils = stencils_for(d.coarse, positions);
  set.statics = make_static_inputs(positions, surfaces, c);
  for (const auto& p : positions) set.sites.push_back({"", p});
  return set;
}

// Backbone context at one hour, shared by every block of a tile.
struct Context {
  std::vector<Site> sites;
  Matrix values;
};

Context backbone_context(const ModelState& s, const Dataset& d, const StationSet& backbone, std::size_t t) {
  nn::Graph g(false);
  const StaticEncoding enc = encode_static(g, s, backbone.statics);
  std::vector<std::size_t> kept;
  const BackboneSlice slice = backbone_slice(d, backbone.indices, t, s.normalization, backbone.stencils, kept);
  if (kept.empty()) throw MaskRowEmpty("no backbone station has an observation at this hour");
  Context ctx;
  for (std::size_t k : kept) ctx.sites.push_back(backbone.sites[k]);
  const AttentionMask mask = build_connectivity(ctx.sites, {}, s.config.connectivity);
  ctx.values = encode_context(g, s, backbone_tokens(g, s, enc, slice), mask_buffer(mask.self_mask), {}, nullptr).value();
  return ctx;
}

std::size_t bytes_per_pixel(const ModelConfig& c, std::size_t n_backbone) {
  std::size_t f = sh_basis_size(c.location_encoding_degree) + c.location_hidden + c.location_dim;
  f += 6 * c.mlp_hidden + 8 * c.d_latent + c.surface_dim;
  f += c.n_layers_cross * (6 * c.d_latent + c.ffn_width() + 3 * c.n_heads * n_backbone);
  if (c.surface_mode == SurfaceMode::ChipEncoder) {
    f += c.chips.fine_px * c.chips.fine_px * c.chips.bands.size() * (3 + c.chip_channels);
  }
  return 16 * f;  // values plus intermediate copies
}

}  // namespace

std::vector<WeatherVector> infer_points(const ModelState& s, const Dataset& d, std::span<const PointTarget> targets,
                                        Timestamp ts) {
  const std::size_t t = time_index(d, ts);
  if (targets.empty()) return {};
  std::vector<GeoPoint> pos;
  std::vector<const SurfaceFeature*> surf;
  for (const auto& p : targets) {
    pos.push_back(p.position);
    surf.push_back(&p.surface);
  }
  const StationSet tg = point_set(d, s.config, pos, surf);
  const StationSet bb = make_station_set(d, d.indices(Role::Backbone), s.config);
  const Context ctx = backbone_context(s, d, bb, t);
  nn::Graph g(false);
  const StaticEncoding tenc = encode_static(g, s, tg.statics);
  std::vector<std::size_t> rows(targets.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const AttentionMask mask = build_connectivity(ctx.sites, pos, s.config.connectivity);
  TargetSlice slice = target_slice(d.coarse, tg.stencils, rows, t, s.normalization);
  Var out = decode_targets(g, s, target_tokens(g, s, tenc, slice), g.constant(ctx.values), mask_buffer(mask.cross_mask),
                           nullptr);
  return denormalize_predictions(out.value(), s.normalization.station);
}

GeoPoint TileSpec::pixel_center(std::size_t r, std::size_t c) const noexcept {
  const PlanarPoint p{(static_cast<double>(c) + 0.5) * pixel_m / 1000.0, -(static_cast<double>(r) + 0.5) * pixel_m / 1000.0};
  return unproject_local(p, origin);
}

void TileSpec::validate(const CoarseField& coarse) const {
  if (rows == 0 || cols == 0) throw InvalidConfig("tile must have at least one pixel");
  if (!(pixel_m > 0.0) || !std::isfinite(pixel_m)) throw InvalidConfig("pixel size must be positive");
  for (std::size_t r : {std::size_t{0}, rows - 1}) {
    for (std::size_t c : {std::size_t{0}, cols - 1}) {
      const GeoPoint p = pixel_center(r, c);
      if (!coarse.in_hull(p.lat, p.lon)) throw OutOfHull("tile pixel centre outside the coarse grid");
    }
  }
}

SurfaceSource synthetic_surface_source(const Dataset& d) {
  if (!d.truth) throw InvalidConfig("dataset has no synthetic surface function");
  return [truth = *d.truth, kind = d.surface.kind, chips = d.surface.chips](const GeoPoint& p, std::size_t,
                                                                             std::size_t) {
    return synthetic_surface(truth, p, kind, chips);
  };
}

EmbeddingRaster load_embedding_raster(const std::filesystem::path& path) {
  std::ifstream js(path.string() + ".json");
  if (!js) throw IoError("cannot open " + path.string() + ".json");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(js);
    EmbeddingRaster r;
    r.rows = j.at("rows").get<std::size_t>();
    r.cols = j.at("cols").get<std::size_t>();
    r.dim = j.at("dim").get<std::size_t>();
    const auto bytes = detail::read_file_bytes(path);
    if (bytes.size() != r.rows * r.cols * r.dim * sizeof(float)) {
      throw SchemaError("embedding raster " + path.string() + " has the wrong size");
    }
    r.values.resize(r.rows * r.cols * r.dim);
    std::memcpy(r.values.data(), bytes.data(), bytes.size());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("bad embedding raster header: " + std::string(e.what()));
  }
}

void save_embedding_raster(const EmbeddingRaster& r, const std::filesystem::path& path) {
  if (r.values.size() != r.rows * r.cols * r.dim) throw DimensionMismatch("embedding raster size mismatch");
  detail::ByteWriter w;
  w.put_bytes(r.values.data(), r.values.size() * sizeof(float));
  detail::write_file_bytes(path, w.bytes());
  std::ofstream js(path.string() + ".json");
  js << nlohmann::json{{"rows", r.rows}, {"cols", r.cols}, {"dim", r.dim}}.dump(2) << '\n';
}

SurfaceSource embedding_raster_source(EmbeddingRaster raster) {
  auto shared = std::make_shared<const EmbeddingRaster>(std::move(raster));
  return [shared](const GeoPoint&, std::size_t r, std::size_t c) -> SurfaceFeature {
    const auto& e = *shared;
    if (r >= e.rows || c >= e.cols) throw DimensionMismatch("embedding raster smaller than the tile");
    const float* p = e.values.data() + (r * e.cols + c) * e.dim;
    return Embedding{std::vector<double>(p, p + e.dim)};
  };
}

FieldRaster infer_tile(const ModelState& s, const Dataset& d, const TileSpec& tile, const SurfaceSource& surface,
                       const TileOptions& options) {
  tile.validate(d.coarse);
  const std::size_t t = time_index(d, tile.timestamp);
  const StationSet bb = make_station_set(d, d.indices(Role::Backbone), s.config);
  const Context ctx = backbone_context(s, d, bb, t);

  std::size_t side = std::max<std::size_t>(options.block, 1);
  const std::size_t per_px = bytes_per_pixel(s.config, ctx.sites.size());
  while (side > 1 && side * side * per_px > options.memory_budget_bytes) side = (side + 1) / 2;

  FieldRaster out;
  out.tile = tile;
  out.values.assign(kChannels * tile.rows * tile.cols, 0.0f);
  out.checkpoint_id = model_fingerprint(s);
  out.connectivity = s.config.connectivity.to_string();

  const std::size_t brows = (tile.rows + side - 1) / side;
  const std::size_t bcols = (tile.cols + side - 1) / side;
  const std::size_t nblocks = brows * bcols;
  std::vector<std::exception_ptr> errors(nblocks);
  std::atomic<std::size_t> next{0};

  auto run_block = [&](std::size_t b) {
    const std::size_t r0 = (b / bcols) * side;
    const std::size_t c0 = (b % bcols) * side;
    const std::size_t r1 = std::min(r0 + side, tile.rows);
    const std::size_t c1 = std::min(c0 + side, tile.cols);
    std::vector<GeoPoint> pos;
    std::vector<SurfaceFeature> feats;
    for (std::size_t r = r0; r < r1; ++r) {
      for (std::size_t c = c0; c < c1; ++c) {
        pos.push_back(tile.pixel_center(r, c));
        feats.push_back(s.config.surface_mode == SurfaceMode::None ? SurfaceFeature{} : surface(pos.back(), r, c));
      }
    }
    std::vector<const SurfaceFeature*> fp(feats.size());
    for (std::size_t i = 0; i < feats.size(); ++i) fp[i] = &feats[i];
    const StationSet tg = point_set(d, s.config, pos, fp);
    std::vector<std::size_t> rows(pos.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    nn::Graph g(false);
    const StaticEncoding tenc = encode_static(g, s, tg.statics);
    const AttentionMask mask = build_connectivity(ctx.sites, pos, s.config.connectivity);
    TargetSlice slice = target_slice(d.coarse, tg.stencils, rows, t, s.normalization);
    Var y = decode_targets(g, s, target_tokens(g, s, tenc, slice), g.constant(ctx.values),
                           mask_buffer(mask.cross_mask), nullptr);
    const auto pred = denormalize_predictions(y.value(), s.normalization.station);
    std::size_t i = 0;
    for (std::size_t r = r0; r < r1; ++r) {
      for (std::size_t c = c0; c < c1; ++c, ++i) {
        for (std::size_t ch = 0; ch < kChannels; ++ch) {
          out.values[(ch * tile.rows + r) * tile.cols + c] = static_cast<float>(pred[i][ch]);
        }
      }
    }
  };
  auto worker = [&] {
    for (std::size_t b = next++; b < nblocks; b = next++) {
      try {
        run_block(b);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  const std::size_t nw = std::clamp<std::size_t>(options.workers, 1, nblocks);
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (float v : out.values) {
    if (!std::isfinite(v)) throw NumericalError("tile inference produced a non-finite value");
  }
  return out;
}

std::string model_fingerprint(const ModelState& s) {
  detail::ByteWriter w;
  w.put_string(to_json(s.config).dump());
  w.put_string(to_json(s.normalization).dump());
  for (const auto& [name, m] : s.parameters) {
    w.put_string(name);
    w.put<std::uint64_t>(m.rows());
    w.put<std::uint64_t>(m.cols());
    w.put_bytes(m.data(), m.size() * sizeof(double));
  }
  return hex64(fnv1a64(w.bytes()));
}

void write_raster(const FieldRaster& raster, const std::filesystem::path& stem) {
  detail::ByteWriter w;
  w.put_bytes(raster.values.data(), raster.values.size() * sizeof(float));
  detail::write_file_bytes(stem.string() + ".f32", w.bytes());
  const auto& t = raster.tile;
  nlohmann::json j = {
      {"format", "mw-raster"},
      {"version", 1},
      {"rows", t.rows},
      {"cols", t.cols},
      {"dtype", "float32"},
      {"byte_order", "little"},
      {"layout", "channel, row, col"},
      {"channels", {"temperature_c", "dewpoint_c", "wind_u_ms", "wind_v_ms"}},
      {"origin", {{"lat", t.origin.lat}, {"lon", t.origin.lon}}},
      {"pixel_m", t.pixel_m},
      {"georeference",
       "local equirectangular plane about origin (north-west corner); pixel (r, c) centre at "
       "x = (c + 0.5) * pixel_m east, y = -(r + 0.5) * pixel_m north"},
      {"timestamp_hours", t.timestamp},
      {"checkpoint_id", raster.checkpoint_id},
      {"connectivity", raster.connectivity}};
  std::ofstream js(stem.string() + ".json");
  if (!js) throw IoError("cannot write " + stem.string() + ".json");
  js << j.dump(2) << '\n';
}

FieldRaster read_raster(const std::filesystem::path& stem) {
  std::ifstream js(stem.string() + ".json");
  if (!js) throw IoError("cannot open " + stem.string() + ".json");
  FieldRaster r;
  try {
    const auto j = nlohmann::json::parse(js);
    r.tile.rows = j.at("rows").get<std::size_t>();
    r.tile.cols = j.at("cols").get<std::size_t>();
    r.tile.origin = {j.at("origin").at("lat").get<double>(), j.at("origin").at("lon").get<double>()};
    r.tile.pixel_m = j.at("pixel_m").get<double>();
    r.tile.timestamp = j.at("timestamp_hours").get<Timestamp>();
    r.checkpoint_id = j.at("checkpoint_id").get<std::string>();
    r.connectivity = j.at("connectivity").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("bad raster header: " + std::string(e.what()));
  }
  const auto bytes = detail::read_file_bytes(stem.string() + ".f32");
  if (bytes.size() != kChannels * r.tile.rows * r.tile.cols * sizeof(float)) {
    throw SchemaError("raster " + stem.string() + ".f32 has the wrong size");
  }
  r.values.resize(kChannels * r.tile.rows * r.tile.cols);
  std::memcpy(r.values.data(), bytes.data(), bytes.size());
  return r;
}

}  // namespace mw
