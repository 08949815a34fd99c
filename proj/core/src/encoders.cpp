#include "microweather/encoders.hpp"

#include <cmath>

#include "microweather/errors.hpp"
#include "microweather/spherical_harmonics.hpp"

namespace mw {

using nn::Matrix;
using nn::Var;

namespace {

WeatherBatch prepare_impl(std::span<const WeatherVector> obs, const ChannelFlags* flags, const ChannelStats& stats) {
  WeatherBatch b{Matrix(obs.size(), kChannels), Matrix(obs.size(), kChannels)};
  for (std::size_t i = 0; i < obs.size(); ++i) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      const bool ok = flags ? flags[i].usable(c) : true;
      if (!ok) continue;
      const double x = obs[i][c];
      if (!std::isfinite(x)) {
        throw EncodingError("non-finite " + std::string(channel_name(static_cast<Channel>(c))) + " input at row " +
                            std::to_string(i));
      }
      b.values(i, c) = stats.normalize(c, x);
      b.valid(i, c) = 1.0;
    }
  }
  return b;
}

Var p(nn::Graph& g, const nn::ParameterStore& s, const std::string& name) { return g.param(s, name); }

Var mlp2(nn::Graph& g, const nn::ParameterStore& s, const std::string& pre, const Var& x) {
  Var h = nn::relu(nn::linear(x, p(g, s, pre + ".w1"), p(g, s, pre + ".b1")));
  return nn::linear(h, p(g, s, pre + ".w2"), p(g, s, pre + ".b2"));
}

void add_mlp2(nn::ParameterStore& s, const std::string& pre, std::size_t in, std::size_t hidden, std::size_t out,
              std::mt19937_64& rng) {
  s.add(pre + ".w1", nn::glorot(in, hidden, rng, std::sqrt(2.0)));
  s.add(pre + ".b1", Matrix(1, hidden));
  s.add(pre + ".w2", nn::glorot(hidden, out, rng));
  s.add(pre + ".b2", Matrix(1, out));
}

const char* role_key(TokenRole r) { return r == TokenRole::Backbone ? ".backbone" : ".target"; }

}  // namespace

WeatherBatch prepare_weather(std::span<const WeatherVector> obs, std::span<const ChannelFlags> flags,
                             const ChannelStats& stats) {
  if (flags.size() != obs.size()) throw DimensionMismatch("observation and flag counts differ");
  return prepare_impl(obs, flags.data(), stats);
}

WeatherBatch prepare_weather(std::span<const WeatherVector> obs, const ChannelStats& stats) {
  return prepare_impl(obs, nullptr, stats);
}

void add_weather_tokenizer(nn::ParameterStore& s, const std::string& prefix, std::size_t hidden, std::size_t d_out,
                           std::mt19937_64& rng) {
  add_mlp2(s, prefix + ".t", 2, hidden, hidden, rng);
  add_mlp2(s, prefix + ".d", 2, hidden, hidden, rng);
  add_mlp2(s, prefix + ".w", 3, hidden, hidden, rng);
  s.add(prefix + ".proj.w", nn::glorot(3 * hidden, d_out, rng));
  s.add(prefix + ".proj.b", Matrix(1, d_out));
}

Var tokenize_weather(nn::Graph& g, const nn::ParameterStore& s, const std::string& prefix, const Var& values,
                     const Matrix& valid) {
  if (values.cols() != kChannels || !values.value().same_shape(valid)) {
    throw DimensionMismatch("weather tokenizer expects n x 4 values and indicators");
  }
  Var masked = nn::mul_const(values, valid);
  Var ind = g.constant(valid);
  const Var t_in[] = {nn::slice_cols(masked, 0, 1), nn::slice_cols(ind, 0, 1)};
  const Var d_in[] = {nn::slice_cols(masked, 1, 1), nn::slice_cols(ind, 1, 1)};
  const Var w_in[] = {nn::slice_cols(masked, 2, 2), nn::slice_cols(ind, 2, 1)};
  const Var parts[] = {mlp2(g, s, prefix + ".t", nn::concat_cols(t_in)), mlp2(g, s, prefix + ".d", nn::concat_cols(d_in)),
                       mlp2(g, s, prefix + ".w", nn::concat_cols(w_in))};
  return nn::linear(nn::concat_cols(parts), p(g, s, prefix + ".proj.w"), p(g, s, prefix + ".proj.b"));
}

void add_location_encoder(nn::ParameterStore& s, const std::string& prefix, const ModelConfig& c,
                          std::mt19937_64& rng) {
  const std::size_t basis = sh_basis_size(c.location_encoding_degree);
  const double first = 1.0 / static_cast<double>(basis);
  const double second = std::sqrt(6.0 / static_cast<double>(c.location_hidden)) / c.siren_w0;
  s.add(prefix + ".w1", nn::uniform(basis, c.location_hidden, first, rng));
  s.add(prefix + ".b1", nn::uniform(1, c.location_hidden, first, rng));
  s.add(prefix + ".w2", nn::uniform(c.location_hidden, c.location_dim, second, rng));
  s.add(prefix + ".b2", Matrix(1, c.location_dim));
}

Matrix location_basis(std::span<const double> lat, std::span<const double> lon, std::size_t degree) {
  Matrix m(lat.size(), sh_basis_size(degree));
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const auto row = real_spherical_harmonics(lat[i], lon[i], degree);
    std::copy(row.begin(), row.end(), m.row(i));
  }
  return m;
}

Var encode_location(nn::Graph& g, const nn::ParameterStore& s, const std::string& prefix, const Var& basis, double w0) {
  Var h = nn::sin(nn::scale(nn::linear(basis, p(g, s, prefix + ".w1"), p(g, s, prefix + ".b1")), w0));
  return nn::sin(nn::linear(h, p(g, s, prefix + ".w2"), p(g, s, prefix + ".b2")));
}

void add_surface_embedding_encoder(nn::ParameterStore& s, const std::string& prefix, std::size_t dim,
                                   std::size_t hidden, std::size_t d_out, std::mt19937_64& rng) {
  add_mlp2(s, prefix, dim, hidden, d_out, rng);
}

Var encode_surface_embedding(nn::Graph& g, const nn::ParameterStore& s, const std::string& prefix, const Var& x) {
  const std::size_t dim = s.at(prefix + ".w1").rows();
  if (x.cols() != dim) {
    throw DimensionMismatch("surface embedding has " + std::to_string(x.cols()) + " dimensions, model expects " +
                            std::to_string(dim));
  }
  return mlp2(g, s, prefix, x);
}

void add_chip_encoder(nn::ParameterStore& s, const std::string& prefix, const ChipSchema& schema,
                      std::size_t channels, std::size_t hidden, std::size_t d_out, std::mt19937_64& rng) {
  schema.validate();
  std::size_t n_coarse = 0;
  for (const auto& b : schema.bands) n_coarse += b.resolution == Resolution::Coarse ? 1 : 0;
  const std::size_t bands = schema.bands.size();
  const std::size_t f = schema.upsample_factor();
  if (n_coarse > 0) {
    s.add(prefix + ".up.k", Matrix(n_coarse, f * f, 1.0));
    s.add(prefix + ".up.b", Matrix(1, n_coarse));
  }
  s.add(prefix + ".dw.k", nn::uniform(bands, 9, 1.0 / 3.0, rng));
  s.add(prefix + ".dw.b", Matrix(1, bands));
  s.add(prefix + ".pw.w", nn::glorot(bands, channels, rng, std::sqrt(2.0)).transposed());
  s.add(prefix + ".pw.b", Matrix(1, channels));
  add_mlp2(s, prefix + ".mlp", channels, hidden, d_out, rng);
  s.add(prefix + ".skip.w", nn::glorot(bands, d_out, rng));
  s.add(prefix + ".skip.b", Matrix(1, d_out));
}

ChipBatch prepare_chips(std::span<const ChipStack* const> stacks, const ChipSchema& schema, bool center_only) {
  std::size_t nf = 0;
  std::size_t nc = 0;
  for (const auto& b : schema.bands) (b.resolution == Resolution::Fine ? nf : nc) += 1;
  ChipBatch out;
  out.locations = stacks.size();
  out.fine = Matrix(stacks.size() * nf, schema.fine_px * schema.fine_px);
  out.coarse = Matrix(stacks.size() * nc, schema.coarse_px * schema.coarse_px);
  for (std::size_t l = 0; l < stacks.size(); ++l) {
    if (!stacks[l]) throw ShapeError("missing chip stack for location " + std::to_string(l));
    validate_chips(*stacks[l], schema);
    std::size_t fi = 0;
    std::size_t ci = 0;
    for (const auto& chip : stacks[l]->bands) {
      const bool fine = chip.resolution == Resolution::Fine;
      double* dst = fine ? out.fine.row(l * nf + fi++) : out.coarse.row(l * nc + ci++);
      if (center_only) {
        const double v = chip.pixels[(chip.rows / 2) * chip.cols + chip.cols / 2];
        std::fill_n(dst, chip.pixels.size(), v);
      } else {
        std::copy(chip.pixels.begin(), chip.pixels.end(), dst);
      }
    }
  }
  return out;
}

Var encode_surface_chips(nn::Graph& g, const nn::ParameterStore& s, const std::string& prefix,
                         const ChipSchema& schema, const Var& fine, const Var& coarse, std::size_t locations) {
  std::size_t nf = 0;
  std::size_t nc = 0;
  for (const auto& b : schema.bands) (b.resolution == Resolution::Fine ? nf : nc) += 1;
  const std::size_t side = schema.fine_px;
  if (fine.rows() != locations * nf || (nf && fine.cols() != side * side) || coarse.rows() != locations * nc ||
      (nc && coarse.cols() != schema.coarse_px * schema.coarse_px)) {
    throw ShapeError("chip batch does not match the chip schema");
  }
  const std::size_t bands = nf + nc;

  std::vector<Var> merged_parts;
  std::vector<Var> centre_parts;
  if (nf) {
    merged_parts.push_back(fine);
    centre_parts.push_back(nn::center_pixels(fine, nf, side));
  }
  if (nc) {
    merged_parts.push_back(nn::upsample_blocks(coarse, p(g, s, prefix + ".up.k"), p(g, s, prefix + ".up.b"), nc,
                                               schema.coarse_px, schema.upsample_factor()));
    centre_parts.push_back(nn::center_pixels(coarse, nc, schema.coarse_px));
  }
  Var stacked = nn::concat_rows(merged_parts);
  // Interleave to rows loc * bands + b in schema order.
  std::vector<std::size_t> order;
  order.reserve(locations * bands);
  for (std::size_t l = 0; l < locations; ++l) {
    std::size_t fi = 0;
    std::size_t ci = 0;
    for (const auto& b : schema.bands) {
      if (b.resolution == Resolution::Fine) {
        order.push_back(l * nf + fi++);
      } else {
        order.push_back(locations * nf + l * nc + ci++);
      }
    }
  }
  Var images = nn::gather_rows(stacked, std::move(order));
  Var dw = nn::depthwise_conv3x3(images, p(g, s, prefix + ".dw.k"), p(g, s, prefix + ".dw.b"), bands, side);
  Var pw = nn::relu(nn::pointwise_conv(dw, p(g, s, prefix + ".pw.w"), p(g, s, prefix + ".pw.b"), bands));
  const std::size_t channels = s.at(prefix + ".pw.w").rows();
  Var pooled = nn::spatial_mean(pw, channels);
  Var body = mlp2(g, s, prefix + ".mlp", pooled);
  Var skip = nn::linear(nn::concat_cols(centre_parts), p(g, s, prefix + ".skip.w"), p(g, s, prefix + ".skip.b"));
  return nn::add(body, skip);
}

void add_token_assembler(nn::ParameterStore& s, const std::string& prefix, TokenRole role, std::size_t width,
                         std::size_t d_out, std::mt19937_64& rng) {
  s.add(prefix + role_key(role) + ".w", nn::glorot(width, d_out, rng));
  s.add(prefix + role_key(role) + ".b", Matrix(1, d_out));
}

Var assemble_token(nn::Graph& g, const nn::ParameterStore& s, const std::string& prefix, TokenRole role,
                   const Var& era5, const Var* station, const Var* surface, const Var& location) {
  if (role == TokenRole::Target && station) throw RoleMismatch("target tokens cannot carry a station observation");
  if (role == TokenRole::Backbone && !station) throw RoleMismatch("backbone tokens require a station observation");
  std::vector<Var> parts{era5};
  if (station) parts.push_back(*station);
  if (surface) parts.push_back(*surface);
  parts.push_back(location);
  const std::string key = prefix + role_key(role);
  const Var w = p(g, s, key + ".w");
  std::size_t width = 0;
  for (const auto& v : parts) width += v.cols();
  if (width != w.rows()) {
    throw DimensionMismatch("assembled token width " + std::to_string(width) + " does not match projection input " +
                            std::to_string(w.rows()));
  }
  return nn::linear(nn::concat_cols(parts), w, p(g, s, key + ".b"));
}

}  // namespace mw
