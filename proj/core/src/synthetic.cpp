#include "microweather/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "microweather/coarse_field.hpp"
#include "microweather/errors.hpp"
#include "microweather/fill.hpp"
#include "microweather/hash.hpp"

namespace mw {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Independent generator per component so that, e.g., switching the surface kind leaves the
// coarse field and the noise untouched.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) { return std::mt19937_64(mix64(seed ^ mix64(tag))); }

enum StreamTag : std::uint64_t { kSites = 1, kCoarse, kSurface, kResponse, kNoise, kMissing };

// Random plane waves with wavelengths (degrees) uniform in [lmin, lmax]; total variance `var`.
void add_modes(FourierField& f, std::size_t count, double lmin, double lmax, double var, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double amp = std::sqrt(2.0 * var / static_cast<double>(count));
  for (std::size_t m = 0; m < count; ++m) {
    const double wavelength = lmin + (lmax - lmin) * u01(rng);
    const double angle = kTwoPi * u01(rng);
    const double k = 1.0 / wavelength;
    f.modes.push_back({k * std::sin(angle), k * std::cos(angle), kTwoPi * u01(rng), amp});
  }
}

FourierField texture(double smooth_fraction, std::mt19937_64& rng) {
  FourierField f;
  add_modes(f, 6, 0.5, 2.0, smooth_fraction, rng);
  add_modes(f, 12, 0.005, 0.03, 1.0 - smooth_fraction, rng);
  return f;
}

struct CoarseMode {
  double ky, kx, period, phase, amp;
};

}  // namespace

double FourierField::value(const GeoPoint& p) const noexcept {
  double s = 0.0;
  for (const auto& m : modes) s += m.amp * std::cos(kTwoPi * (m.ky * p.lat + m.kx * p.lon) + m.phase);
  return s;
}

std::vector<double> SurfaceResponse::surface_at(const GeoPoint& p) const {
  std::vector<double> z(latent.size());
  for (std::size_t r = 0; r < latent.size(); ++r) z[r] = latent[r].value(p);
  std::vector<double> s(surface_dim);
  for (std::size_t j = 0; j < surface_dim; ++j) {
    double v = idiosyncratic_weight * idiosyncratic[j].value(p);
    for (std::size_t r = 0; r < latent.size(); ++r) v += mixing[j * latent.size() + r] * z[r];
    s[j] = v;
  }
  return s;
}

WeatherVector SurfaceResponse::response(std::span<const double> s) const {
  std::vector<double> h(units);
  for (std::size_t g = 0; g < units; ++g) {
    double x = b[g];
    for (std::size_t j = 0; j < surface_dim; ++j) x += w[g * surface_dim + j] * s[j];
    h[g] = std::tanh(x);
  }
  WeatherVector out;
  for (std::size_t c = 0; c < kChannels; ++c) {
    double v = 0.0;
    for (std::size_t g = 0; g < units; ++g) v += a[c * units + g] * h[g];
    out[c] = v;
  }
  return out;
}

void SyntheticWorldSpec::validate() const {
  if (n_backbone < 1 || n_train < 1 || n_val < 1 || n_test < 1) throw InvalidConfig("all station counts must be >= 1");
  if (nlat < 2 || nlon < 2 || !(dlat > 0.0) || !(dlon > 0.0)) throw InvalidConfig("grid needs >= 2x2 nodes and positive spacing");
  if (time_steps < 1) throw InvalidConfig("time_steps must be >= 1");
  if (surface_dim < 1 || latent_factors < 1 || response_units < 1) throw InvalidConfig("surface sizes must be >= 1");
  if (!(smooth_fraction >= 0.0 && smooth_fraction <= 1.0)) throw InvalidConfig("smooth_fraction must lie in [0,1]");
  if (!(idiosyncratic_weight >= 0.0 && idiosyncratic_weight < 1.0)) throw InvalidConfig("idiosyncratic_weight must lie in [0,1)");
  for (std::size_t c = 0; c < kChannels; ++c) {
    if (!(noise_std[c] >= 0.0)) throw InvalidConfig("noise_std must be >= 0");
    if (!(coarse_scale[c] >= 0.0) || !(surface_scale[c] >= 0.0)) throw InvalidConfig("scales must be >= 0");
  }
  for (double q : role_quality) {
    if (!(q > 0.0 && q <= 1.0)) throw InvalidConfig("role quality must lie in (0,1]");
  }
  if (surface_kind == SurfaceKind::Chips && coarse_chip_bands > surface_dim) {
    throw InvalidConfig("coarse_chip_bands exceeds surface_dim");
  }
}

ChipSchema synthetic_chip_schema(const SyntheticWorldSpec& spec) {
  ChipSchema schema;
  for (std::size_t j = 0; j < spec.surface_dim; ++j) {
    const bool coarse = j + spec.coarse_chip_bands >= spec.surface_dim;
    schema.bands.push_back({"s" + std::to_string(j), coarse ? Resolution::Coarse : Resolution::Fine});
  }
  return schema;
}

ChipStack synthetic_chips(const SurfaceResponse& truth, const GeoPoint& p, const ChipSchema& schema) {
  ChipStack stack;
  for (Resolution res : {Resolution::Fine, Resolution::Coarse}) {
    const std::size_t side = res == Resolution::Fine ? schema.fine_px : schema.coarse_px;
    const double px_km = (res == Resolution::Fine ? kFinePixelM : kCoarsePixelM) / 1000.0;
    bool any = false;
    for (const auto& b : schema.bands) any = any || b.resolution == res;
    if (!any) continue;
    // Pixel (side/2, side/2) is centred on p; rows run north to south.
    std::vector<std::vector<double>> samples(side * side);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const PlanarPoint off{(static_cast<double>(c) - static_cast<double>(side / 2)) * px_km,
                              (static_cast<double>(side / 2) - static_cast<double>(r)) * px_km};
        samples[r * side + c] = truth.surface_at(unproject_local(off, p));
      }
    }
    for (std::size_t j = 0; j < schema.bands.size(); ++j) {
      if (schema.bands[j].resolution != res) continue;
      Chip chip{schema.bands[j].name, res, side, side, std::vector<double>(side * side)};
      for (std::size_t k = 0; k < side * side; ++k) chip.pixels[k] = samples[k][j % truth.surface_dim];
      stack.bands.push_back(std::move(chip));
    }
  }
  // Restore schema band order.
  ChipStack ordered;
  for (const auto& b : schema.bands) {
    for (auto& chip : stack.bands) {
      if (chip.band == b.name) ordered.bands.push_back(std::move(chip));
    }
  }
  return ordered;
}

SurfaceFeature synthetic_surface(const SurfaceResponse& truth, const GeoPoint& p, SurfaceKind kind,
                                 const ChipSchema& schema) {
  switch (kind) {
    case SurfaceKind::None:
      return std::monostate{};
    case SurfaceKind::Embedding:
      return Embedding{truth.surface_at(p)};
    case SurfaceKind::Chips:
      return synthetic_chips(truth, p, schema);
  }
  return std::monostate{};
}

Dataset generate_synthetic_world(const SyntheticWorldSpec& spec) {
  spec.validate();
  Dataset d;
  const std::size_t T = spec.time_steps;
  const std::size_t counts[4] = {spec.n_backbone, spec.n_train, spec.n_val, spec.n_test};
  const std::size_t n = counts[0] + counts[1] + counts[2] + counts[3];

  // Coarse grid geometry.
  auto& cf = d.coarse;
  cf.lat0 = spec.lat0;
  cf.lon0 = spec.lon0;
  cf.dlat = spec.dlat;
  cf.dlon = spec.dlon;
  cf.nlat = spec.nlat;
  cf.nlon = spec.nlon;
  cf.times = {spec.start, T};

  // Station sites, uniform inside the hull with a 2% margin.
  std::vector<GeoPoint> sites(n);
  std::vector<Role> roles(n);
  {
    auto rng = stream(spec.seed, kSites);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double lat_span = cf.lat_max() - cf.lat0;
    const double lon_span = cf.lon_max() - cf.lon0;
    for (auto& s : sites) {
      s.lat = cf.lat0 + lat_span * (0.02 + 0.96 * u01(rng));
      s.lon = cf.lon0 + lon_span * (0.02 + 0.96 * u01(rng));
    }
    std::size_t k = 0;
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t i = 0; i < counts[r]; ++i) roles[k++] = static_cast<Role>(r);
    }
  }

  // Surface function and response coefficients.
  SurfaceResponse truth;
  truth.surface_dim = spec.surface_dim;
  truth.units = spec.response_units;
  truth.idiosyncratic_weight = spec.idiosyncratic_weight;
  {
    auto rng = stream(spec.seed, kSurface);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t r = 0; r < spec.latent_factors; ++r) truth.latent.push_back(texture(spec.smooth_fraction, rng));
    for (std::size_t j = 0; j < spec.surface_dim; ++j) truth.idiosyncratic.push_back(texture(spec.smooth_fraction, rng));
    const double row_norm = std::sqrt(1.0 - spec.idiosyncratic_weight * spec.idiosyncratic_weight);
    truth.mixing.resize(spec.surface_dim * spec.latent_factors);
    for (std::size_t j = 0; j < spec.surface_dim; ++j) {
      double ss = 0.0;
      for (std::size_t r = 0; r < spec.latent_factors; ++r) {
        const double v = normal(rng);
        truth.mixing[j * spec.latent_factors + r] = v;
        ss += v * v;
      }
      for (std::size_t r = 0; r < spec.latent_factors; ++r) {
        truth.mixing[j * spec.latent_factors + r] *= row_norm / std::sqrt(std::max(ss, 1e-300));
      }
    }
  }
  {
    auto rng = stream(spec.seed, kResponse);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> bias(-0.5, 0.5);
    const double wscale = spec.response_gain / std::sqrt(static_cast<double>(spec.surface_dim));
    truth.w.resize(truth.units * truth.surface_dim);
    for (auto& x : truth.w) x = wscale * normal(rng);
    truth.b.resize(truth.units);
    for (auto& x : truth.b) x = bias(rng);
    truth.a.resize(kChannels * truth.units);
    for (auto& x : truth.a) x = normal(rng);
  }
  std::vector<std::vector<double>> surfaces(n);
  for (std::size_t i = 0; i < n; ++i) surfaces[i] = truth.surface_at(sites[i]);
  // Calibrate A so the realized station-sample std of each response channel equals surface_scale.
  {
    std::vector<WeatherVector> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = truth.response(surfaces[i]);
    for (std::size_t c = 0; c < kChannels; ++c) {
      double mean = 0.0;
      for (const auto& r : raw) mean += r[c];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (const auto& r : raw) var += (r[c] - mean) * (r[c] - mean);
      const double sd = std::sqrt(var / static_cast<double>(n));
      const double alpha = sd > 0.0 ? spec.surface_scale[c] / sd : 0.0;
      for (std::size_t g = 0; g < truth.units; ++g) truth.a[c * truth.units + g] *= alpha;
    }
  }

  // Coarse field: drifting plane waves plus a diurnal cycle, calibrated on the station sample.
  {
    auto rng = stream(spec.seed, kCoarse);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<WeatherVector> raw(T * cf.nlat * cf.nlon);
    for (std::size_t c = 0; c < kChannels; ++c) {
      std::vector<CoarseMode> modes;
      for (int m = 0; m < 8; ++m) {
        const double wavelength = 2.0 + 6.0 * u01(rng);
        const double angle = kTwoPi * u01(rng);
        modes.push_back({std::sin(angle) / wavelength, std::cos(angle) / wavelength, 12.0 + 228.0 * u01(rng),
                         kTwoPi * u01(rng), 0.5 + u01(rng)});
      }
      const double diurnal = c < 2 ? 2.0 : 0.7;
      const double diurnal_phase = kTwoPi * u01(rng);
      for (std::size_t t = 0; t < T; ++t) {
        const double hour = static_cast<double>(cf.times.at(t));
        for (std::size_t i = 0; i < cf.nlat; ++i) {
          for (std::size_t j = 0; j < cf.nlon; ++j) {
            const double lat = cf.lat0 + cf.dlat * static_cast<double>(i);
            const double lon = cf.lon0 + cf.dlon * static_cast<double>(j);
            double v = diurnal * std::cos(kTwoPi * (hour + lon / 15.0) / 24.0 + diurnal_phase);
            for (const auto& m : modes) {
              v += m.amp * std::cos(kTwoPi * (m.ky * lat + m.kx * lon - hour / m.period) + m.phase);
            }
            raw[(t * cf.nlat + i) * cf.nlon + j][c] = v;
          }
        }
      }
    }
    cf.values = raw;
    std::vector<BilinearStencil> stencils(n);
    for (std::size_t i = 0; i < n; ++i) stencils[i] = bilinear_stencil(cf, sites[i].lat, sites[i].lon);
    for (std::size_t c = 0; c < kChannels; ++c) {
      double sum = 0.0;
      double sum2 = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
          const double v = sample_coarse(cf, stencils[i], t)[c];
          sum += v;
          sum2 += v * v;
        }
      }
      const double count = static_cast<double>(T * n);
      const double mean = sum / count;
      const double sd = std::sqrt(std::max(sum2 / count - mean * mean, 0.0));
      const double alpha = sd > 0.0 ? spec.coarse_scale[c] / sd : 0.0;
      for (auto& v : cf.values) v[c] = spec.channel_mean[c] + alpha * (v[c] - mean);
    }
  }

  // Station series.
  const ChipSchema schema = synthetic_chip_schema(spec);
  auto noise_rng = stream(spec.seed, kNoise);
  auto miss_rng = stream(spec.seed, kMissing);
  std::normal_distribution<double> normal(0.0, 1.0);
  d.stations.resize(n);
  std::size_t observed_rows = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Station& s = d.stations[i];
    std::string num = std::to_string(i);
    s.id = "st" + std::string(num.size() < 4 ? 4 - num.size() : 0, '0') + num;
    s.lat = sites[i].lat;
    s.lon = sites[i].lon;
    const WeatherVector resp = truth.response(surfaces[i]);
    const BilinearStencil st = bilinear_stencil(cf, s.lat, s.lon);
    s.series.values.resize(T);
    s.series.flags.assign(T, ChannelFlags::all(SlotState::Observed));
    for (std::size_t t = 0; t < T; ++t) {
      const WeatherVector base = sample_coarse(cf, st, t);
      for (std::size_t c = 0; c < kChannels; ++c) {
        s.series.values[t][c] = base[c] + resp[c] + spec.noise_std[c] * normal(noise_rng);
      }
    }
    const double q = spec.role_quality[static_cast<std::size_t>(roles[i])];
    const auto n_missing = static_cast<std::size_t>(std::llround((1.0 - q) * static_cast<double>(T)));
    std::vector<std::size_t> hours(T);
    for (std::size_t t = 0; t < T; ++t) hours[t] = t;
    for (std::size_t k = 0; k < n_missing; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, T - 1);
      std::swap(hours[k], hours[pick(miss_rng)]);
      s.series.flags[hours[k]] = ChannelFlags::all(SlotState::Missing);
    }
    observed_rows += T - n_missing;
    s.quality_fraction = compute_quality_fraction(s.series);
    fill_missing_lenient(s.series);
    s.surface = synthetic_surface(truth, sites[i], spec.surface_kind, schema);
    d.partition.members(roles[i]).insert(s.id);
  }

  d.surface.kind = spec.surface_kind;
  if (spec.surface_kind == SurfaceKind::Embedding) d.surface.embedding_dim = spec.surface_dim;
  if (spec.surface_kind == SurfaceKind::Chips) d.surface.chips = schema;
  d.report.stations = n;
  d.report.rows = observed_rows;
  d.report.coverage_fraction = static_cast<double>(observed_rows) / static_cast<double>(n * T);
  for (const auto& s : d.stations) {
    for (std::size_t c = 0; c < kChannels; ++c) {
      bool any = false;
      for (const auto& f : s.series.flags) any = any || f.observed(c);
      if (!any) ++d.report.unfillable_channels;
    }
  }
  d.truth = std::move(truth);
  d.validate();
  return d;
}

WeatherVector ground_truth(const Dataset& dataset, double lat, double lon, Timestamp t) {
  if (!dataset.truth) throw InvalidConfig("dataset carries no synthetic truth");
  WeatherVector y = sample_coarse(dataset.coarse, lat, lon, t);
  const WeatherVector r = dataset.truth->response_at({lat, lon});
  for (std::size_t c = 0; c < kChannels; ++c) y[c] += r[c];
  return y;
}

}  // namespace mw
