#include "microweather/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "microweather/errors.hpp"

namespace mw {

namespace {

std::size_t idx(Channel c) { return static_cast<std::size_t>(c); }

bool wind_valid(const EvalRecord& r) { return r.valid[2] && r.valid[3]; }

ErrorStats finish(double abs_sum, double sq_sum, std::size_t n, const char* what) {
  if (n == 0) throw EmptySample(std::string("no valid records for ") + what);
  const double dn = static_cast<double>(n);
  return {abs_sum / dn, std::sqrt(sq_sum / dn), n};
}

std::map<Timestamp, std::vector<EvalRecord>> by_time(std::span<const EvalRecord> records) {
  std::map<Timestamp, std::vector<EvalRecord>> out;
  for (const auto& r : records) out[r.timestamp].push_back(r);
  return out;
}

bool degenerate(double den, double scale) { return den <= 1e-24 * std::max(1.0, scale); }

}  // namespace

ErrorStats channel_errors(std::span<const EvalRecord> records, Channel c) {
  double a = 0.0;
  double s = 0.0;
  std::size_t n = 0;
  const std::size_t k = idx(c);
  for (const auto& r : records) {
    if (!r.valid[k]) continue;
    const double e = r.predicted[k] - r.observed[k];
    a += std::abs(e);
    s += e * e;
    ++n;
  }
  return finish(a, s, n, std::string(channel_name(c)).c_str());
}

double mae(std::span<const EvalRecord> records, Channel c) { return channel_errors(records, c).mae; }
double rmse(std::span<const EvalRecord> records, Channel c) { return channel_errors(records, c).rmse; }

double vector_error(std::span<const EvalRecord> records) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!wind_valid(r)) continue;
    sum += std::hypot(r.predicted.wind_u_ms - r.observed.wind_u_ms, r.predicted.wind_v_ms - r.observed.wind_v_ms);
    ++n;
  }
  if (n == 0) throw EmptySample("no valid wind records");
  return sum / static_cast<double>(n);
}

ErrorStats wind_speed_errors(std::span<const EvalRecord> records) {
  double a = 0.0;
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!wind_valid(r)) continue;
    const double e = std::hypot(r.predicted.wind_u_ms, r.predicted.wind_v_ms) -
                     std::hypot(r.observed.wind_u_ms, r.observed.wind_v_ms);
    a += std::abs(e);
    s += e * e;
    ++n;
  }
  return finish(a, s, n, "wind speed");
}

ErrorStats wind_direction_errors(std::span<const EvalRecord> records) {
  double a = 0.0;
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!wind_valid(r)) continue;
    const auto obs = wind_to_speed_dir(r.observed.wind_u_ms, r.observed.wind_v_ms);
    if (obs.speed_ms < kCalmWindMs) continue;
    const auto pred = wind_to_speed_dir(r.predicted.wind_u_ms, r.predicted.wind_v_ms);
    const double e = circular_difference_deg(pred.dir_deg, obs.dir_deg);
    a += e;
    s += e * e;
    ++n;
  }
  return finish(a, s, n, "wind direction");
}

double spatial_r2(std::span<const EvalRecord> records, Channel c) {
  const std::size_t k = idx(c);
  double sy = 0.0;
  double sm = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!r.valid[k]) continue;
    sy += r.observed[k];
    sm += r.predicted[k];
    ++n;
  }
  if (n < 2) throw InsufficientStations("spatial R2 needs two stations");
  const double my = sy / static_cast<double>(n);
  const double mm = sm / static_cast<double>(n);
  double num = 0.0;
  double den = 0.0;
  double scale = 0.0;
  for (const auto& r : records) {
    if (!r.valid[k]) continue;
    const double yt = r.observed[k] - my;
    const double mt = r.predicted[k] - mm;
    num += (yt - mt) * (yt - mt);
    den += yt * yt;
    scale += r.observed[k] * r.observed[k];
  }
  if (degenerate(den, scale)) throw DegenerateVariance("observations have no spatial variance");
  return 1.0 - num / den;
}

double spatial_r2_wind(std::span<const EvalRecord> records) {
  double su = 0.0;
  double sv = 0.0;
  double pu = 0.0;
  double pv = 0.0;
  std::size_t n = 0;
  for (const auto& r : records) {
    if (!wind_valid(r)) continue;
    su += r.observed.wind_u_ms;
    sv += r.observed.wind_v_ms;
    pu += r.predicted.wind_u_ms;
    pv += r.predicted.wind_v_ms;
    ++n;
  }
  if (n < 2) throw InsufficientStations("spatial R2 needs two stations");
  const double dn = static_cast<double>(n);
  su /= dn;
  sv /= dn;
  pu /= dn;
  pv /= dn;
  double num = 0.0;
  double den = 0.0;
  double scale = 0.0;
  for (const auto& r : records) {
    if (!wind_valid(r)) continue;
    const double yu = r.observed.wind_u_ms - su;
    const double yv = r.observed.wind_v_ms - sv;
    const double eu = yu - (r.predicted.wind_u_ms - pu);
    const double ev = yv - (r.predicted.wind_v_ms - pv);
    num += eu * eu + ev * ev;
    den += yu * yu + yv * yv;
    scale += r.observed.wind_u_ms * r.observed.wind_u_ms + r.observed.wind_v_ms * r.observed.wind_v_ms;
  }
  if (degenerate(den, scale)) throw DegenerateVariance("wind observations have no spatial variance");
  return 1.0 - num / den;
}

SpatialR2Summary mean_spatial_r2(std::span<const EvalRecord> records, std::optional<Channel> c) {
  SpatialR2Summary s;
  double sum = 0.0;
  for (const auto& [t, group] : by_time(records)) {
    try {
      sum += c ? spatial_r2(group, *c) : spatial_r2_wind(group);
      ++s.timesteps;
    } catch (const InsufficientStations&) {
      ++s.skipped;
    } catch (const DegenerateVariance&) {
      ++s.skipped;
    }
  }
  if (s.timesteps == 0) throw EmptySample("no timestep with spatial variance");
  s.mean = sum / static_cast<double>(s.timesteps);
  return s;
}

const MetricValue* MetricTable::find(const std::string& variable, const std::string& metric) const {
  for (const auto& v : values) {
    if (v.variable == variable && v.metric == metric) return &v;
  }
  return nullptr;
}

double MetricTable::value(const std::string& variable, const std::string& metric) const {
  const auto* v = find(variable, metric);
  if (!v) throw EmptySample("model " + model + " has no " + variable + " " + metric);
  return v->value;
}

MetricTable metric_table(const std::string& model, std::span<const EvalRecord> records) {
  MetricTable t;
  t.model = model;
  auto put = [&](const std::string& var, const std::string& metric, double v, std::size_t n) {
    t.values.push_back({var, metric, v, n});
  };
  auto r2 = [&](const std::string& var, std::optional<Channel> c) {
    try {
      const auto s = mean_spatial_r2(records, c);
      put(var, "spatial_r2", s.mean, s.timesteps);
      put(var, "spatial_r2_skipped", static_cast<double>(s.skipped), s.skipped);
    } catch (const EmptySample&) {
    }
  };
  for (Channel c : {Channel::Temperature, Channel::Dewpoint}) {
    const std::string var(channel_name(c));
    try {
      const auto e = channel_errors(records, c);
      put(var, "mae", e.mae, e.n);
      put(var, "rmse", e.rmse, e.n);
    } catch (const EmptySample&) {
    }
    r2(var, c);
  }
  try {
    std::size_t n = 0;
    for (const auto& r : records) n += wind_valid(r) ? 1 : 0;
    put("wind", "vector_error", vector_error(records), n);
  } catch (const EmptySample&) {
  }
  r2("wind", std::nullopt);
  try {
    const auto e = wind_speed_errors(records);
    put("wind_speed", "mae", e.mae, e.n);
    put("wind_speed", "rmse", e.rmse, e.n);
  } catch (const EmptySample&) {
  }
  std::size_t calm = 0;
  for (const auto& r : records) {
    if (wind_valid(r) && std::hypot(r.observed.wind_u_ms, r.observed.wind_v_ms) < kCalmWindMs) ++calm;
  }
  try {
    const auto e = wind_direction_errors(records);
    put("wind_direction", "mae", e.mae, e.n);
    put("wind_direction", "rmse", e.rmse, e.n);
  } catch (const EmptySample&) {
  }
  put("wind_direction", "calm_excluded", static_cast<double>(calm), calm);
  return t;
}

void write_metric_csv(std::ostream& out, std::span<const MetricTable> tables) {
  out << "model,variable,metric,value,n\n";
  out.precision(10);
  for (const auto& t : tables) {
    for (const auto& v : t.values) out << t.model << ',' << v.variable << ',' << v.metric << ',' << v.value << ',' << v.n << '\n';
  }
}

std::vector<CategoryTable> stratify_errors(const std::string& model, std::span<const EvalRecord> records,
                                           const std::map<std::string, std::string>& category_of,
                                           std::span<const std::string> categories) {
  std::map<std::string, std::vector<EvalRecord>> groups;
  std::map<std::string, std::set<std::string>> stations;
  for (const auto& r : records) {
    auto it = category_of.find(r.station_id);
    if (it == category_of.end()) throw SchemaError("station " + r.station_id + " has no category");
    groups[it->second].push_back(r);
    stations[it->second].insert(r.station_id);
  }
  std::vector<CategoryTable> out;
  for (const auto& cat : categories) {
    CategoryTable ct;
    ct.category = cat;
    ct.table.model = model;
    auto g = groups.find(cat);
    if (g == groups.end()) {
      ct.empty = true;
    } else {
      ct.stations = stations[cat].size();
      ct.records = g->second.size();
      ct.table = metric_table(model, g->second);
    }
    out.push_back(std::move(ct));
  }
  return out;
}

void write_category_csv(std::ostream& out, std::span<const CategoryTable> tables) {
  out << "model,category,stations,variable,metric,value,n\n";
  out.precision(10);
  for (const auto& c : tables) {
    if (c.empty) {
      out << c.table.model << ',' << c.category << ",0,,empty,,0\n";
      continue;
    }
    for (const auto& v : c.table.values) {
      out << c.table.model << ',' << c.category << ',' << c.stations << ',' << v.variable << ',' << v.metric << ','
          << v.value << ',' << v.n << '\n';
    }
  }
}

double mean_knn_distance_km(const GeoPoint& p, std::span<const GeoPoint> sites, std::size_t k) {
  if (k == 0 || k > sites.size()) {
    throw KTooLarge("k = " + std::to_string(k) + " but only " + std::to_string(sites.size()) + " backbone stations");
  }
  std::vector<double> d(sites.size());
  for (std::size_t i = 0; i < sites.size(); ++i) d[i] = great_circle_km(p, sites[i]);
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += d[i];
  return s / static_cast<double>(k);
}

std::vector<DistanceBin> distance_sensitivity(std::span<const EvalRecord> records,
                                              const std::map<std::string, GeoPoint>& positions,
                                              std::span<const GeoPoint> backbone, std::span<const std::size_t> k_list,
                                              std::size_t bins) {
  if (backbone.empty()) throw EmptySample("no backbone stations");
  if (bins == 0) throw InvalidConfig("distance bins must be positive");
  for (std::size_t k : k_list) {
    if (k == 0 || k > backbone.size()) {
      throw KTooLarge("k = " + std::to_string(k) + " but only " + std::to_string(backbone.size()) + " backbone stations");
    }
  }
  // station-level errors
  struct Acc {
    double t = 0.0, d = 0.0, w = 0.0;
    std::size_t nt = 0, nd = 0, nw = 0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& r : records) {
    auto& a = acc[r.station_id];
    if (r.valid[0]) {
      a.t += std::abs(r.predicted[0] - r.observed[0]);
      ++a.nt;
    }
    if (r.valid[1]) {
      a.d += std::abs(r.predicted[1] - r.observed[1]);
      ++a.nd;
    }
    if (wind_valid(r)) {
      a.w += std::hypot(r.predicted[2] - r.observed[2], r.predicted[3] - r.observed[3]);
      ++a.nw;
    }
  }
  if (acc.empty()) throw EmptySample("no records for distance sensitivity");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<DistanceBin> out;
  for (std::size_t k : k_list) {
    std::vector<std::pair<double, const Acc*>> st;
    for (const auto& [id, a] : acc) {
      auto it = positions.find(id);
      if (it == positions.end()) throw SchemaError("no position for station " + id);
      st.emplace_back(mean_knn_distance_km(it->second, backbone, k), &a);
    }
    std::stable_sort(st.begin(), st.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    const std::size_t nb = std::min(bins, st.size());
    std::size_t start = 0;
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t len = st.size() / nb + (b < st.size() % nb ? 1 : 0);
      DistanceBin db;
      db.k = k;
      db.bin = b;
      db.distance_lo_km = st[start].first;
      db.distance_hi_km = st[start + len - 1].first;
      db.stations = len;
      double t = 0.0, d = 0.0, w = 0.0;
      std::size_t ct = 0, cd = 0, cw = 0;
      for (std::size_t i = start; i < start + len; ++i) {
        const Acc& a = *st[i].second;
        if (a.nt) { t += a.t / static_cast<double>(a.nt); ++ct; }
        if (a.nd) { d += a.d / static_cast<double>(a.nd); ++cd; }
        if (a.nw) { w += a.w / static_cast<double>(a.nw); ++cw; }
      }
      db.temperature_mae = ct ? t / static_cast<double>(ct) : nan;
      db.dewpoint_mae = cd ? d / static_cast<double>(cd) : nan;
      db.wind_vector_error = cw ? w / static_cast<double>(cw) : nan;
      out.push_back(db);
      start += len;
    }
  }
  return out;
}

void write_distance_csv(std::ostream& out, const std::string& model, std::span<const DistanceBin> bins) {
  out << "model,k,bin,distance_lo_km,distance_hi_km,stations,variable,metric,value\n";
  out.precision(10);
  for (const auto& b : bins) {
    const auto row = [&](const char* var, const char* metric, double v) {
      out << model << ',' << b.k << ',' << b.bin << ',' << b.distance_lo_km << ',' << b.distance_hi_km << ','
          << b.stations << ',' << var << ',' << metric << ',' << v << '\n';
    };
    row("temperature", "mae", b.temperature_mae);
    row("dewpoint", "mae", b.dewpoint_mae);
    row("wind", "vector_error", b.wind_vector_error);
  }
}

}  // namespace mw
