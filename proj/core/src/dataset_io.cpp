#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "json_codec.hpp"
#include "microweather/dataset.hpp"
#include "microweather/errors.hpp"
#include "microweather/fill.hpp"

namespace mw {

namespace fs = std::filesystem;

std::string_view surface_kind_name(SurfaceKind k) noexcept {
  switch (k) {
    case SurfaceKind::None:
      return "none";
    case SurfaceKind::Embedding:
      return "embedding";
    case SurfaceKind::Chips:
      return "chips";
  }
  return "none";
}

SurfaceKind parse_surface_kind(std::string_view s) {
  if (s == "none") return SurfaceKind::None;
  if (s == "embedding") return SurfaceKind::Embedding;
  if (s == "chips") return SurfaceKind::Chips;
  throw SchemaError("unknown surface kind '" + std::string(s) + "'");
}

std::optional<std::size_t> Dataset::index_of(const std::string& id) const {
  const auto it = std::lower_bound(stations.begin(), stations.end(), id,
                                   [](const Station& s, const std::string& key) { return s.id < key; });
  if (it != stations.end() && it->id == id) return static_cast<std::size_t>(it - stations.begin());
  // Fall back to a scan for datasets not sorted by id.
  for (std::size_t i = 0; i < stations.size(); ++i) {
    if (stations[i].id == id) return i;
  }
  return std::nullopt;
}

const Station& Dataset::station(const std::string& id) const {
  const auto i = index_of(id);
  if (!i) throw SchemaError("unknown station '" + id + "'");
  return stations[*i];
}

std::vector<std::size_t> Dataset::indices(Role r) const {
  std::vector<std::size_t> out;
  for (const auto& id : partition.members(r)) {
    if (auto i = index_of(id)) out.push_back(*i);
  }
  return out;
}

void Dataset::validate() const {
  coarse.validate();
  std::set<std::string> ids;
  for (const auto& s : stations) {
    if (!ids.insert(s.id).second) throw SchemaError("duplicate station id '" + s.id + "'");
    if (!coarse.in_hull(s.lat, s.lon)) {
      throw CoverageError("station '" + s.id + "' lies outside the coarse grid hull");
    }
    if (s.series.values.size() != coarse.times.count || s.series.flags.size() != coarse.times.count) {
      throw TimeAxisError("station '" + s.id + "' series is not aligned with the coarse time axis");
    }
    switch (surface.kind) {
      case SurfaceKind::None:
        break;
      case SurfaceKind::Embedding:
        if (!std::holds_alternative<Embedding>(s.surface)) {
          throw SchemaError("station '" + s.id + "' lacks a surface embedding");
        }
        validate_embedding(std::get<Embedding>(s.surface), surface.embedding_dim);
        break;
      case SurfaceKind::Chips:
        if (!std::holds_alternative<ChipStack>(s.surface)) {
          throw SchemaError("station '" + s.id + "' lacks surface chips");
        }
        validate_chips(std::get<ChipStack>(s.surface), surface.chips);
        break;
    }
  }
  partition.validate(ids);
}

namespace {

// ---- text helpers ---------------------------------------------------------------------------

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

class CsvReader {
 public:
  explicit CsvReader(const fs::path& path) : path_(path), in_(path) {
    if (!in_) throw IoError("cannot open " + path.string());
  }
  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      const auto t = trim(line_);
      if (t.empty()) continue;
      fields = split_csv(t);
      for (auto& f : fields) f = trim(f);
      return true;
    }
    return false;
  }
  [[nodiscard]] std::string where() const { return path_.filename().string() + ":" + std::to_string(line_no_); }

 private:
  fs::path path_;
  std::ifstream in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

double require_double(std::string_view s, const CsvReader& r, const char* what) {
  const auto v = parse_double(s);
  if (!v || !std::isfinite(*v)) {
    throw SchemaError(r.where() + ": bad " + what + " '" + std::string(s) + "'");
  }
  return *v;
}

template <typename Int>
Int require_int(std::string_view s, const CsvReader& r, const char* what) {
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw SchemaError(r.where() + ": bad " + what + " '" + std::string(s) + "'");
  }
  return v;
}

// A missing value is an empty field or a non-finite number.
std::optional<double> optional_reading(std::string_view s, const CsvReader& r) {
  if (s.empty()) return std::nullopt;
  const auto v = parse_double(s);
  if (!v) throw SchemaError(r.where() + ": unparsable reading '" + std::string(s) + "'");
  if (!std::isfinite(*v)) return std::nullopt;
  return v;
}

std::string base_name(std::string_view col) {
  const auto pos = col.rfind('_');
  return std::string(pos == std::string_view::npos ? col : col.substr(0, pos));
}

void check_header(const std::vector<std::string_view>& got, const std::vector<std::string>& expected,
                  const std::string& file) {
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i >= got.size()) throw SchemaError(file + ": missing column '" + expected[i] + "'");
    if (got[i] == expected[i]) continue;
    if (expected[i].find('_') != std::string::npos && base_name(got[i]) == base_name(expected[i])) {
      throw SchemaError(file + ": wrong unit tag in column '" + std::string(got[i]) + "' (expected '" + expected[i] +
                        "')");
    }
    throw SchemaError(file + ": expected column '" + expected[i] + "', found '" + std::string(got[i]) + "'");
  }
  if (got.size() > expected.size()) {
    throw SchemaError(file + ": unexpected extra column '" + std::string(got[expected.size()]) + "'");
  }
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

// ---- coarse ---------------------------------------------------------------------------------

const std::vector<std::string> kGridHeader = {"lat0", "lon0", "dlat", "dlon", "nlat", "nlon"};
const std::vector<std::string> kCoarseHeader = {"timestamp", "i_lat", "i_lon", "temp_c", "dewpoint_c", "u_ms", "v_ms"};
const std::vector<std::string> kStationHeader = {"station_id", "lat",          "lon",          "timestamp",   "temp_c",
                                                 "dewpoint_c", "wind_speed_ms", "wind_dir_deg", "quality_flag"};

CoarseField load_coarse(const fs::path& path) {
  CsvReader r(path);
  const std::string file = path.filename().string();
  std::vector<std::string_view> f;
  if (!r.next(f)) throw SchemaError(file + ": empty file");
  check_header(f, kGridHeader, file);
  if (!r.next(f) || f.size() != kGridHeader.size()) throw SchemaError(file + ": missing grid geometry line");
  CoarseField c;
  c.lat0 = require_double(f[0], r, "lat0");
  c.lon0 = require_double(f[1], r, "lon0");
  c.dlat = require_double(f[2], r, "dlat");
  c.dlon = require_double(f[3], r, "dlon");
  c.nlat = require_int<std::size_t>(f[4], r, "nlat");
  c.nlon = require_int<std::size_t>(f[5], r, "nlon");
  if (!(c.dlat > 0.0) || !(c.dlon > 0.0) || c.nlat < 2 || c.nlon < 2) {
    throw SchemaError(file + ": grid needs dlat, dlon > 0 and at least 2x2 nodes");
  }
  if (!r.next(f)) throw SchemaError(file + ": missing data header");
  check_header(f, kCoarseHeader, file);

  struct Row {
    Timestamp t;
    std::size_t i, j;
    WeatherVector v;
  };
  std::vector<Row> rows;
  while (r.next(f)) {
    if (f.size() != kCoarseHeader.size()) throw SchemaError(r.where() + ": expected 7 fields");
    Row row{};
    const auto tf = parse_double(f[0]);
    if (!tf || *tf != std::floor(*tf)) throw TimeAxisError(r.where() + ": non-hourly timestamp '" + std::string(f[0]) + "'");
    row.t = require_int<Timestamp>(f[0], r, "timestamp");
    row.i = require_int<std::size_t>(f[1], r, "i_lat");
    row.j = require_int<std::size_t>(f[2], r, "i_lon");
    if (row.i >= c.nlat || row.j >= c.nlon) throw SchemaError(r.where() + ": grid index out of range");
    for (std::size_t ch = 0; ch < kChannels; ++ch) row.v[ch] = require_double(f[3 + ch], r, "coarse value");
    rows.push_back(row);
  }
  if (rows.empty()) throw SchemaError(file + ": no coarse rows");
  Timestamp t_min = rows.front().t;
  Timestamp t_max = rows.front().t;
  for (const auto& row : rows) {
    t_min = std::min(t_min, row.t);
    t_max = std::max(t_max, row.t);
  }
  c.times = {t_min, static_cast<std::size_t>(t_max - t_min + 1)};
  const std::size_t cells = c.nlat * c.nlon;
  if (rows.size() != c.times.count * cells) {
    throw TimeAxisError(file + ": coarse rows do not form a dense hourly axis (" + std::to_string(rows.size()) +
                        " rows for " + std::to_string(c.times.count) + " hours x " + std::to_string(cells) + " cells)");
  }
  c.values.assign(rows.size(), WeatherVector{});
  std::vector<unsigned char> seen(rows.size(), 0);
  for (const auto& row : rows) {
    const std::size_t k = (static_cast<std::size_t>(row.t - t_min) * c.nlat + row.i) * c.nlon + row.j;
    if (seen[k]) throw TimeAxisError(file + ": duplicate cell at timestamp " + std::to_string(row.t));
    seen[k] = 1;
    c.values[k] = row.v;
  }
  c.validate();
  return c;
}

// ---- stations -------------------------------------------------------------------------------

std::vector<Station> load_stations(const fs::path& path, const CoarseField& coarse, IngestionReport& report) {
  CsvReader r(path);
  const std::string file = path.filename().string();
  std::vector<std::string_view> f;
  if (!r.next(f)) throw SchemaError(file + ": empty file");
  check_header(f, kStationHeader, file);

  std::map<std::string, Station> by_id;
  std::map<std::string, Timestamp> last_time;
  const std::size_t T = coarse.times.count;
  while (r.next(f)) {
    if (f.size() != kStationHeader.size()) throw SchemaError(r.where() + ": expected 9 fields");
    ++report.rows;
    const std::string id(f[0]);
    if (id.empty()) throw SchemaError(r.where() + ": empty station_id");
    const double lat = require_double(f[1], r, "lat");
    const double lon = require_double(f[2], r, "lon");
    const auto tf = parse_double(f[3]);
    if (!tf || *tf != std::floor(*tf)) throw TimeAxisError(r.where() + ": non-hourly timestamp '" + std::string(f[3]) + "'");
    const auto t = require_int<Timestamp>(f[3], r, "timestamp");

    auto [it, fresh] = by_id.try_emplace(id);
    Station& s = it->second;
    if (fresh) {
      s.id = id;
      s.lat = lat;
      s.lon = lon;
      if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0) {
        throw SchemaError(r.where() + ": station '" + id + "' has invalid coordinates");
      }
      if (!coarse.in_hull(lat, lon)) throw CoverageError("station '" + id + "' lies outside the coarse grid hull");
      s.series.values.assign(T, WeatherVector{});
      s.series.flags.assign(T, ChannelFlags{});
    } else if (s.lat != lat || s.lon != lon) {
      throw SchemaError(r.where() + ": station '" + id + "' changes location");
    }
    if (auto lt = last_time.find(id); lt != last_time.end() && t <= lt->second) {
      throw TimeAxisError(r.where() + ": timestamps of station '" + id + "' are not strictly increasing");
    }
    last_time[id] = t;
    const auto ti = coarse.times.index_of(t);
    if (!ti) {
      throw TimeAxisError(r.where() + ": timestamp " + std::to_string(t) + " of station '" + id +
                          "' is not on the coarse time axis");
    }

    if (f[8] != "good" && f[8] != "bad") throw SchemaError(r.where() + ": quality_flag must be good or bad");
    if (f[8] == "bad") {
      ++report.dropped_rows;
      continue;
    }
    WeatherVector& v = s.series.values[*ti];
    ChannelFlags& fl = s.series.flags[*ti];
    if (auto x = optional_reading(f[4], r)) {
      v.temperature_c = *x;
      fl.state[0] = SlotState::Observed;
    }
    if (auto x = optional_reading(f[5], r)) {
      v.dewpoint_c = *x;
      fl.state[1] = SlotState::Observed;
    }
    const auto speed = optional_reading(f[6], r);
    const auto dir = optional_reading(f[7], r);
    if (speed && dir) {
      try {
        const auto uv = wind_from_speed_dir(*speed, *dir);
        v.wind_u_ms = uv.u_ms;
        v.wind_v_ms = uv.v_ms;
        fl.state[2] = fl.state[3] = SlotState::Observed;
      } catch (const InvalidObservation&) {
        ++report.rejected_readings;
      }
    } else if (speed || dir) {
      ++report.rejected_readings;  // half a wind reading is unusable
    }
  }
  std::vector<Station> out;
  out.reserve(by_id.size());
  for (auto& [id, s] : by_id) out.push_back(std::move(s));
  return out;
}

// ---- surface --------------------------------------------------------------------------------

void load_embeddings(const fs::path& path, std::vector<Station>& stations, SurfaceSchema& schema) {
  CsvReader r(path);
  const std::string file = path.filename().string();
  std::vector<std::string_view> f;
  if (!r.next(f)) throw SchemaError(file + ": empty file");
  if (f.empty() || f[0] != "station_id") throw SchemaError(file + ": first column must be station_id");
  const std::size_t dim = f.size() - 1;
  for (std::size_t k = 0; k < dim; ++k) {
    if (f[k + 1] != "e" + std::to_string(k)) {
      throw SchemaError(file + ": expected column 'e" + std::to_string(k) + "', found '" + std::string(f[k + 1]) + "'");
    }
  }
  if (schema.embedding_dim == 0) schema.embedding_dim = dim;
  if (dim != schema.embedding_dim) {
    throw DimensionMismatch(file + ": embedding has " + std::to_string(dim) + " dimensions, dataset declares " +
                            std::to_string(schema.embedding_dim));
  }
  std::map<std::string, Embedding> rows;
  while (r.next(f)) {
    if (f.size() != dim + 1) throw SchemaError(r.where() + ": expected " + std::to_string(dim + 1) + " fields");
    Embedding e;
    e.vector.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) e.vector.push_back(require_double(f[k + 1], r, "embedding value"));
    rows[std::string(f[0])] = std::move(e);
  }
  for (auto& s : stations) {
    auto it = rows.find(s.id);
    if (it == rows.end()) throw SchemaError(file + ": no embedding for station '" + s.id + "'");
    s.surface = std::move(it->second);
  }
}

Chip read_raster(const fs::path& path, const std::string& band, Resolution res) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open raster " + path.string());
  Chip c;
  c.band = band;
  c.resolution = res;
  if (!(in >> c.rows >> c.cols)) throw SchemaError(path.filename().string() + ": missing raster size line");
  c.pixels.resize(c.rows * c.cols);
  for (auto& p : c.pixels) {
    std::string tok;
    if (!(in >> tok)) throw ShapeError(path.filename().string() + ": raster has fewer pixels than declared");
    const auto v = parse_double(tok);
    if (!v || !std::isfinite(*v)) throw SchemaError(path.filename().string() + ": bad pixel '" + tok + "'");
    p = *v;
  }
  std::string extra;
  if (in >> extra) throw ShapeError(path.filename().string() + ": raster has more pixels than declared");
  return c;
}

void load_chips(const fs::path& manifest, std::vector<Station>& stations, SurfaceSchema& schema) {
  CsvReader r(manifest);
  const std::string file = manifest.filename().string();
  std::vector<std::string_view> f;
  if (!r.next(f)) throw SchemaError(file + ": empty file");
  check_header(f, {"station_id", "band", "path", "resolution_tag"}, file);
  std::map<std::string, ChipStack> stacks;
  std::vector<ChipBand> order;
  while (r.next(f)) {
    if (f.size() != 4) throw SchemaError(r.where() + ": expected 4 fields");
    const std::string id(f[0]);
    const std::string band(f[1]);
    const Resolution res = parse_resolution(f[3]);
    fs::path p{std::string(f[2])};
    if (p.is_relative()) p = manifest.parent_path() / p;
    auto& stack = stacks[id];
    stack.bands.push_back(read_raster(p, band, res));
    if (stacks.size() == 1) order.push_back({band, res});
  }
  if (schema.chips.bands.empty()) schema.chips.bands = order;
  schema.chips.validate();
  for (auto& s : stations) {
    auto it = stacks.find(s.id);
    if (it == stacks.end()) throw SchemaError(file + ": no chips for station '" + s.id + "'");
    validate_chips(it->second, schema.chips);
    s.surface = std::move(it->second);
  }
}

Partition load_partition(const fs::path& path) {
  CsvReader r(path);
  const std::string file = path.filename().string();
  std::vector<std::string_view> f;
  if (!r.next(f)) throw SchemaError(file + ": empty file");
  check_header(f, {"station_id", "role"}, file);
  Partition p;
  while (r.next(f)) {
    if (f.size() != 2) throw SchemaError(r.where() + ": expected 2 fields");
    p.members(parse_role(f[1])).insert(std::string(f[0]));
  }
  return p;
}

void finish_stations(std::vector<Station>& stations, IngestionReport& report, std::size_t T) {
  std::size_t observed = 0;
  for (auto& s : stations) {
    s.quality_fraction = compute_quality_fraction(s.series);
    observed += static_cast<std::size_t>(std::llround(s.quality_fraction * 3.0 * static_cast<double>(T)));
    report.unfillable_channels += fill_missing_lenient(s.series);
  }
  report.stations = stations.size();
  report.coverage_fraction =
      stations.empty() ? 0.0 : static_cast<double>(observed) / (3.0 * static_cast<double>(T * stations.size()));
}

// ---- writers --------------------------------------------------------------------------------

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

Dataset load_dataset(const DatasetPaths& paths, const LoadOptions& options) {
  Dataset d;
  d.coarse = load_coarse(paths.coarse);
  d.stations = load_stations(paths.stations, d.coarse, d.report);
  d.surface = options.surface;
  if (d.surface.kind != SurfaceKind::None) {
    if (!paths.surface) throw SchemaError("surface file required for surface kind " + std::string(surface_kind_name(d.surface.kind)));
    if (d.surface.kind == SurfaceKind::Embedding) {
      load_embeddings(*paths.surface, d.stations, d.surface);
    } else {
      load_chips(*paths.surface, d.stations, d.surface);
    }
  }
  finish_stations(d.stations, d.report, d.coarse.times.count);
  d.partition = paths.partition ? load_partition(*paths.partition) : partition_stations(d.stations, options.thresholds);
  d.validate();
  return d;
}

void write_dataset_text(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "coarse.csv");
    const auto& c = d.coarse;
    out << "lat0,lon0,dlat,dlon,nlat,nlon\n"
        << fmt(c.lat0) << ',' << fmt(c.lon0) << ',' << fmt(c.dlat) << ',' << fmt(c.dlon) << ',' << c.nlat << ','
        << c.nlon << "\ntimestamp,i_lat,i_lon,temp_c,dewpoint_c,u_ms,v_ms\n";
    for (std::size_t t = 0; t < c.times.count; ++t) {
      for (std::size_t i = 0; i < c.nlat; ++i) {
        for (std::size_t j = 0; j < c.nlon; ++j) {
          const auto& v = c.at(t, i, j);
          out << c.times.at(t) << ',' << i << ',' << j;
          for (std::size_t ch = 0; ch < kChannels; ++ch) out << ',' << fmt(v[ch]);
          out << '\n';
        }
      }
    }
  }
  {
    auto out = open_out(dir / "stations.csv");
    out << "station_id,lat,lon,timestamp,temp_c,dewpoint_c,wind_speed_ms,wind_dir_deg,quality_flag\n";
    for (const auto& s : d.stations) {
      for (std::size_t t = 0; t < s.series.size(); ++t) {
        const auto& fl = s.series.flags[t];
        if (!fl.any_observed()) continue;
        const auto& v = s.series.values[t];
        out << s.id << ',' << fmt(s.lat) << ',' << fmt(s.lon) << ',' << d.coarse.times.at(t) << ',';
        if (fl.observed(0)) out << fmt(v.temperature_c);
        out << ',';
        if (fl.observed(1)) out << fmt(v.dewpoint_c);
        out << ',';
        if (fl.observed(2) && fl.observed(3)) {
          const auto sd = wind_to_speed_dir(v.wind_u_ms, v.wind_v_ms);
          out << fmt(sd.speed_ms) << ',' << fmt(sd.dir_deg);
        } else {
          out << ',';
        }
        out << ",good\n";
      }
    }
  }
  {
    auto out = open_out(dir / "partition.csv");
    out << "station_id,role\n";
    for (Role r : {Role::Backbone, Role::Train, Role::Val, Role::Test}) {
      for (const auto& id : d.partition.members(r)) out << id << ',' << role_name(r) << '\n';
    }
  }
  if (d.surface.kind == SurfaceKind::Embedding) {
    auto out = open_out(dir / "surface.csv");
    out << "station_id";
    for (std::size_t k = 0; k < d.surface.embedding_dim; ++k) out << ",e" << k;
    out << '\n';
    for (const auto& s : d.stations) {
      out << s.id;
      for (double x : std::get<Embedding>(s.surface).vector) out << ',' << fmt(x);
      out << '\n';
    }
  } else if (d.surface.kind == SurfaceKind::Chips) {
    fs::create_directories(dir / "chips");
    auto out = open_out(dir / "chips.csv");
    out << "station_id,band,path,resolution_tag\n";
    for (const auto& s : d.stations) {
      for (const auto& chip : std::get<ChipStack>(s.surface).bands) {
        const std::string rel = "chips/" + s.id + "_" + chip.band + ".txt";
        out << s.id << ',' << chip.band << ',' << rel << ',' << resolution_name(chip.resolution) << '\n';
        auto raster = open_out(dir / rel);
        raster << chip.rows << ' ' << chip.cols << '\n';
        for (std::size_t i = 0; i < chip.rows; ++i) {
          for (std::size_t j = 0; j < chip.cols; ++j) raster << (j ? " " : "") << fmt(chip.pixels[i * chip.cols + j]);
          raster << '\n';
        }
      }
    }
  }
  nlohmann::json meta = {{"format", "microweather-dataset"}, {"version", 1}, {"surface", to_json(d.surface)}};
  if (d.truth) meta["truth"] = to_json(*d.truth);
  auto out = open_out(dir / "dataset.json");
  out << meta.dump(2) << '\n';
}

Dataset read_dataset_text(const fs::path& dir) {
  std::ifstream in(dir / "dataset.json");
  if (!in) throw IoError("cannot open " + (dir / "dataset.json").string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("dataset.json: ") + e.what());
  }
  LoadOptions opt;
  opt.surface = surface_schema_from_json(meta.at("surface"));
  DatasetPaths paths{dir / "stations.csv", dir / "coarse.csv", std::nullopt, std::nullopt};
  if (opt.surface.kind == SurfaceKind::Embedding) paths.surface = dir / "surface.csv";
  if (opt.surface.kind == SurfaceKind::Chips) paths.surface = dir / "chips.csv";
  if (fs::exists(dir / "partition.csv")) paths.partition = dir / "partition.csv";
  Dataset d = load_dataset(paths, opt);
  if (meta.contains("truth")) d.truth = surface_response_from_json(meta.at("truth"));
  return d;
}

Dataset open_dataset(const fs::path& dir) {
  if (!fs::exists(dir)) throw IoError("dataset directory " + dir.string() + " does not exist");
  if (fs::exists(dir / kDatasetCacheName)) return load_dataset_cache(dir / kDatasetCacheName);
  return read_dataset_text(dir);
}

}  // namespace mw
