#include <fstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "json_codec.hpp"
#include "microweather/dataset.hpp"
#include "microweather/hash.hpp"

namespace mw {

namespace fs = std::filesystem;

namespace detail {

std::vector<std::byte> read_file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("cannot read " + path.string());
  return bytes;
}

void write_file_bytes(const fs::path& path, const std::vector<std::byte>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write " + path.string());
  }
  fs::rename(tmp, path);
}

}  // namespace detail

namespace {

constexpr char kMagic[4] = {'M', 'W', 'D', '1'};
constexpr std::uint32_t kCacheVersion = 1;

void put_vector(detail::ByteWriter& w, const WeatherVector& v) {
  for (std::size_t c = 0; c < kChannels; ++c) w.put<double>(v[c]);
}

WeatherVector get_vector(detail::ByteReader& r) {
  WeatherVector v;
  for (std::size_t c = 0; c < kChannels; ++c) v[c] = r.get<double>();
  return v;
}

}  // namespace

void save_dataset_cache(const Dataset& d, const fs::path& path) {
  nlohmann::json meta = {{"surface", to_json(d.surface)}};
  nlohmann::json partition = nlohmann::json::object();
  for (Role r : {Role::Backbone, Role::Train, Role::Val, Role::Test}) {
    partition[std::string(role_name(r))] = d.partition.members(r);
  }
  meta["partition"] = partition;
  meta["report"] = {d.report.stations,          d.report.rows,
                    d.report.dropped_rows,      d.report.rejected_readings,
                    d.report.unfillable_channels};
  if (d.truth) meta["truth"] = to_json(*d.truth);
  const std::string meta_text = meta.dump();

  detail::ByteWriter w;
  w.put_bytes(kMagic, 4);
  w.put<std::uint32_t>(kCacheVersion);
  w.put_string(meta_text);
  w.put<double>(d.report.coverage_fraction);

  const auto& c = d.coarse;
  w.put<double>(c.lat0);
  w.put<double>(c.lon0);
  w.put<double>(c.dlat);
  w.put<double>(c.dlon);
  w.put<std::uint64_t>(c.nlat);
  w.put<std::uint64_t>(c.nlon);
  w.put<std::int64_t>(c.times.start);
  w.put<std::uint64_t>(c.times.count);
  for (const auto& v : c.values) put_vector(w, v);

  w.put<std::uint64_t>(d.stations.size());
  for (const auto& s : d.stations) {
    w.put_string(s.id);
    w.put<double>(s.lat);
    w.put<double>(s.lon);
    w.put<double>(s.quality_fraction);
    w.put<std::uint64_t>(s.series.size());
    for (std::size_t t = 0; t < s.series.size(); ++t) {
      put_vector(w, s.series.values[t]);
      for (auto st : s.series.flags[t].state) w.put<std::uint8_t>(static_cast<std::uint8_t>(st));
    }
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.surface.index()));
    if (const auto* e = std::get_if<Embedding>(&s.surface)) {
      w.put<std::uint64_t>(e->vector.size());
      for (double x : e->vector) w.put<double>(x);
    } else if (const auto* cs = std::get_if<ChipStack>(&s.surface)) {
      w.put<std::uint64_t>(cs->bands.size());
      for (const auto& chip : cs->bands) {
        w.put_string(chip.band);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(chip.resolution));
        w.put<std::uint64_t>(chip.rows);
        w.put<std::uint64_t>(chip.cols);
        for (double x : chip.pixels) w.put<double>(x);
      }
    }
  }
  const std::uint32_t crc = crc32(w.bytes());
  w.put<std::uint32_t>(crc);
  detail::write_file_bytes(path, w.bytes());
}

Dataset load_dataset_cache(const fs::path& path) {
  const auto bytes = detail::read_file_bytes(path);
  if (bytes.size() < 12) throw CorruptChecksum(path.string() + ": file too short");
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (crc32(std::span(bytes.data(), bytes.size() - 4)) != stored) {
    throw CorruptChecksum(path.string() + ": checksum mismatch");
  }
  detail::ByteReader r(bytes.data(), bytes.size() - 4);
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw SchemaError(path.string() + ": not a dataset cache");
  if (const auto v = r.get<std::uint32_t>(); v != kCacheVersion) {
    throw VersionError(path.string() + ": cache version " + std::to_string(v) + " unsupported");
  }
  Dataset d;
  const auto meta = nlohmann::json::parse(r.get_string());
  d.surface = surface_schema_from_json(meta.at("surface"));
  for (Role role : {Role::Backbone, Role::Train, Role::Val, Role::Test}) {
    for (const auto& id : meta.at("partition").at(std::string(role_name(role)))) {
      d.partition.members(role).insert(id.get<std::string>());
    }
  }
  const auto rep = meta.at("report").get<std::vector<std::size_t>>();
  d.report = {rep.at(0), rep.at(1), rep.at(2), rep.at(3), rep.at(4), 0.0};
  if (meta.contains("truth")) d.truth = surface_response_from_json(meta.at("truth"));
  d.report.coverage_fraction = r.get<double>();

  auto& c = d.coarse;
  c.lat0 = r.get<double>();
  c.lon0 = r.get<double>();
  c.dlat = r.get<double>();
  c.dlon = r.get<double>();
  c.nlat = r.get<std::uint64_t>();
  c.nlon = r.get<std::uint64_t>();
  c.times.start = r.get<std::int64_t>();
  c.times.count = r.get<std::uint64_t>();
  const std::size_t cells = c.nlat * c.nlon * c.times.count;
  if (cells * kChannels * sizeof(double) > r.remaining()) throw CorruptChecksum(path.string() + ": truncated grid");
  c.values.resize(cells);
  for (auto& v : c.values) v = get_vector(r);

  const auto n = r.get<std::uint64_t>();
  d.stations.resize(n);
  for (auto& s : d.stations) {
    s.id = r.get_string();
    s.lat = r.get<double>();
    s.lon = r.get<double>();
    s.quality_fraction = r.get<double>();
    const auto len = r.get<std::uint64_t>();
    if (len * (kChannels * sizeof(double) + kChannels) > r.remaining()) {
      throw CorruptChecksum(path.string() + ": truncated series");
    }
    s.series.values.resize(len);
    s.series.flags.resize(len);
    for (std::size_t t = 0; t < len; ++t) {
      s.series.values[t] = get_vector(r);
      for (auto& st : s.series.flags[t].state) st = static_cast<SlotState>(r.get<std::uint8_t>());
    }
    const auto kind = r.get<std::uint8_t>();
    if (kind == 1) {
      Embedding e;
      e.vector.resize(r.get<std::uint64_t>());
      for (auto& x : e.vector) x = r.get<double>();
      s.surface = std::move(e);
    } else if (kind == 2) {
      ChipStack cs;
      cs.bands.resize(r.get<std::uint64_t>());
      for (auto& chip : cs.bands) {
        chip.band = r.get_string();
        chip.resolution = static_cast<Resolution>(r.get<std::uint8_t>());
        chip.rows = r.get<std::uint64_t>();
        chip.cols = r.get<std::uint64_t>();
        if (chip.rows * chip.cols * sizeof(double) > r.remaining()) throw CorruptChecksum(path.string() + ": truncated chip");
        chip.pixels.resize(chip.rows * chip.cols);
        for (auto& x : chip.pixels) x = r.get<double>();
      }
      s.surface = std::move(cs);
    }
  }
  if (r.remaining() != 0) throw CorruptChecksum(path.string() + ": trailing bytes");
  d.validate();
  return d;
}

}  // namespace mw
