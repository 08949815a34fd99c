#include "cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "microweather/baselines.hpp"
#include "microweather/dataset.hpp"
#include "microweather/errors.hpp"
#include "microweather/evaluation.hpp"
#include "microweather/hash.hpp"
#include "microweather/inference.hpp"
#include "microweather/model.hpp"
#include "microweather/synthetic.hpp"
#include "microweather/training.hpp"

namespace fs = std::filesystem;

namespace mwx {

using namespace mw;

namespace {

// ---- config -------------------------------------------------------------------------------

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      // paths
      "data", "checkpoint",
      // ModelConfig
      "d_latent", "n_heads", "n_layers_self", "n_layers_cross", "location_encoding_degree", "location_hidden",
      "location_dim", "siren_w0", "mlp_hidden", "ffn_hidden", "connectivity", "surface", "chip_channels",
      "chip_center_only", "pre_norm", "model_seed",
      // TrainConfig
      "lr0", "weight_decay", "timestamps_per_step", "targets_per_timestamp", "epochs", "steps", "eval_every",
      "val_timestamps", "preflight", "seed",
      // TileSpec / inference
      "origin_lat", "origin_lon", "pixel_m", "tile_rows", "tile_cols", "timestamp", "block", "workers",
      "memory_budget_mb",
      // partition
      "backbone_min", "train_min", "holdout_min", "val_fraction",
      // synthetic world
      "synth_n_backbone", "synth_n_train", "synth_n_val", "synth_n_test", "synth_time_steps", "synth_surface_kind",
      "synth_surface_dim", "synth_nlat", "synth_nlon", "synth_seed",
      // evaluation
      "role", "distance_bins"};
  return keys;
}

class Config {
 public:
  void set(const std::string& key, const std::string& value) {
    if (!known_keys().contains(key)) throw InvalidConfig("unknown config key '" + key + "'");
    values_[key] = value;
  }
  [[nodiscard]] bool has(const std::string& k) const { return values_.contains(k); }
  [[nodiscard]] std::string str(const std::string& k, const std::string& def) const {
    auto it = values_.find(k);
    return it == values_.end() ? def : it->second;
  }
  template <typename T>
  void read(const std::string& k, T& out) const {
    auto it = values_.find(k);
    if (it == values_.end()) return;
    const std::string& v = it->second;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (v == "true" || v == "1") {
          out = true;
        } else if (v == "false" || v == "0") {
          out = false;
        } else {
          throw std::invalid_argument(v);
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        std::size_t pos = 0;
        out = static_cast<T>(std::stod(v, &pos));
        if (pos != v.size()) throw std::invalid_argument(v);
      } else if constexpr (std::is_signed_v<T>) {
        std::size_t pos = 0;
        out = static_cast<T>(std::stoll(v, &pos));
        if (pos != v.size()) throw std::invalid_argument(v);
      } else {
        std::size_t pos = 0;
        if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
        out = static_cast<T>(std::stoull(v, &pos));
        if (pos != v.size()) throw std::invalid_argument(v);
      }
    } catch (const std::logic_error&) {
      throw InvalidConfig("bad value for '" + k + "': " + v);
    }
  }
  [[nodiscard]] const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// ---- manifest -----------------------------------------------------------------------------

std::string file_hash(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

struct Manifest {
  std::string command;
  nlohmann::json inputs = nlohmann::json::array();
  nlohmann::json outputs = nlohmann::json::array();
  nlohmann::json extra = nlohmann::json::object();

  void input(const fs::path& p) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file()) files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) inputs.push_back({{"path", f.string()}, {"fnv1a64", file_hash(f)}});
    } else {
      inputs.push_back({{"path", p.string()}, {"fnv1a64", file_hash(p)}});
    }
  }
  void output(const fs::path& p) { outputs.push_back({{"path", p.filename().string()}, {"fnv1a64", file_hash(p)}}); }

  void write(const fs::path& dir, const Config& cfg) const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = cfg.values();
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    for (const auto& [k, v] : extra.items()) j[k] = v;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << j.dump(2) << '\n';
  }
};

// ---- shared helpers -------------------------------------------------------------------------

SurfaceMode mode_for(const Dataset& d) {
  switch (d.surface.kind) {
    case SurfaceKind::None:
      return SurfaceMode::None;
    case SurfaceKind::Embedding:
      return SurfaceMode::Embedding;
    case SurfaceKind::Chips:
      return SurfaceMode::ChipEncoder;
  }
  return SurfaceMode::None;
}

ModelConfig model_config(const Config& cfg, const Dataset& d) {
  ModelConfig c;
  cfg.read("d_latent", c.d_latent);
  cfg.read("n_heads", c.n_heads);
  cfg.read("n_layers_self", c.n_layers_self);
  cfg.read("n_layers_cross", c.n_layers_cross);
  cfg.read("location_encoding_degree", c.location_encoding_degree);
  cfg.read("location_hidden", c.location_hidden);
  cfg.read("location_dim", c.location_dim);
  cfg.read("siren_w0", c.siren_w0);
  cfg.read("mlp_hidden", c.mlp_hidden);
  cfg.read("ffn_hidden", c.ffn_hidden);
  cfg.read("chip_channels", c.chip_channels);
  cfg.read("chip_center_only", c.chip_center_only);
  cfg.read("pre_norm", c.pre_norm);
  cfg.read("model_seed", c.seed);
  if (cfg.has("connectivity")) c.connectivity = Connectivity::parse(cfg.str("connectivity", "full"));
  c.surface_mode = cfg.has("surface") ? parse_surface_mode(cfg.str("surface", "none")) : mode_for(d);
  c.surface_dim = d.surface.embedding_dim ? d.surface.embedding_dim : c.surface_dim;
  if (d.surface.kind == SurfaceKind::Chips) c.chips = d.surface.chips;
  c.validate();
  return c;
}

TrainConfig train_config(const Config& cfg) {
  TrainConfig t;
  cfg.read("lr0", t.lr0);
  cfg.read("weight_decay", t.weight_decay);
  cfg.read("timestamps_per_step", t.timestamps_per_step);
  cfg.read("targets_per_timestamp", t.targets_per_timestamp);
  cfg.read("epochs", t.epochs);
  cfg.read("steps", t.steps);
  cfg.read("eval_every", t.eval_every);
  cfg.read("val_timestamps", t.val_timestamps);
  cfg.read("preflight", t.preflight);
  cfg.read("seed", t.seed);
  t.validate();
  return t;
}

fs::path require_path(const Config& cfg, const std::string& key) {
  if (!cfg.has(key)) throw InvalidConfig("missing --" + key + " (or '" + key + "' in the config file)");
  return cfg.str(key, "");
}

fs::path prepare_out(const Config&, const std::string& out) {
  if (out.empty()) throw InvalidConfig("missing --out");
  fs::create_directories(out);
  return out;
}

Role role_from(const Config& cfg) { return parse_role(cfg.str("role", "test")); }

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << s;
}

// ---- subcommands ------------------------------------------------------------------------------

int cmd_synth(const Config& cfg, const std::string& spec_name, const fs::path& out) {
  SyntheticWorldSpec spec;
  if (spec_name != "default") throw InvalidConfig("unknown synthetic spec '" + spec_name + "' (only 'default')");
  cfg.read("synth_n_backbone", spec.n_backbone);
  cfg.read("synth_n_train", spec.n_train);
  cfg.read("synth_n_val", spec.n_val);
  cfg.read("synth_n_test", spec.n_test);
  cfg.read("synth_time_steps", spec.time_steps);
  cfg.read("synth_surface_dim", spec.surface_dim);
  cfg.read("synth_nlat", spec.nlat);
  cfg.read("synth_nlon", spec.nlon);
  cfg.read("synth_seed", spec.seed);
  if (cfg.has("synth_surface_kind")) spec.surface_kind = parse_surface_kind(cfg.str("synth_surface_kind", ""));
  const Dataset d = generate_synthetic_world(spec);
  write_dataset_text(d, out);
  save_dataset_cache(d, out / kDatasetCacheName);
  Manifest m;
  m.command = "synth";
  m.extra["seeds"] = {{"synth_seed", spec.seed}};
  for (const char* f : {"coarse.csv", "stations.csv", "partition.csv", "dataset.json", kDatasetCacheName}) {
    m.output(out / f);
  }
  m.write(out, cfg);
  spdlog::info("synthetic world: {} stations, {} hours -> {}", d.stations.size(), d.times().count, out.string());
  return 0;
}

int cmd_ingest(const Config& cfg, const DatasetPaths& paths, const std::string& surface_kind, const fs::path& out) {
  LoadOptions opt;
  opt.surface.kind = parse_surface_kind(surface_kind);
  cfg.read("backbone_min", opt.thresholds.backbone_min);
  cfg.read("train_min", opt.thresholds.train_min);
  cfg.read("holdout_min", opt.thresholds.holdout_min);
  cfg.read("val_fraction", opt.thresholds.val_fraction);
  cfg.read("seed", opt.thresholds.seed);
  const Dataset d = load_dataset(paths, opt);
  write_dataset_text(d, out);
  save_dataset_cache(d, out / kDatasetCacheName);
  Manifest m;
  m.command = "ingest";
  m.input(paths.stations);
  m.input(paths.coarse);
  if (paths.surface) m.input(*paths.surface);
  if (paths.partition) m.input(*paths.partition);
  m.output(out / kDatasetCacheName);
  const auto& r = d.report;
  m.extra["report"] = {{"stations", r.stations},       {"rows", r.rows},
                       {"dropped_rows", r.dropped_rows}, {"rejected_readings", r.rejected_readings},
                       {"unfillable_channels", r.unfillable_channels}, {"coverage_fraction", r.coverage_fraction}};
  m.write(out, cfg);
  std::cout << "stations " << r.stations << " rows " << r.rows << " dropped " << r.dropped_rows << " rejected "
            << r.rejected_readings << " coverage " << r.coverage_fraction << '\n';
  return 0;
}

int cmd_partition(const Config& cfg, const fs::path& out) {
  const fs::path data = require_path(cfg, "data");
  Dataset d = open_dataset(data);
  PartitionThresholds th;
  cfg.read("backbone_min", th.backbone_min);
  cfg.read("train_min", th.train_min);
  cfg.read("holdout_min", th.holdout_min);
  cfg.read("val_fraction", th.val_fraction);
  cfg.read("seed", th.seed);
  d.partition = partition_stations(d.stations, th);
  d.validate();
  write_dataset_text(d, out);
  save_dataset_cache(d, out / kDatasetCacheName);
  Manifest m;
  m.command = "partition";
  m.input(data);
  m.output(out / "partition.csv");
  m.output(out / kDatasetCacheName);
  m.extra["seeds"] = {{"partition_seed", th.seed}};
  m.write(out, cfg);
  for (Role r : {Role::Backbone, Role::Train, Role::Val, Role::Test}) {
    std::cout << role_name(r) << ' ' << d.partition.members(r).size() << '\n';
  }
  return 0;
}

int cmd_train(const Config& cfg, const fs::path& out) {
  const fs::path data = require_path(cfg, "data");
  const Dataset d = open_dataset(data);
  const ModelConfig mc = model_config(cfg, d);
  const TrainConfig tc = train_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t total = tc.total_steps(d.times().count);
  const TrainResult r = train(d, mc, tc, [&](std::size_t step, std::size_t n, double loss) {
    if (step % std::max<std::size_t>(1, n / 10) == 0 || step == n) spdlog::info("step {}/{} loss {:.5f}", step, n, loss);
  });
  const fs::path ckpt = out / "model.mwx";
  save_checkpoint(r.state, ckpt);
  {
    std::ofstream log(out / "train_log.csv");
    r.report.write_csv(log);
  }
  Manifest m;
  m.command = "train";
  m.input(data / kDatasetCacheName);
  m.output(ckpt);
  m.output(out / "train_log.csv");
  m.extra["seeds"] = {{"train_seed", tc.seed}, {"model_seed", mc.seed}};
  m.extra["selected_step"] = r.report.selected_step;
  m.extra["total_steps"] = total;
  m.extra["selected_val_loss"] = r.report.selected_val_loss;
  m.extra["preflight_rel_error"] = r.report.preflight_rel_error;
  m.extra["diverged"] = r.report.diverged;
  m.write(out, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "selected step " << r.report.selected_step << " of " << total << ", val loss "
            << r.report.selected_val_loss << ", " << secs << " s\n";
  if (r.report.diverged) {
    std::cerr << "training diverged: " << r.report.diagnostics << "; last good checkpoint written to " << ckpt.string()
              << '\n';
    return exit_code_for(ErrorClass::Numerical);
  }
  return 0;
}

int cmd_evaluate(const Config& cfg, const fs::path& out) {
  const fs::path data = require_path(cfg, "data");
  const fs::path ckpt = require_path(cfg, "checkpoint");
  const ModelState s = load_checkpoint(ckpt);
  const Dataset d = open_dataset(data);
  const Role role = role_from(cfg);
  const auto records = model_records(d, s, role);
  const std::string name = std::string("model_") + std::string(surface_mode_name(s.config.surface_mode));
  const MetricTable table = metric_table(name, records);
  {
    std::ofstream f(out / "metrics.csv");
    write_metric_csv(f, std::span(&table, 1));
  }
  std::vector<GeoPoint> backbone;
  for (std::size_t i : d.indices(Role::Backbone)) backbone.push_back({d.stations[i].lat, d.stations[i].lon});
  std::map<std::string, GeoPoint> pos;
  for (const auto& st : d.stations) pos[st.id] = {st.lat, st.lon};
  std::vector<std::size_t> ks;
  for (std::size_t k : {1, 5, 10, 20}) {
    if (k <= backbone.size()) ks.push_back(k);
  }
  std::size_t bins = 10;
  cfg.read("distance_bins", bins);
  const auto dist = distance_sensitivity(records, pos, backbone, ks, bins);
  {
    std::ofstream f(out / "distance.csv");
    write_distance_csv(f, name, dist);
  }
  Manifest m;
  m.command = "evaluate";
  m.input(data / kDatasetCacheName);
  m.input(ckpt);
  m.output(out / "metrics.csv");
  m.output(out / "distance.csv");
  m.extra["checkpoint_id"] = model_fingerprint(s);
  m.write(out, cfg);
  write_metric_csv(std::cout, std::span(&table, 1));
  return 0;
}

int cmd_baseline(const Config& cfg, const fs::path& out) {
  const fs::path data = require_path(cfg, "data");
  const Dataset d = open_dataset(data);
  const Role role = role_from(cfg);
  const std::vector<MetricTable> tables = {metric_table(kEra5ModelName, era5_records(d, role)),
                                           metric_table(kRbfModelName, rbf_records(d, role))};
  {
    std::ofstream f(out / "baselines.csv");
    write_metric_csv(f, tables);
  }
  Manifest m;
  m.command = "baseline";
  m.input(data / kDatasetCacheName);
  m.output(out / "baselines.csv");
  m.write(out, cfg);
  write_metric_csv(std::cout, tables);
  return 0;
}

int cmd_ablate(const Config& cfg, const std::vector<std::string>& specs, const fs::path& out) {
  const fs::path data = require_path(cfg, "data");
  std::vector<AblationVariant> variants;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw InvalidConfig("variant must be NAME=CHECKPOINT, got '" + s + "'");
    variants.push_back({s.substr(0, eq), s.substr(eq + 1), {}});
  }
  const Dataset d = open_dataset(data);
  const auto tables = ablation_report(d, variants, role_from(cfg));
  {
    std::ofstream f(out / "ablation.csv");
    write_metric_csv(f, tables);
  }
  Manifest m;
  m.command = "ablate";
  m.input(data / kDatasetCacheName);
  for (const auto& v : variants) m.input(v.checkpoint);
  m.output(out / "ablation.csv");
  m.write(out, cfg);
  write_metric_csv(std::cout, tables);
  return 0;
}

std::vector<PointTarget> read_points(const fs::path& p, const Dataset& d, const ModelState& s) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::vector<PointTarget> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line.rfind("lat", 0) == 0) continue;
    std::vector<double> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        f.push_back(std::stod(cell));
      } catch (const std::logic_error&) {
        throw SchemaError(p.string() + ":" + std::to_string(lineno) + ": not a number: " + cell);
      }
    }
    if (f.size() < 2) throw SchemaError(p.string() + ":" + std::to_string(lineno) + ": expected lat,lon[,embedding...]");
    PointTarget t;
    t.position = {f[0], f[1]};
    if (f.size() > 2) {
      t.surface = Embedding{std::vector<double>(f.begin() + 2, f.end())};
    } else if (s.config.surface_mode != SurfaceMode::None && d.truth) {
      t.surface = synthetic_surface(*d.truth, t.position, d.surface.kind, d.surface.chips);
    }
    out.push_back(std::move(t));
  }
  return out;
}

int cmd_infer_point(const Config& cfg, const std::optional<double>& lat, const std::optional<double>& lon,
                    const std::string& points, const fs::path& out) {
  const fs::path data = require_path(cfg, "data");
  const fs::path ckpt = require_path(cfg, "checkpoint");
  const ModelState s = load_checkpoint(ckpt);
  const Dataset d = open_dataset(data);
  Timestamp ts = d.times().start;
  cfg.read("timestamp", ts);
  std::vector<PointTarget> targets;
  Manifest m;
  if (!points.empty()) {
    targets = read_points(points, d, s);
    m.input(points);
  } else {
    if (!lat || !lon) throw InvalidConfig("infer-point needs --lat and --lon, or --points FILE");
    PointTarget t;
    t.position = {*lat, *lon};
    if (s.config.surface_mode != SurfaceMode::None && d.truth) {
      t.surface = synthetic_surface(*d.truth, t.position, d.surface.kind, d.surface.chips);
    }
    targets.push_back(std::move(t));
  }
  const auto pred = infer_points(s, d, targets, ts);
  std::ostringstream csv;
  csv.precision(10);
  csv << "lat,lon,timestamp,temperature_c,dewpoint_c,wind_u_ms,wind_v_ms\n";
  for (std::size_t i = 0; i < pred.size(); ++i) {
    csv << targets[i].position.lat << ',' << targets[i].position.lon << ',' << ts << ',' << pred[i].temperature_c << ','
        << pred[i].dewpoint_c << ',' << pred[i].wind_u_ms << ',' << pred[i].wind_v_ms << '\n';
  }
  write_text(out / "points.csv", csv.str());
  m.command = "infer-point";
  m.input(data / kDatasetCacheName);
  m.input(ckpt);
  m.output(out / "points.csv");
  m.extra["checkpoint_id"] = model_fingerprint(s);
  m.write(out, cfg);
  std::cout << csv.str();
  return 0;
}

int cmd_infer_tile(const Config& cfg, const std::string& embedding_raster, const fs::path& out) {
  const fs::path data = require_path(cfg, "data");
  const fs::path ckpt = require_path(cfg, "checkpoint");
  const ModelState s = load_checkpoint(ckpt);
  const Dataset d = open_dataset(data);
  TileSpec tile;
  tile.timestamp = d.times().start;
  tile.origin = {d.coarse.lat0 + 0.5 * d.coarse.dlat * static_cast<double>(d.coarse.nlat - 1),
                 d.coarse.lon0 + 0.5 * d.coarse.dlon * static_cast<double>(d.coarse.nlon - 1)};
  cfg.read("origin_lat", tile.origin.lat);
  cfg.read("origin_lon", tile.origin.lon);
  cfg.read("pixel_m", tile.pixel_m);
  cfg.read("tile_rows", tile.rows);
  cfg.read("tile_cols", tile.cols);
  cfg.read("timestamp", tile.timestamp);
  TileOptions opt;
  cfg.read("block", opt.block);
  cfg.read("workers", opt.workers);
  std::size_t budget_mb = opt.memory_budget_bytes >> 20;
  cfg.read("memory_budget_mb", budget_mb);
  opt.memory_budget_bytes = budget_mb << 20;
  Manifest m;
  SurfaceSource source;
  if (!embedding_raster.empty()) {
    source = embedding_raster_source(load_embedding_raster(embedding_raster));
    m.input(embedding_raster);
  } else if (s.config.surface_mode != SurfaceMode::None) {
    source = synthetic_surface_source(d);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const FieldRaster raster = infer_tile(s, d, tile, source, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_raster(raster, out / "tile");
  m.command = "infer-tile";
  m.input(data / kDatasetCacheName);
  m.input(ckpt);
  m.output(out / "tile.f32");
  m.output(out / "tile.json");
  m.extra["checkpoint_id"] = raster.checkpoint_id;
  m.write(out, cfg);
  std::cout << tile.rows << "x" << tile.cols << " tile in " << secs << " s -> " << (out / "tile.f32").string() << '\n';
  return 0;
}

int cmd_report(const fs::path& run) {
  if (!fs::is_directory(run)) throw IoError("run directory not found: " + run.string());
  std::ostringstream txt;
  for (const char* name : {"baselines.csv", "metrics.csv", "ablation.csv"}) {
    const fs::path p = run / name;
    if (!fs::exists(p)) continue;
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);  // header
    txt << "== " << name << '\n';
    std::map<std::string, std::vector<std::string>> by_model;
    while (std::getline(in, line)) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) f.push_back(cell);
      if (f.size() < 5) continue;
      if (f[2] == "spatial_r2_skipped" || f[2] == "calm_excluded") continue;
      by_model[f[0]].push_back(f[1] + "." + f[2] + "=" + f[3]);
    }
    for (const auto& [model, vals] : by_model) {
      txt << model << '\n';
      for (const auto& v : vals) txt << "  " << v << '\n';
    }
  }
  if (fs::exists(run / "manifest.json")) {
    std::ifstream in(run / "manifest.json");
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_discarded() && j.contains("command")) txt << "manifest: " << j["command"].get<std::string>() << '\n';
  }
  if (txt.str().empty()) throw IoError("nothing to report in " + run.string());
  write_text(run / "report.txt", txt.str());
  std::cout << txt.str();
  return 0;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t n = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidConfig(path + ":" + std::to_string(n) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidConfig(path + ":" + std::to_string(n) + ": empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"mwx: micro-weather station/coarse-field pipeline"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string connectivity;
  std::string surface;
  std::optional<std::size_t> block;
  std::optional<std::size_t> workers;
  std::string out_dir;
  std::string data_dir;
  std::string checkpoint;
  std::string verbosity = "info";

  auto common = [&](CLI::App* sc) {
    sc->add_option("--config", config_path, "key=value config file");
    sc->add_option("--seed", seed, "seed for every random stream");
    sc->add_option("--connectivity", connectivity, "full | delaunay | knn:K");
    sc->add_option("--surface", surface, "none | embedding | chips");
    sc->add_option("--block", block, "tile block side in pixels");
    sc->add_option("--workers", workers, "tile worker threads");
    sc->add_option("--out", out_dir, "output directory");
    sc->add_option("--data", data_dir, "dataset directory");
    sc->add_option("--checkpoint", checkpoint, "model checkpoint");
    sc->add_option("--log-level", verbosity, "trace | debug | info | warn | error");
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic world");
  std::string spec_name = "default";
  synth->add_option("--spec", spec_name, "synthetic spec (default)");
  common(synth);

  auto* ingest = app.add_subcommand("ingest", "load station, coarse and surface files");
  DatasetPaths paths;
  std::string surface_file;
  std::string partition_file;
  std::string surface_kind = "none";
  ingest->add_option("--stations", paths.stations, "stations CSV")->required();
  ingest->add_option("--coarse", paths.coarse, "coarse-grid CSV")->required();
  ingest->add_option("--surface-file", surface_file, "embedding table or chip manifest");
  ingest->add_option("--surface-kind", surface_kind, "none | embedding | chips");
  ingest->add_option("--partition", partition_file, "station_id,role CSV");
  common(ingest);

  auto* partition = app.add_subcommand("partition", "re-derive the station partition");
  common(partition);
  auto* trainc = app.add_subcommand("train", "train a model");
  common(trainc);
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on held-out stations");
  common(evaluate);
  auto* baseline = app.add_subcommand("baseline", "evaluate the bilinear and RBF baselines");
  common(baseline);
  auto* ablate = app.add_subcommand("ablate", "consolidated table for several checkpoints");
  std::vector<std::string> variants;
  ablate->add_option("--variant", variants, "NAME=CHECKPOINT (repeatable)");
  common(ablate);
  auto* ipoint = app.add_subcommand("infer-point", "predict at points");
  std::optional<double> lat;
  std::optional<double> lon;
  std::string points;
  ipoint->add_option("--lat", lat, "latitude");
  ipoint->add_option("--lon", lon, "longitude");
  ipoint->add_option("--points", points, "CSV lat,lon[,embedding...]");
  common(ipoint);
  auto* itile = app.add_subcommand("infer-tile", "predict a raster tile");
  std::string raster;
  itile->add_option("--embedding-raster", raster, "per-pixel embedding raster");
  common(itile);
  auto* report = app.add_subcommand("report", "summarise a run directory");
  std::string run_dir;
  report->add_option("--run", run_dir, "run directory")->required();
  common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return exit_code_for(ErrorClass::Usage);
  }

  try {
    spdlog::set_level(spdlog::level::from_str(verbosity));
    Config cfg;
    if (!config_path.empty()) {
      for (const auto& [k, v] : read_config_file(config_path)) cfg.set(k, v);
    }
    if (seed) {
      const std::string s = std::to_string(*seed);
      cfg.set("seed", s);
      cfg.set("model_seed", s);
      cfg.set("synth_seed", s);
    }
    if (!connectivity.empty()) cfg.set("connectivity", connectivity);
    if (!surface.empty()) cfg.set("surface", surface);
    if (block) cfg.set("block", std::to_string(*block));
    if (workers) cfg.set("workers", std::to_string(*workers));
    if (!data_dir.empty()) cfg.set("data", data_dir);
    if (!checkpoint.empty()) cfg.set("checkpoint", checkpoint);

    if (report->parsed()) return cmd_report(run_dir);
    const fs::path out = prepare_out(cfg, out_dir);
    if (synth->parsed()) return cmd_synth(cfg, spec_name, out);
    if (ingest->parsed()) {
      if (!surface_file.empty()) paths.surface = surface_file;
      if (!partition_file.empty()) paths.partition = partition_file;
      return cmd_ingest(cfg, paths, surface_kind, out);
    }
    if (partition->parsed()) return cmd_partition(cfg, out);
    if (trainc->parsed()) return cmd_train(cfg, out);
    if (evaluate->parsed()) return cmd_evaluate(cfg, out);
    if (baseline->parsed()) return cmd_baseline(cfg, out);
    if (ablate->parsed()) return cmd_ablate(cfg, variants, out);
    if (ipoint->parsed()) return cmd_infer_point(cfg, lat, lon, points, out);
    if (itile->parsed()) return cmd_infer_tile(cfg, raster, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (e.error_class() == ErrorClass::Usage) std::cerr << '\n' << app.help();
    return exit_code_for(e.error_class());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(ErrorClass::Data);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(ErrorClass::Data);
  } catch (const spdlog::spdlog_ex& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(ErrorClass::Usage);
  }
  return exit_code_for(ErrorClass::Usage);
}

}  // namespace mwx
