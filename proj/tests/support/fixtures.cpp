#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "microweather/connectivity.hpp"

namespace fixture {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("mwtest_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_minimal_text(const fs::path& dir, bool nan_temperature, bool outside) {
  fs::create_directories(dir);
  {
    std::ofstream c(dir / "coarse.csv");
    c << "lat0,lon0,dlat,dlon,nlat,nlon\n40,-100,0.25,0.25,2,2\n";
    c << "timestamp,i_lat,i_lon,temp_c,dewpoint_c,u_ms,v_ms\n";
    for (int t = 0; t < 4; ++t) {
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          c << 1000 + t << ',' << i << ',' << j << ',' << 10 + t + i << ',' << 5 + j << ",1,-1\n";
        }
      }
    }
  }
  std::ofstream s(dir / "stations.csv");
  s << "station_id,lat,lon,timestamp,temp_c,dewpoint_c,wind_speed_ms,wind_dir_deg,quality_flag\n";
  const char* ids[] = {"A", "B", "C"};
  const double lat[] = {40.05, 40.1, outside ? 41.0 : 40.2};
  const double lon[] = {-99.9, -99.8, -99.95};
  for (int k = 0; k < 3; ++k) {
    for (int t = 0; t < 4; ++t) {
      s << ids[k] << ',' << lat[k] << ',' << lon[k] << ',' << 1000 + t << ',';
      if (nan_temperature && k == 1 && t == 1) {
        s << "NaN";
      } else {
        s << 11.5 + k + t;
      }
      s << ',' << 4 + k << ',' << 2 + t << ',' << 90 * k << ",good\n";
    }
  }
}

mw::DatasetPaths minimal_paths(const fs::path& dir) {
  mw::DatasetPaths p;
  p.stations = dir / "stations.csv";
  p.coarse = dir / "coarse.csv";
  return p;
}

mw::ModelConfig tiny_model_config(std::uint64_t seed) {
  mw::ModelConfig c;
  c.d_latent = 12;
  c.n_heads = 3;
  c.n_layers_self = 2;
  c.n_layers_cross = 2;
  c.location_encoding_degree = 3;
  c.location_hidden = 8;
  c.location_dim = 6;
  c.mlp_hidden = 8;
  c.surface_mode = mw::SurfaceMode::Embedding;
  c.surface_dim = 4;
  c.seed = seed;
  return c;
}

TinyProblem make_tiny_problem(std::uint64_t seed, std::size_t nb, std::size_t nt, const mw::ModelConfig* config) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  const mw::ModelConfig cfg = config ? *config : tiny_model_config(seed);

  mw::Normalization norm;
  norm.station.mean = {12.0, 6.0, 1.0, 0.0};
  norm.station.std = {4.0, 3.0, 2.0, 2.0};
  norm.coarse = norm.station;

  TinyProblem p{mw::init_model_state(cfg, norm), {}, mw::nn::Matrix(nt, 4), mw::nn::Matrix(nt, 4, 1.0)};

  auto make_points = [&](std::size_t count, std::vector<mw::GeoPoint>& pts, std::vector<mw::SurfaceFeature>& surf) {
    for (std::size_t i = 0; i < count; ++i) {
      pts.push_back({40.0 + u(rng), -100.0 + u(rng)});
      mw::Embedding e;
      for (std::size_t k = 0; k < cfg.surface_dim; ++k) e.vector.push_back(n(rng));
      surf.emplace_back(std::move(e));
    }
  };
  auto weather = [&](std::size_t count) {
    std::vector<mw::WeatherVector> w(count);
    for (auto& v : w) v = {12.0 + 4.0 * n(rng), 6.0 + 3.0 * n(rng), 2.0 * n(rng), 2.0 * n(rng)};
    return w;
  };

  std::vector<mw::GeoPoint> bp, tp;
  std::vector<mw::SurfaceFeature> bs, ts;
  make_points(nb, bp, bs);
  make_points(nt, tp, ts);
  std::vector<const mw::SurfaceFeature*> bsp, tsp;
  for (const auto& s : bs) bsp.push_back(cfg.surface_mode == mw::SurfaceMode::None ? nullptr : &s);
  for (const auto& s : ts) tsp.push_back(cfg.surface_mode == mw::SurfaceMode::None ? nullptr : &s);

  auto& in = p.inputs;
  in.backbone_static = mw::make_static_inputs(bp, bsp, cfg);
  in.target_static = mw::make_static_inputs(tp, tsp, cfg);
  for (std::size_t i = 0; i < nb; ++i) in.backbone.rows.push_back(i);
  for (std::size_t i = 0; i < nt; ++i) in.targets.rows.push_back(i);
  in.backbone.observations = mw::prepare_weather(weather(nb), norm.station);
  in.backbone.coarse = mw::prepare_weather(weather(nb), norm.coarse);
  in.targets.coarse = mw::prepare_weather(weather(nt), norm.coarse);
  std::vector<mw::Site> sites;
  for (std::size_t i = 0; i < nb; ++i) sites.push_back({"S" + std::to_string(i), bp[i]});
  in.mask = mw::build_connectivity(sites, tp, cfg.connectivity);
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t c = 0; c < 4; ++c) p.observed(i, c) = n(rng);
  }
  return p;
}

mw::SyntheticWorldSpec small_world(std::uint64_t seed) {
  mw::SyntheticWorldSpec w;
  w.n_backbone = 12;
  w.n_train = 6;
  w.n_val = 3;
  w.n_test = 4;
  w.nlat = 5;
  w.nlon = 5;
  w.time_steps = 48;
  w.seed = seed;
  return w;
}

mw::ModelConfig small_model_config(const mw::Dataset& d, mw::SurfaceMode mode) {
  mw::ModelConfig c = tiny_model_config(5);
  c.n_layers_self = 1;
  c.n_layers_cross = 1;
  c.surface_mode = mode;
  c.surface_dim = d.surface.embedding_dim;
  return c;
}

mw::ModelConfig ablation_model_config(std::size_t surface_dim, mw::SurfaceMode mode, const mw::Connectivity& conn) {
  mw::ModelConfig mc;
  mc.d_latent = 32;
  mc.n_heads = 2;
  mc.n_layers_self = 2;
  mc.n_layers_cross = 2;
  mc.mlp_hidden = 32;
  mc.location_hidden = 32;
  mc.location_dim = 16;
  mc.surface_dim = surface_dim;
  mc.surface_mode = mode;
  mc.connectivity = conn;
  return mc;
}

mw::TrainConfig ablation_train_config() {
  mw::TrainConfig tc;
  tc.steps = 300;
  tc.timestamps_per_step = 8;
  tc.eval_every = 25;
  tc.lr0 = 3e-3;
  return tc;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixture

namespace fixture {

namespace {

double tiny_loss(const TinyProblem& p, const mw::ModelState& state, mw::nn::Gradients* grads,
                 std::vector<std::uint8_t>* relu_pattern) {
  mw::nn::Graph g(grads != nullptr);
  g.set_relu_probe(relu_pattern);
  const auto r = mw::forward(g, state, p.inputs);
  mw::nn::Var l = mw::loss(r.normalized, p.observed, p.valid);
  if (grads) {
    g.backward(l);
    *grads = g.parameter_gradients();
  }
  return l.value()(0, 0);
}

}  // namespace

std::vector<GroupGradient> group_gradient_check(const TinyProblem& p, std::uint64_t seed, double eps,
                                                double abs_floor) {
  constexpr int kMaxDraws = 50;
  mw::nn::Gradients grads;
  std::vector<std::uint8_t> base_pattern;
  tiny_loss(p, p.state, &grads, &base_pattern);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<GroupGradient> out;
  for (const auto& [name, value] : p.state.parameters) {
    GroupGradient res;
    res.name = name;
    for (int draw = 0; draw < kMaxDraws; ++draw) {
      mw::nn::Matrix dir(value.rows(), value.cols());
      double norm = 0.0;
      for (auto& v : dir.values()) {
        v = nd(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      double analytic = 0.0;
      const auto& gm = grads.at(name);
      for (std::size_t i = 0; i < dir.size(); ++i) {
        dir.values()[i] /= norm;
        analytic += gm.values()[i] * dir.values()[i];
      }
      mw::ModelState plus = p.state, minus = p.state;
      mw::nn::axpy(eps, dir, plus.parameters.at(name));
      mw::nn::axpy(-eps, dir, minus.parameters.at(name));
      std::vector<std::uint8_t> pp, pm;
      const double fp = tiny_loss(p, plus, nullptr, &pp);
      const double fm = tiny_loss(p, minus, nullptr, &pm);
      res.analytic = analytic;
      res.numeric = (fp - fm) / (2.0 * eps);
      // a ReLU input changed sign on [-eps, eps]: the difference quotient is not an oracle there
      res.kink_crossed = pp != base_pattern || pm != base_pattern;
      if (!res.kink_crossed) break;
      ++res.redraws;
    }
    const double scale = std::max(std::abs(res.analytic), std::abs(res.numeric));
    res.rel_error = scale < abs_floor ? 0.0 : std::abs(res.analytic - res.numeric) / scale;
    out.push_back(res);
  }
  return out;
}

}  // namespace fixture
