#include <random>

#include <benchmark/benchmark.h>

#include "microweather/baselines.hpp"
#include "microweather/inference.hpp"
#include "microweather/model.hpp"
#include "microweather/nn/matrix.hpp"
#include "microweather/synthetic.hpp"

using namespace mw;

namespace {

nn::Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> n(0, 1);
  nn::Matrix m(r, c);
  for (auto& v : m.values()) v = n(rng);
  return m;
}

struct World {
  Dataset d;
  ModelState state;
};

const World& world() {
  static const World w = [] {
    World x;
    x.d = generate_synthetic_world(SyntheticWorldSpec{});
    ModelConfig c;
    c.d_latent = 32;
    c.n_heads = 2;
    c.n_layers_self = 2;
    c.n_layers_cross = 2;
    c.mlp_hidden = 32;
    c.location_hidden = 32;
    c.location_dim = 16;
    c.surface_dim = x.d.surface.embedding_dim;
    x.state = init_model_state(c, compute_normalization(x.d));
    return x;
  }();
  return w;
}

void BM_Gemm(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  std::mt19937_64 rng(1);
  const auto a = random_matrix(rng, n, n), b = random_matrix(rng, n, n);
  nn::Matrix c;
  for (auto _ : st) {
    nn::gemm(a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Gemm)->Arg(32)->Arg(128)->Arg(256);

void BM_InferPoints(benchmark::State& st) {
  const auto& w = world();
  const auto src = synthetic_surface_source(w.d);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  std::vector<PointTarget> targets;
  for (int i = 0; i < st.range(0); ++i) {
    const GeoPoint p{w.d.coarse.lat0 + u(rng) * 7 * w.d.coarse.dlat, w.d.coarse.lon0 + u(rng) * 7 * w.d.coarse.dlon};
    targets.push_back({p, src(p, 0, 0)});
  }
  for (auto _ : st) benchmark::DoNotOptimize(infer_points(w.state, w.d, targets, w.d.times().at(10)));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_InferPoints)->Arg(1)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_InferTile(benchmark::State& st) {
  const auto& w = world();
  TileSpec t;
  t.origin = {w.d.coarse.lat0 + 3 * w.d.coarse.dlat, w.d.coarse.lon0 + 3 * w.d.coarse.dlon};
  t.rows = t.cols = static_cast<std::size_t>(st.range(0));
  t.timestamp = w.d.times().at(10);
  const auto src = synthetic_surface_source(w.d);
  for (auto _ : st) benchmark::DoNotOptimize(infer_tile(w.state, w.d, t, src));
  st.SetItemsProcessed(st.iterations() * st.range(0) * st.range(0));
}
BENCHMARK(BM_InferTile)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Rbf(benchmark::State& st) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  std::vector<PlanarPoint> sites(static_cast<std::size_t>(st.range(0))), q(1000);
  std::vector<double> vals(sites.size());
  for (auto& p : sites) p = {u(rng), u(rng)};
  for (auto& p : q) p = {u(rng), u(rng)};
  for (auto& v : vals) v = u(rng);
  for (auto _ : st) benchmark::DoNotOptimize(rbf_interpolate_planar(sites, vals, q));
}
BENCHMARK(BM_Rbf)->Arg(40)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
