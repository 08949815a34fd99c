#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "microweather/baselines.hpp"
#include "microweather/errors.hpp"
#include "microweather/inference.hpp"
#include "microweather/synthetic.hpp"

using namespace mw;

namespace {

struct World {
  Dataset d;
  ModelState state;
};

const World& world() {
  static const World w = [] {
    World x;
    x.d = generate_synthetic_world(fixture::small_world());
    x.state = init_model_state(fixture::small_model_config(x.d), compute_normalization(x.d));
    return x;
  }();
  return w;
}

TileSpec small_tile(std::size_t rows, std::size_t cols) {
  TileSpec t;
  t.origin = {37.6, -99.6};
  t.pixel_m = 10.0;
  t.rows = rows;
  t.cols = cols;
  t.timestamp = world().d.times().at(5);
  return t;
}

PointTarget target_at(const GeoPoint& p) {
  const auto src = synthetic_surface_source(world().d);
  return {p, src(p, 0, 0)};
}

}  // namespace

TEST(InferPoints, BatchEqualsSingletons) {
  const auto& w = world();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lat(37.05, 37.95), lon(-99.95, -99.05);
  std::vector<PointTarget> targets;
  for (int i = 0; i < 100; ++i) targets.push_back(target_at({lat(rng), lon(rng)}));
  targets.push_back(targets[3]);
  const Timestamp ts = w.d.times().at(7);
  const auto batch = infer_points(w.state, w.d, targets, ts);
  ASSERT_EQ(batch.size(), targets.size());
  for (std::size_t i = 0; i < 100; i += 7) {
    const auto one = infer_points(w.state, w.d, std::span(&targets[i], 1), ts);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(one[0][c], batch[i][c], 1e-10);
  }
  EXPECT_EQ(batch[100], batch[3]);
}

TEST(InferPoints, Errors) {
  const auto& w = world();
  const std::vector<PointTarget> outside = {target_at({45.0, -99.5})};
  EXPECT_THROW(infer_points(w.state, w.d, outside, w.d.times().at(0)), OutOfHull);
  const std::vector<PointTarget> inside = {target_at({37.5, -99.5})};
  EXPECT_THROW(infer_points(w.state, w.d, inside, w.d.times().at(0) - 1), UnknownTimestamp);
  const std::vector<PointTarget> no_surface = {{{37.5, -99.5}, SurfaceFeature{}}};
  EXPECT_THROW(infer_points(w.state, w.d, no_surface, w.d.times().at(0)), SurfaceModeMismatch);
}

TEST(InferTile, SinglePixelEqualsPoint) {
  const auto& w = world();
  const TileSpec t = small_tile(1, 1);
  const auto src = synthetic_surface_source(w.d);
  const auto r = infer_tile(w.state, w.d, t, src);
  const GeoPoint c = t.pixel_center(0, 0);
  const std::vector<PointTarget> p = {{c, src(c, 0, 0)}};
  const auto v = infer_points(w.state, w.d, p, t.timestamp);
  for (std::size_t ch = 0; ch < 4; ++ch) EXPECT_EQ(r.at(ch, 0, 0), static_cast<float>(v[0][ch]));
}

TEST(InferTile, BlocksAndWorkersBitwiseIdentical) {
  const auto& w = world();
  const TileSpec t = small_tile(70, 45);
  const auto src = synthetic_surface_source(w.d);
  TileOptions ref_opt;
  ref_opt.block = 64;
  ref_opt.workers = 1;
  const auto ref = infer_tile(w.state, w.d, t, src, ref_opt);
  for (std::size_t block : {7, 32, 256}) {
    for (std::size_t workers : {1, 3}) {
      TileOptions o;
      o.block = block;
      o.workers = workers;
      const auto r = infer_tile(w.state, w.d, t, src, o);
      EXPECT_EQ(r.values, ref.values) << "block " << block << " workers " << workers;
    }
  }
}

TEST(InferTile, RasterRoundTrip) {
  const auto& w = world();
  const auto r = infer_tile(w.state, w.d, small_tile(5, 6), synthetic_surface_source(w.d));
  fixture::TempDir dir("raster");
  write_raster(r, dir.path() / "tile");
  const auto back = read_raster(dir.path() / "tile");
  EXPECT_EQ(back.values, r.values);
  EXPECT_EQ(back.tile.rows, 5u);
  EXPECT_EQ(back.tile.cols, 6u);
  EXPECT_EQ(back.tile.timestamp, r.tile.timestamp);
  EXPECT_EQ(back.checkpoint_id, model_fingerprint(w.state));
}

TEST(InferTile, EmbeddingRasterMatchesSource) {
  const auto& w = world();
  const TileSpec t = small_tile(4, 3);
  const auto src = synthetic_surface_source(w.d);
  EmbeddingRaster er;
  er.rows = 4;
  er.cols = 3;
  er.dim = w.d.surface.embedding_dim;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      const auto f = src(t.pixel_center(r, c), r, c);
      for (double v : std::get<Embedding>(f).vector) er.values.push_back(static_cast<float>(v));
    }
  }
  fixture::TempDir dir("emb");
  save_embedding_raster(er, dir.path() / "emb.f32");
  const auto loaded = load_embedding_raster(dir.path() / "emb.f32");
  EXPECT_EQ(loaded.values, er.values);
  const auto a = infer_tile(w.state, w.d, t, embedding_raster_source(loaded));
  ASSERT_EQ(a.values.size(), 4u * 12u);
  for (float v : a.values) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(infer_tile(w.state, w.d, small_tile(5, 3), embedding_raster_source(loaded)), DimensionMismatch);
}

TEST(InferTile, ValidationErrors) {
  const auto& w = world();
  TileSpec t = small_tile(4, 4);
  t.origin = {50.0, -99.5};
  EXPECT_THROW(infer_tile(w.state, w.d, t, synthetic_surface_source(w.d)), OutOfHull);
  t = small_tile(0, 4);
  EXPECT_THROW(infer_tile(w.state, w.d, t, synthetic_surface_source(w.d)), InvalidConfig);
}
