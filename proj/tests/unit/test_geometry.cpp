#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "microweather/connectivity.hpp"
#include "microweather/errors.hpp"
#include "microweather/geometry.hpp"
#include "microweather/metrics.hpp"
#include "oracles.hpp"

using namespace mw;

TEST(Haversine, KnownValues) {
  EXPECT_EQ(great_circle_km({10, 20}, {10, 20}), 0.0);
  const double antipodal = great_circle_km({30, -100}, {-30, 80});
  EXPECT_NEAR(antipodal / (std::numbers::pi * kEarthRadiusKm), 1.0, 1e-3);
  // one degree of latitude
  EXPECT_NEAR(great_circle_km({0, 0}, {1, 0}), kEarthRadiusKm * std::numbers::pi / 180.0, 1e-9);
  EXPECT_DOUBLE_EQ(great_circle_km({40, -100}, {41, -99}), great_circle_km({41, -99}, {40, -100}));
}

TEST(Haversine, KnnDistanceMatchesAllPairsOracle) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> la(25, 49), lo(-124, -67);
  std::vector<GeoPoint> sites(100), queries(100);
  for (auto& p : sites) p = {la(rng), lo(rng)};
  for (auto& p : queries) p = {la(rng), lo(rng)};
  for (std::size_t k : {1u, 5u, 10u, 20u, 100u}) {
    for (const auto& q : queries) {
      std::vector<double> d;
      for (const auto& s : sites) d.push_back(oracle::haversine_km(q, s));
      std::sort(d.begin(), d.end());
      double sum = 0.0;
      for (std::size_t i = 0; i < k; ++i) sum += d[i];
      EXPECT_EQ(mean_knn_distance_km(q, sites, k), sum / static_cast<double>(k));
    }
  }
  EXPECT_EQ(mean_knn_distance_km(sites[3], sites, 1), 0.0);
  EXPECT_THROW(mean_knn_distance_km(sites[0], sites, 101), KTooLarge);
}

TEST(Projection, RoundTrip) {
  const GeoPoint ref{38, -97};
  for (double dl : {-1.0, 0.0, 0.3, 2.0}) {
    const GeoPoint p{ref.lat + dl, ref.lon - dl * 0.7};
    const GeoPoint q = unproject_local(project_local(p, ref), ref);
    EXPECT_NEAR(q.lat, p.lat, 1e-12);
    EXPECT_NEAR(q.lon, p.lon, 1e-12);
  }
}

TEST(Delaunay, MatchesEmptyCircumcircleOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::uniform_int_distribution<int> count(3, 12);
  for (int set = 0; set < 200; ++set) {
    std::vector<PlanarPoint> pts(static_cast<std::size_t>(count(rng)));
    for (auto& p : pts) p = {u(rng), u(rng)};
    auto tri = delaunay_triangulate(pts);
    ASSERT_TRUE(tri.has_value());
    auto want = oracle::delaunay_triangles(pts);
    std::vector<std::array<std::size_t, 3>> got;
    for (auto t : tri->triangles()) {
      EXPECT_GT(orient2d(pts[t[0]], pts[t[1]], pts[t[2]]), 0.0);
      std::sort(t.begin(), t.end());
      got.push_back(t);
    }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    EXPECT_EQ(got, want) << "set " << set;
    const auto edges = oracle::edges_of(want);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) EXPECT_EQ(tri->adjacent(i, j), edges.contains({i, j}));
    }
  }
}

TEST(Delaunay, Degenerate) {
  std::vector<PlanarPoint> two{{0, 0}, {1, 1}};
  EXPECT_FALSE(delaunay_triangulate(two).has_value());
  std::vector<PlanarPoint> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  EXPECT_FALSE(delaunay_triangulate(line).has_value());
  std::vector<PlanarPoint> dup{{0, 0}, {1, 0}, {0, 1}, {1, 0}};
  EXPECT_FALSE(delaunay_triangulate(dup).has_value());
  // cocircular square: any valid diagonal, two triangles
  std::vector<PlanarPoint> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  auto t = delaunay_triangulate(sq);
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(t->triangles().size(), 2u);
}

namespace {

std::vector<Site> random_sites(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> la(37, 39), lo(-101, -99);
  std::vector<Site> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = {"s" + std::to_string(100 + i), {la(rng), lo(rng)}};
  return s;
}

}  // namespace

TEST(Connectivity, ThreeStationsOneTriangle) {
  std::vector<Site> s{{"a", {38, -100}}, {"b", {38, -99}}, {"c", {39, -99.5}}};
  std::vector<GeoPoint> targets{{38.3, -99.5}};
  auto m = build_connectivity(s, targets, Connectivity::parse("delaunay"));
  EXPECT_FALSE(m.fell_back_to_full);
  EXPECT_TRUE(std::all_of(m.self_mask.begin(), m.self_mask.end(), [](auto v) { return v == 1; }));
  EXPECT_TRUE(std::all_of(m.cross_mask.begin(), m.cross_mask.end(), [](auto v) { return v == 1; }));
}

TEST(Connectivity, KEqualsNIsFull) {
  std::mt19937_64 rng(3);
  auto s = random_sites(rng, 9);
  std::vector<GeoPoint> t{{38, -100}, {38.5, -99.5}};
  auto m = build_connectivity(s, t, {ConnectivityMode::KNearest, 9});
  auto f = build_connectivity(s, t, Connectivity{});
  EXPECT_EQ(m.cross_mask, f.cross_mask);
  EXPECT_EQ(m.self_mask, f.self_mask);
}

TEST(Connectivity, KNearestPicksClosest) {
  std::mt19937_64 rng(5);
  auto s = random_sites(rng, 15);
  std::vector<GeoPoint> t{{38.1, -100.2}};
  auto m = build_connectivity(s, t, {ConnectivityMode::KNearest, 4});
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t j = 0; j < s.size(); ++j) d.push_back({oracle::haversine_km(t[0], s[j].position), j});
  std::sort(d.begin(), d.end());
  for (std::size_t r = 0; r < s.size(); ++r) EXPECT_EQ(m.cross_allowed(0, d[r].second), r < 4);
}

TEST(Connectivity, DelaunayMasksMatchOracle) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> count(3, 12);
  std::uniform_real_distribution<double> la(37.2, 38.8), lo(-100.8, -99.2);
  for (int set = 0; set < 200; ++set) {
    auto sites = random_sites(rng, static_cast<std::size_t>(count(rng)));
    std::vector<GeoPoint> targets(5);
    for (auto& t : targets) t = {la(rng), lo(rng)};
    auto m = build_connectivity(sites, targets, Connectivity::parse("delaunay"));
    ASSERT_FALSE(m.fell_back_to_full);
    EXPECT_NO_THROW(m.validate());
    // oracle in the same projection
    GeoPoint ref{0, 0};
    for (const auto& s : sites) ref.lat += s.position.lat, ref.lon += s.position.lon;
    ref.lat /= static_cast<double>(sites.size());
    ref.lon /= static_cast<double>(sites.size());
    std::vector<PlanarPoint> pts;
    for (const auto& s : sites) pts.push_back(project_local(s.position, ref));
    const auto tris = oracle::delaunay_triangles(pts);
    const auto edges = oracle::edges_of(tris);
    const std::size_t n = sites.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const bool want = i == j || edges.contains({std::min(i, j), std::max(i, j)});
        EXPECT_EQ(m.self_allowed(i, j), want) << set;
      }
    }
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const auto q = project_local(targets[t], ref);
      const std::array<std::size_t, 3>* hit = nullptr;
      for (const auto& tr : tris) {
        if (oracle::point_in_triangle(q, pts[tr[0]], pts[tr[1]], pts[tr[2]])) hit = &tr;
      }
      if (!hit) continue;  // outside the hull: nearest-triangle rule, checked only for non-emptiness
      std::vector<bool> want(n, false);
      for (std::size_t v : *hit) {
        want[v] = true;
        for (const auto& [a, b] : edges) {
          if (a == v) want[b] = true;
          if (b == v) want[a] = true;
        }
      }
      for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(m.cross_allowed(t, j), want[j]) << set << " target " << t;
    }
  }
}

TEST(Connectivity, CollinearFallsBackToFull) {
  std::vector<Site> s{{"a", {38, -100}}, {"b", {38.5, -100}}, {"c", {39, -100}}};
  std::vector<GeoPoint> t{{38.2, -99.9}};
  auto m = build_connectivity(s, t, Connectivity::parse("delaunay"));
  EXPECT_TRUE(m.fell_back_to_full);
  EXPECT_EQ(m.cross_mask, std::vector<std::uint8_t>(3, 1));
}

TEST(Connectivity, EmptyRowsRejected) {
  auto m = AttentionMask::full(2, 1);
  m.cross_mask = {0, 0};
  EXPECT_THROW(m.validate(), MaskRowEmpty);
  auto s = AttentionMask::full(2, 1);
  s.self_mask[0] = 0;
  EXPECT_THROW(s.validate(), MaskRowEmpty);
  EXPECT_THROW(build_connectivity({}, {}, Connectivity{}), MaskRowEmpty);
}
