#include "microweather/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <utility>

namespace mw {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr std::size_t kGhost = std::numeric_limits<std::size_t>::max();

double segment_distance_sq(const PlanarPoint& p, const PlanarPoint& a, const PlanarPoint& b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = a.x + t * vx - p.x;
  const double dy = a.y + t * vy - p.y;
  return dx * dx + dy * dy;
}

}  // namespace

double great_circle_km(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  h = std::clamp(h, 0.0, 1.0);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

PlanarPoint project_local(const GeoPoint& p, const GeoPoint& ref) noexcept {
  return {kEarthRadiusKm * (p.lon - ref.lon) * kDegToRad * std::cos(ref.lat * kDegToRad),
          kEarthRadiusKm * (p.lat - ref.lat) * kDegToRad};
}

GeoPoint unproject_local(const PlanarPoint& p, const GeoPoint& ref) noexcept {
  return {ref.lat + p.y / kEarthRadiusKm / kDegToRad,
          ref.lon + p.x / (kEarthRadiusKm * std::cos(ref.lat * kDegToRad)) / kDegToRad};
}

double orient2d(const PlanarPoint& a, const PlanarPoint& b, const PlanarPoint& c) noexcept {
  const long double acx = static_cast<long double>(a.x) - c.x;
  const long double bcx = static_cast<long double>(b.x) - c.x;
  const long double acy = static_cast<long double>(a.y) - c.y;
  const long double bcy = static_cast<long double>(b.y) - c.y;
  return static_cast<double>(acx * bcy - acy * bcx);
}

double incircle(const PlanarPoint& a, const PlanarPoint& b, const PlanarPoint& c, const PlanarPoint& d) noexcept {
  const long double adx = static_cast<long double>(a.x) - d.x;
  const long double ady = static_cast<long double>(a.y) - d.y;
  const long double bdx = static_cast<long double>(b.x) - d.x;
  const long double bdy = static_cast<long double>(b.y) - d.y;
  const long double cdx = static_cast<long double>(c.x) - d.x;
  const long double cdy = static_cast<long double>(c.y) - d.y;
  const long double alift = adx * adx + ady * ady;
  const long double blift = bdx * bdx + bdy * bdy;
  const long double clift = cdx * cdx + cdy * cdy;
  return static_cast<double>(alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
                             clift * (adx * bdy - bdx * ady));
}

Triangulation::Triangulation(std::vector<PlanarPoint> points, std::vector<std::array<std::size_t, 3>> triangles)
    : points_(std::move(points)), triangles_(std::move(triangles)), neighbors_(points_.size()) {
  for (const auto& t : triangles_) {
    for (int e = 0; e < 3; ++e) {
      const std::size_t a = t[e];
      const std::size_t b = t[(e + 1) % 3];
      neighbors_[a].push_back(b);
      neighbors_[b].push_back(a);
    }
  }
  for (auto& n : neighbors_) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
}

bool Triangulation::adjacent(std::size_t a, std::size_t b) const {
  const auto& n = neighbors_.at(a);
  return std::binary_search(n.begin(), n.end(), b);
}

std::size_t Triangulation::locate(const PlanarPoint& q) const {
  for (std::size_t i = 0; i < triangles_.size(); ++i) {
    const auto& t = triangles_[i];
    if (orient2d(points_[t[0]], points_[t[1]], q) >= 0.0 && orient2d(points_[t[1]], points_[t[2]], q) >= 0.0 &&
        orient2d(points_[t[2]], points_[t[0]], q) >= 0.0) {
      return i;
    }
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < triangles_.size(); ++i) {
    const auto& t = triangles_[i];
    for (int e = 0; e < 3; ++e) {
      const double d = segment_distance_sq(q, points_[t[e]], points_[t[(e + 1) % 3]]);
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
  }
  return best;
}

std::optional<Triangulation> delaunay_triangulate(std::span<const PlanarPoint> points) {
  const std::size_t n = points.size();
  if (n < 3) return std::nullopt;
  {
    std::set<std::pair<double, double>> seen;
    for (const auto& p : points) {
      if (!seen.emplace(p.x, p.y).second) return std::nullopt;
    }
  }
  // Seed triangle: first point, second point, first point not collinear with them.
  std::size_t ia = 0;
  std::size_t ib = 1;
  std::size_t ic = kGhost;
  for (std::size_t k = 2; k < n; ++k) {
    if (orient2d(points[ia], points[ib], points[k]) != 0.0) {
      ic = k;
      break;
    }
  }
  if (ic == kGhost) return std::nullopt;
  if (orient2d(points[ia], points[ib], points[ic]) < 0.0) std::swap(ib, ic);

  struct Tri {
    std::array<std::size_t, 3> v;
    bool alive = true;
  };
  // Ghost triangles keep the ghost vertex last; (a, b, ghost) stands for the open half-plane to
  // the left of a->b, i.e. outside hull edge b->a.
  std::vector<Tri> tris;
  tris.push_back({{ia, ib, ic}});
  tris.push_back({{ib, ia, kGhost}});
  tris.push_back({{ic, ib, kGhost}});
  tris.push_back({{ia, ic, kGhost}});

  auto conflicts = [&](const Tri& t, const PlanarPoint& p) {
    if (t.v[2] != kGhost) {
      return incircle(points[t.v[0]], points[t.v[1]], points[t.v[2]], p) > 0.0;
    }
    const PlanarPoint& a = points[t.v[0]];
    const PlanarPoint& b = points[t.v[1]];
    const double o = orient2d(a, b, p);
    if (o > 0.0) return true;
    if (o < 0.0) return false;
    // Collinear with the hull edge: conflict only strictly inside the segment.
    const double dot = (p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y);
    const double len2 = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
    return dot > 0.0 && dot < len2;
  };

  for (std::size_t k = 0; k < n; ++k) {
    if (k == ia || k == ib || k == ic) continue;
    const PlanarPoint& p = points[k];
    std::map<std::pair<std::size_t, std::size_t>, int> edges;
    std::vector<std::size_t> cavity;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      if (tris[t].alive && conflicts(tris[t], p)) cavity.push_back(t);
    }
    if (cavity.empty()) return std::nullopt;  // numerically degenerate input
    for (std::size_t t : cavity) {
      tris[t].alive = false;
      for (int e = 0; e < 3; ++e) edges[{tris[t].v[e], tris[t].v[(e + 1) % 3]}] += 1;
    }
    for (const auto& [edge, count] : edges) {
      const auto [u, v] = edge;
      if (edges.contains({v, u})) continue;  // interior edge of the cavity
      if (v == kGhost) {
        tris.push_back({{k, u, kGhost}});
      } else if (u == kGhost) {
        tris.push_back({{v, k, kGhost}});
      } else {
        tris.push_back({{u, v, k}});
      }
    }
    // Compact occasionally to keep the scan linear in live triangles.
    if (tris.size() > 8 * n + 16) {
      std::erase_if(tris, [](const Tri& t) { return !t.alive; });
    }
  }

  std::vector<std::array<std::size_t, 3>> real;
  for (const auto& t : tris) {
    if (t.alive && t.v[2] != kGhost) real.push_back(t.v);
  }
  if (real.empty()) return std::nullopt;
  return Triangulation(std::vector<PlanarPoint>(points.begin(), points.end()), std::move(real));
}

}  // namespace mw
