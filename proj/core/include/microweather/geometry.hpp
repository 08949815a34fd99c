#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace mw {

inline constexpr double kEarthRadiusKm = 6371.0;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

/// Haversine great-circle distance.
double great_circle_km(const GeoPoint& a, const GeoPoint& b) noexcept;

struct PlanarPoint {
  double x = 0.0;  // km east
  double y = 0.0;  // km north
};

/// Equirectangular projection about `ref`; adequate for regional extents.
PlanarPoint project_local(const GeoPoint& p, const GeoPoint& ref) noexcept;
/// Inverse of project_local.
GeoPoint unproject_local(const PlanarPoint& p, const GeoPoint& ref) noexcept;

/// Twice the signed area of (a, b, c); positive when counter-clockwise.
double orient2d(const PlanarPoint& a, const PlanarPoint& b, const PlanarPoint& c) noexcept;
/// Positive when d lies strictly inside the circumcircle of the counter-clockwise triangle (a, b, c).
double incircle(const PlanarPoint& a, const PlanarPoint& b, const PlanarPoint& c, const PlanarPoint& d) noexcept;

/// Planar Delaunay triangulation. Triangles are counter-clockwise vertex index triples.
class Triangulation {
 public:
  Triangulation(std::vector<PlanarPoint> points, std::vector<std::array<std::size_t, 3>> triangles);

  [[nodiscard]] const std::vector<PlanarPoint>& points() const noexcept { return points_; }
  [[nodiscard]] const std::vector<std::array<std::size_t, 3>>& triangles() const noexcept { return triangles_; }
  /// Sorted neighbour lists (Delaunay edges) per vertex.
  [[nodiscard]] const std::vector<std::vector<std::size_t>>& neighbors() const noexcept { return neighbors_; }
  [[nodiscard]] bool adjacent(std::size_t a, std::size_t b) const;

  /// Index of the triangle containing q, or of the nearest triangle when q is outside the hull.
  [[nodiscard]] std::size_t locate(const PlanarPoint& q) const;

 private:
  std::vector<PlanarPoint> points_;
  std::vector<std::array<std::size_t, 3>> triangles_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

/// Incremental Bowyer-Watson insertion with ghost triangles for the unbounded exterior.
/// Returns nullopt when the triangulation is undefined: fewer than 3 points, duplicate points,
/// or all points collinear.
std::optional<Triangulation> delaunay_triangulate(std::span<const PlanarPoint> points);

}  // namespace mw
