#include "microweather/connectivity.hpp"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

#include "microweather/errors.hpp"

namespace mw {

AttentionMask AttentionMask::full(std::size_t n_backbone, std::size_t n_targets) {
  AttentionMask m;
  m.n_backbone = n_backbone;
  m.n_targets = n_targets;
  m.self_mask.assign(n_backbone * n_backbone, 1);
  m.cross_mask.assign(n_targets * n_backbone, 1);
  return m;
}

void AttentionMask::validate() const {
  if (self_mask.size() != n_backbone * n_backbone || cross_mask.size() != n_targets * n_backbone) {
    throw MaskRowEmpty("attention mask has inconsistent dimensions");
  }
  for (std::size_t i = 0; i < n_backbone; ++i) {
    if (!self_allowed(i, i)) throw MaskRowEmpty("self mask row " + std::to_string(i) + " lacks its diagonal");
  }
  for (std::size_t t = 0; t < n_targets; ++t) {
    bool any = false;
    for (std::size_t j = 0; j < n_backbone && !any; ++j) any = cross_allowed(t, j);
    if (!any) throw MaskRowEmpty("cross mask row " + std::to_string(t) + " has no allowed station");
  }
}

namespace {

GeoPoint centroid(std::span<const Site> sites) {
  GeoPoint c;
  for (const auto& s : sites) {
    c.lat += s.position.lat;
    c.lon += s.position.lon;
  }
  c.lat /= static_cast<double>(sites.size());
  c.lon /= static_cast<double>(sites.size());
  return c;
}

void build_delaunay(std::span<const Site> backbone, std::span<const GeoPoint> targets, AttentionMask& m) {
  const GeoPoint ref = centroid(backbone);
  std::vector<PlanarPoint> pts;
  pts.reserve(backbone.size());
  for (const auto& s : backbone) pts.push_back(project_local(s.position, ref));
  auto tri = delaunay_triangulate(pts);
  if (!tri) {
    spdlog::warn("Delaunay connectivity undefined for {} backbone stations (collinear or duplicate); using full",
                 backbone.size());
    m.fell_back_to_full = true;
    return;
  }
  const std::size_t nb = backbone.size();
  std::fill(m.self_mask.begin(), m.self_mask.end(), 0);
  for (std::size_t i = 0; i < nb; ++i) {
    m.self_mask[i * nb + i] = 1;
    for (std::size_t j : tri->neighbors()[i]) m.self_mask[i * nb + j] = 1;
  }
  std::fill(m.cross_mask.begin(), m.cross_mask.end(), 0);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto& corners = tri->triangles()[tri->locate(project_local(targets[t], ref))];
    std::uint8_t* row = m.cross_mask.data() + t * nb;
    for (std::size_t v : corners) {
      row[v] = 1;
      for (std::size_t j : tri->neighbors()[v]) row[j] = 1;
    }
  }
}

void build_knearest(std::span<const Site> backbone, std::span<const GeoPoint> targets, std::size_t k,
                    AttentionMask& m) {
  const std::size_t nb = backbone.size();
  const std::size_t keep = std::min(k, nb);
  std::fill(m.cross_mask.begin(), m.cross_mask.end(), 0);
  std::vector<std::size_t> order(nb);
  std::vector<double> dist(nb);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    for (std::size_t j = 0; j < nb; ++j) dist[j] = great_circle_km(targets[t], backbone[j].position);
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (dist[a] != dist[b]) return dist[a] < dist[b];
                        return backbone[a].id < backbone[b].id;
                      });
    for (std::size_t r = 0; r < keep; ++r) m.cross_mask[t * nb + order[r]] = 1;
  }
}

}  // namespace

AttentionMask build_connectivity(std::span<const Site> backbone, std::span<const GeoPoint> targets,
                                 const Connectivity& connectivity) {
  if (backbone.empty()) throw MaskRowEmpty("connectivity needs at least one backbone station");
  AttentionMask m = AttentionMask::full(backbone.size(), targets.size());
  switch (connectivity.mode) {
    case ConnectivityMode::Full:
      break;
    case ConnectivityMode::Delaunay:
      build_delaunay(backbone, targets, m);
      break;
    case ConnectivityMode::KNearest:
      build_knearest(backbone, targets, connectivity.k, m);
      break;
  }
  return m;
}

}  // namespace mw
