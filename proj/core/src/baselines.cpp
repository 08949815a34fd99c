#include "microweather/baselines.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "microweather/errors.hpp"

namespace mw {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

}  // namespace

std::vector<double> rbf_interpolate_planar(std::span<const PlanarPoint> sites, std::span<const double> values,
                                           std::span<const PlanarPoint> queries) {
  const std::size_t n = sites.size();
  if (values.size() != n) throw DimensionMismatch("one value per RBF site required");
  if (n < 2) throw InsufficientStations("RBF interpolation needs at least 2 stations, got " + std::to_string(n));

  double cx = 0.0;
  double cy = 0.0;
  for (const auto& p : sites) {
    cx += p.x;
    cy += p.y;
  }
  cx /= static_cast<double>(n);
  cy /= static_cast<double>(n);
  MatrixXd centered(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    centered(static_cast<Eigen::Index>(i), 0) = sites[i].x - cx;
    centered(static_cast<Eigen::Index>(i), 1) = sites[i].y - cy;
  }
  // tail directions spanned by the sites
  Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeFullV);
  const auto sv = svd.singularValues();
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    if (sv(k) > 1e-9 * std::max(sv(0), 1e-300)) ++rank;
  }
  const MatrixXd dirs = svd.matrixV().leftCols(static_cast<Eigen::Index>(rank));
  const std::size_t m = 1 + rank;

  auto tail_row = [&](double x, double y, Eigen::Index cols) {
    VectorXd r(cols);
    r(0) = 1.0;
    for (std::size_t k = 0; k < rank; ++k) {
      r(static_cast<Eigen::Index>(k + 1)) = (x - cx) * dirs(0, static_cast<Eigen::Index>(k)) +
                                             (y - cy) * dirs(1, static_cast<Eigen::Index>(k));
    }
    return r;
  };

  const auto N = static_cast<Eigen::Index>(n);
  const auto M = static_cast<Eigen::Index>(m);
  MatrixXd a = MatrixXd::Zero(N + M, N + M);
  double abs_sum = 0.0;
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < N; ++j) {
      const double r = std::hypot(sites[static_cast<std::size_t>(i)].x - sites[static_cast<std::size_t>(j)].x,
                                  sites[static_cast<std::size_t>(i)].y - sites[static_cast<std::size_t>(j)].y);
      a(i, j) = r;
      abs_sum += r;
    }
    const VectorXd p = tail_row(sites[static_cast<std::size_t>(i)].x, sites[static_cast<std::size_t>(i)].y, M);
    a.block(i, N, 1, M) = p.transpose();
    a.block(N, i, M, 1) = p;
  }
  VectorXd rhs = VectorXd::Zero(N + M);
  for (Eigen::Index i = 0; i < N; ++i) rhs(i) = values[static_cast<std::size_t>(i)];

  Eigen::FullPivLU<MatrixXd> lu(a);
  if (!lu.isInvertible()) {
    // phi(0) = 0 leaves the trace at zero, so the jitter scales with the mean kernel entry instead
    const double jitter = 1e-10 * std::max(abs_sum / static_cast<double>(n * n), 1.0);
    for (Eigen::Index i = 0; i < N; ++i) a(i, i) += jitter;
    lu.compute(a);
    if (!lu.isInvertible()) throw SingularSystem("RBF system is singular after jitter");
  }
  const VectorXd coef = lu.solve(rhs);
  if (!coef.allFinite()) throw SingularSystem("RBF solve produced non-finite coefficients");

  std::vector<double> out(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      v += coef(static_cast<Eigen::Index>(i)) * std::hypot(queries[q].x - sites[i].x, queries[q].y - sites[i].y);
    }
    const VectorXd p = tail_row(queries[q].x, queries[q].y, M);
    v += p.dot(coef.tail(M));
    out[q] = v;
  }
  return out;
}

std::vector<double> rbf_interpolate(std::span<const GeoPoint> sites, std::span<const double> values,
                                    std::span<const GeoPoint> queries) {
  GeoPoint ref{0.0, 0.0};
  for (const auto& s : sites) {
    ref.lat += s.lat;
    ref.lon += s.lon;
  }
  if (!sites.empty()) {
    ref.lat /= static_cast<double>(sites.size());
    ref.lon /= static_cast<double>(sites.size());
  }
  std::vector<PlanarPoint> ps;
  std::vector<PlanarPoint> qs;
  ps.reserve(sites.size());
  qs.reserve(queries.size());
  for (const auto& s : sites) ps.push_back(project_local(s, ref));
  for (const auto& q : queries) qs.push_back(project_local(q, ref));
  return rbf_interpolate_planar(ps, values, qs);
}

WeatherVector era5_baseline(const CoarseField& coarse, const GeoPoint& query, Timestamp t) {
  return sample_coarse(coarse, query.lat, query.lon, t);
}

}  // namespace mw
