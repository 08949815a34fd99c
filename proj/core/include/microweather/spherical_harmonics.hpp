#pragma once

#include <cstddef>
#include <vector>

namespace mw {

/// Number of real spherical harmonics with degree <= `degree`.
constexpr std::size_t sh_basis_size(std::size_t degree) noexcept { return (degree + 1) * (degree + 1); }

/// Orthonormal real spherical harmonics Y_l^m, l = 0..degree, m = -l..l (index l*l + l + m),
/// evaluated at colatitude 90 - lat and azimuth lon.
std::vector<double> real_spherical_harmonics(double lat_deg, double lon_deg, std::size_t degree);

}  // namespace mw
