#include "microweather/spherical_harmonics.hpp"

#include <cmath>
#include <numbers>

namespace mw {

std::vector<double> real_spherical_harmonics(double lat_deg, double lon_deg, std::size_t degree) {
  const double theta = (90.0 - lat_deg) * std::numbers::pi / 180.0;
  const double phi = lon_deg * std::numbers::pi / 180.0;
  const double x = std::cos(theta);
  const double sx = std::sin(theta);
  const std::size_t L = degree;

  // Fully normalized associated Legendre functions (without Condon-Shortley phase):
  // p[l][m] = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(x).
  std::vector<double> p((L + 1) * (L + 1), 0.0);
  auto P = [&](std::size_t l, std::size_t m) -> double& { return p[l * (L + 1) + m]; };
  P(0, 0) = 0.5 / std::sqrt(std::numbers::pi);
  for (std::size_t m = 1; m <= L; ++m) {
    const double md = static_cast<double>(m);
    P(m, m) = std::sqrt((2.0 * md + 1.0) / (2.0 * md)) * sx * P(m - 1, m - 1);
  }
  for (std::size_t m = 0; m < L; ++m) {
    P(m + 1, m) = std::sqrt(2.0 * static_cast<double>(m) + 3.0) * x * P(m, m);
  }
  for (std::size_t m = 0; m <= L; ++m) {
    for (std::size_t l = m + 2; l <= L; ++l) {
      const double ld = static_cast<double>(l);
      const double md = static_cast<double>(m);
      const double a = std::sqrt((4.0 * ld * ld - 1.0) / (ld * ld - md * md));
      const double b = std::sqrt(((ld - 1.0) * (ld - 1.0) - md * md) / (4.0 * (ld - 1.0) * (ld - 1.0) - 1.0));
      P(l, m) = a * (x * P(l - 1, m) - b * P(l - 2, m));
    }
  }

  std::vector<double> out(sh_basis_size(L));
  for (std::size_t l = 0; l <= L; ++l) {
    const std::size_t centre = l * l + l;
    out[centre] = P(l, 0);
    for (std::size_t m = 1; m <= l; ++m) {
      const double md = static_cast<double>(m);
      out[centre + m] = std::numbers::sqrt2 * P(l, m) * std::cos(md * phi);
      out[centre - m] = std::numbers::sqrt2 * P(l, m) * std::sin(md * phi);
    }
  }
  return out;
}

}  // namespace mw
