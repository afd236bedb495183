#pragma once

// Local density approximation: Slater exchange and the Perdew-Zunger
// correlation parametrization in the Wigner-Seitz radius r_s.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace opflow::lda {

inline constexpr double kDensityFloor = 1e-12;

struct XcPoint {
  double energy_density; // epsilon(rho)
  double potential;      // d(rho epsilon)/d rho
};

inline double clamp_density(double rho) { return std::max(rho, kDensityFloor); }

/// epsilon_x = -(3/4)(3/pi)^{1/3} rho^{1/3}, v_x = (4/3) epsilon_x.
inline XcPoint exchange(double rho) {
  const double r = clamp_density(rho);
  const double cx = 0.75 * std::cbrt(3.0 / std::numbers::pi);
  const double eps = -cx * std::cbrt(r);
  return {eps, 4.0 / 3.0 * eps};
}

inline double wigner_seitz_radius(double rho) {
  return std::cbrt(3.0 / (4.0 * std::numbers::pi * clamp_density(rho)));
}

namespace pz81 {
inline constexpr double gamma = -0.1423;
inline constexpr double beta1 = 1.0529;
inline constexpr double beta2 = 0.3334;
inline constexpr double A = 0.0311;
inline constexpr double B = -0.048;
inline constexpr double C = 0.0020;
inline constexpr double D = -0.0116;

/// r_s >= 1 branch: value and d/dr_s.
inline std::pair<double, double> low_density(double rs) {
  const double sq = std::sqrt(rs);
  const double den = 1.0 + beta1 * sq + beta2 * rs;
  const double eps = gamma / den;
  const double deps = -gamma * (0.5 * beta1 / sq + beta2) / (den * den);
  return {eps, deps};
}

/// r_s < 1 branch: value and d/dr_s.
inline std::pair<double, double> high_density(double rs) {
  const double lr = std::log(rs);
  const double eps = A * lr + B + C * rs * lr + D * rs;
  const double deps = A / rs + C * (lr + 1.0) + D;
  return {eps, deps};
}
} // namespace pz81

/// Correlation energy density and potential. The branch is chosen on r_s;
/// v_c = eps_c - (r_s/3) d eps_c / d r_s.
inline XcPoint correlation(double rho) {
  const double rs = wigner_seitz_radius(rho);
  const auto [eps, deps] =
      rs >= 1.0 ? pz81::low_density(rs) : pz81::high_density(rs);
  return {eps, eps - rs / 3.0 * deps};
}

} // namespace opflow::lda
