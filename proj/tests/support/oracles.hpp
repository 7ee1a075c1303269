#pragma once

// Closed-form reference solutions and brute-force scans used as independent
// oracles. Nothing here calls into the library's numerics.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

// g(r) = r^2 / (1 + r^2)^{3/2} and its first two derivatives.
inline double bump(double r) { return r * r * std::pow(1 + r * r, -1.5); }
inline double bump_d1(double r) { return r * (2 - r * r) * std::pow(1 + r * r, -2.5); }
inline double bump_d2(double r) {
  return (2 - 11 * r * r + 2 * std::pow(r, 4)) * std::pow(1 + r * r, -3.5);
}

// Right sides of the flow equations evaluated pointwise from exact values and
// derivatives, in the original radial form.
inline double rhs_f(int n, double k, double r, double f, double fr, double frr, double z) {
  return frr / (f * f) - 2 * fr * fr / (f * f * f) + ((n - 2) / r - 1 / (r * f * f)) * fr -
         (n - 2) * (f * f - 1) / (r * r * f) + k * k * f * z * z;
}
inline double rhs_z(int n, double k, double r, double f, double z, double zr, double zrr) {
  return zrr / (f * f) + (1 / (r * f * f) + (n - 2) / r) * zr -
         ((n - 1) / (r * r * f * f) + k * k * z * z) * z;
}

// z = du/dr for the 3-d radial heat kernel u = A (t + t0)^{-3/2} exp(-r^2 / 4(t + t0)).
inline double heat_z(double r, double t, double amplitude, double t0) {
  const double s = t + t0;
  return amplitude * (-r / 2) * std::pow(s, -2.5) * std::exp(-r * r / (4 * s));
}

// Round sphere of radius rho in area-radius gauge: f = 1 / sqrt(1 - r^2 / rho^2).
inline double sphere_cap(double r, double rho) { return 1 / std::sqrt(1 - r * r / (rho * rho)); }

// Schwarzschild slice f = (1 - 2m/r)^{-1/2} and its Brown-York mass (8 pi / r)(1 - 1/f).
inline double schwarzschild(double r, double m) { return 1 / std::sqrt(1 - 2 * m / r); }
inline double schwarzschild_mu_by(double r, double m) {
  return 8 * kPi / r * (1 - std::sqrt(1 - 2 * m / r));
}

// Intercept of the least-squares line y ~ a + b / r over r in [lo, hi]
// (continuous, uniform weight in r), by adaptive quadrature.
inline double ls_intercept(const std::function<double(double)>& y, double lo, double hi) {
  using Q = boost::math::quadrature::gauss_kronrod<double, 61>;
  const auto I = [&](auto g) { return Q::integrate(g, lo, hi, 10, 1e-14); };
  const double s0 = hi - lo;
  const double s1 = I([](double r) { return 1 / r; });
  const double s2 = I([](double r) { return 1 / (r * r); });
  const double t0 = I([&](double r) { return y(r); });
  const double t1 = I([&](double r) { return y(r) / r; });
  return (t0 * s2 - t1 * s1) / (s0 * s2 - s1 * s1);
}

// Indices k with max_{j <= k} h_j <= C h_k and h_k > 0, by direct O(n^2)
// evaluation of the definition.
inline std::vector<std::size_t> blowup_scan(const std::vector<double>& h, double C) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < h.size(); ++k) {
    bool ok = h[k] > 0;
    for (std::size_t j = 0; j <= k && ok; ++j) ok = h[j] <= C * h[k];
    if (ok) out.push_back(k);
  }
  return out;
}

inline double order(double coarse_err, double fine_err) { return std::log2(coarse_err / fine_err); }

}  // namespace oracle
