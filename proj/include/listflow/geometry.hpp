#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "listflow/errors.hpp"
#include "listflow/grid.hpp"
#include "listflow/state.hpp"

namespace listflow {

/// Nodal curvature of a rotationally symmetric metric f^2 dr^2 + r^2 dOmega^2.
///
/// lambda1 is the sectional curvature of planes containing d/dr, lambda2 of
/// planes tangent to the symmetry spheres (for n = 2 only lambda1 is a
/// curvature; lambda2 is still reported).
struct CurvatureProfile {
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::vector<double> R;
  std::vector<double> S;  // R - k^2 z^2
  std::vector<double> riem_norm_sq;
};

inline CurvatureProfile curvature(const FlowState& s, const FlowParameters& p) {
  require_valid(s);
  const RadialGrid& g = s.g();
  const std::size_t n = g.intervals();
  const double nm1 = static_cast<double>(p.n - 1);
  const double nm2 = static_cast<double>(p.n - 2);
  const double k2 = p.k_n * p.k_n;
  CurvatureProfile c;
  c.lambda1.resize(n + 1);
  c.lambda2.resize(n + 1);
  c.R.resize(n + 1);
  c.S.resize(n + 1);
  c.riem_norm_sq.resize(n + 1);

  // f = F(r^2) is even, so f'/r = 2 F'(s). Both lambdas tend to 2 F'(0).
  const double origin = 2.0 * g.ds_origin(s.f);
  c.lambda1[0] = origin;
  c.lambda2[0] = origin;
  for (std::size_t i = 1; i <= n; ++i) {
    const double r = g.r(i);
    const double fi = s.f[i];
    const double f3 = fi * fi * fi;
    c.lambda1[i] = i < n ? 2.0 * g.ds_at(s.f, i) / f3 : g.d1_outer(s.f) / (r * f3);
    c.lambda2[i] = (fi - 1.0) * (fi + 1.0) / (fi * fi * r * r);
  }
  for (std::size_t i = 0; i <= n; ++i) {
    const double l1 = c.lambda1[i];
    const double l2 = c.lambda2[i];
    c.R[i] = 2.0 * nm1 * l1 + nm1 * nm2 * l2;
    c.S[i] = c.R[i] - k2 * s.z[i] * s.z[i];
    c.riem_norm_sq[i] = 2.0 * nm1 * l1 * l1 + nm1 * nm2 * l2 * l2;
  }
  return c;
}

/// d(lambda2)/dr - (2/r)(lambda1 - lambda2) at interior nodes, zero at the
/// ends. The continuum quantity vanishes identically, so this measures
/// discretization error only.
inline std::vector<double> bianchi_residual(const FlowState& s,
                                            const FlowParameters& p) {
  const CurvatureProfile c = curvature(s, p);
  const RadialGrid& g = s.g();
  const std::size_t n = g.intervals();
  std::vector<double> res(n + 1, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    res[i] = g.d1_at(c.lambda2, i) - 2.0 / g.r(i) * (c.lambda1[i] - c.lambda2[i]);
  }
  return res;
}

/// Linear fit mu_BY = intercept + slope / r over the outer half of the grid.
struct AdmEstimate {
  double value = 0.0;  // intercept, the r -> infinity extrapolation
  double slope = 0.0;  // |slope| serves as the uncertainty proxy
  double max_residual = 0.0;
  std::size_t samples = 0;
};

/// Quasi-local masses of the r = const spheres. The n = 3 normalization
/// (8 pi) is used in every dimension.
struct MassProfile {
  std::vector<double> H;      // mean curvature; +inf at the origin node
  std::vector<double> mu_BY;  // Brown-York
  std::vector<double> mu_MS;  // Misner-Sharp
  AdmEstimate adm;
};

inline AdmEstimate fit_adm(const RadialGrid& g, const std::vector<double>& mu_by) {
  const double half = 0.5 * g.r_max();
  std::vector<double> x, y;
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (g.r(i) > half) {
      x.push_back(1.0 / g.r(i));
      y.push_back(mu_by[i]);
    }
  }
  if (x.size() < 8) {
    throw InsufficientTail("mass: ADM fit needs >= 8 tail nodes, have " +
                           std::to_string(x.size()));
  }
  const auto m = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  AdmEstimate est;
  est.samples = x.size();
  est.slope = sxy / sxx;
  est.value = my - est.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    est.max_residual = std::max(est.max_residual,
                                std::abs(y[i] - (est.value + est.slope * x[i])));
  }
  return est;
}

inline MassProfile masses(const FlowState& s, const FlowParameters& p) {
  require_valid(s);
  const RadialGrid& g = s.g();
  const std::size_t n = g.intervals();
  const double nm1 = static_cast<double>(p.n - 1);
  constexpr double kEightPi = 8.0 * std::numbers::pi;
  MassProfile m;
  m.H.resize(n + 1);
  m.mu_BY.resize(n + 1);
  m.mu_MS.resize(n + 1);
  m.H[0] = std::numeric_limits<double>::infinity();
  m.mu_BY[0] = 0.0;
  m.mu_MS[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    const double r = g.r(i);
    const double fi = s.f[i];
    m.H[i] = nm1 / (r * fi);
    // 1 - 1/f and 1 - 1/f^2 written without cancellation near f = 1.
    m.mu_BY[i] = kEightPi / r * ((fi - 1.0) / fi);
    m.mu_MS[i] = kEightPi / r * ((fi - 1.0) * (fi + 1.0) / (fi * fi));
  }
  m.adm = fit_adm(g, m.mu_BY);
  return m;
}

/// Radial derivative of the DeTurck potential, (1/f) f' + ((n-2)/r)(f^2 - 1).
inline std::vector<double> deturck_gradient(const FlowState& s,
                                            const FlowParameters& p) {
  require_valid(s);
  const RadialGrid& g = s.g();
  const std::size_t n = g.intervals();
  const double nm2 = static_cast<double>(p.n - 2);
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    const double fi = s.f[i];
    const double fr = i < n ? g.d1_at(s.f, i) : g.d1_outer(s.f);
    out[i] = fr / fi + nm2 / g.r(i) * ((fi - 1.0) * (fi + 1.0));
  }
  return out;
}

}  // namespace listflow
