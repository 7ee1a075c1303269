#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "listflow/geometry.hpp"
#include "listflow/grid.hpp"
#include "listflow/state.hpp"

namespace listflow {

/// A-priori bound constants, all determined by the initial data.
struct BoundConstants {
  double C_z_plus = 0.0;         // |z| <= C_z_plus / sqrt(1 + t)
  double C_S_minus = 0.0;        // S >= C_S_minus / (1 + t)
  double C_f_minus = 0.0;        // f >= C_f_minus
  double C_f_plus = 0.0;         // f <= C_f_plus (1 + t)^p
  double p = 1.0;
  double C_lambda2_minus = 0.0;  // lambda2 >= -C_lambda2_minus / (1 + t)
  double C_zeta_plus = 0.0;      // |z| / r <= C_zeta_plus (a theorem for n = 2)

  bool initial_S_nonnegative = false;     // S(0, .) >= 0 is then preserved
  bool initial_mass_nonnegative = false;  // mu_BY(0, .) >= 0 is then preserved
};

/// z / r, with the odd-parity limit d1(z)(0) at the origin.
inline std::vector<double> zeta_profile(const FlowState& s) {
  require_valid(s);
  const RadialGrid& g = s.g();
  std::vector<double> out(s.size());
  out[0] = g.d1_origin(s.z, Parity::Odd);
  for (std::size_t i = 1; i < s.size(); ++i) out[i] = s.z[i] / g.r(i);
  return out;
}

/// z' = dz/dr.
inline std::vector<double> hessian_profile(const FlowState& s) {
  require_valid(s);
  return d1(s.z, Parity::Odd, s.g());
}

/// y = f lambda2 / (1 + f) - f lambda1 / 2, so that
/// lambda1 = 2 lambda2 / (1 + f) - (2 / f) y. y -> 0 at the origin.
inline std::vector<double> y_profile(const FlowState& s, const CurvatureProfile& c) {
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double fi = s.f[i];
    out[i] = fi * c.lambda2[i] / (1.0 + fi) - 0.5 * fi * c.lambda1[i];
  }
  return out;
}

inline std::vector<double> y_profile(const FlowState& s, const FlowParameters& p) {
  return y_profile(s, curvature(s, p));
}

inline BoundConstants compute_constants(const FlowState& initial,
                                        const FlowParameters& p) {
  const CurvatureProfile c = curvature(initial, p);
  const MassProfile m = masses(initial, p);
  const std::vector<double> zeta = zeta_profile(initial);
  const double k2 = p.k_n * p.k_n;
  const double n = static_cast<double>(p.n);

  double sup_z = 0.0, inf_S = std::numeric_limits<double>::infinity();
  double inf_f = std::numeric_limits<double>::infinity(), sup_f = 0.0;
  double inf_l2 = std::numeric_limits<double>::infinity(), sup_zeta = 0.0;
  double inf_mass = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < initial.size(); ++i) {
    sup_z = std::max(sup_z, std::abs(initial.z[i]));
    inf_S = std::min(inf_S, c.S[i]);
    inf_f = std::min(inf_f, initial.f[i]);
    sup_f = std::max(sup_f, initial.f[i]);
    inf_l2 = std::min(inf_l2, c.lambda2[i]);
    sup_zeta = std::max(sup_zeta, std::abs(zeta[i]));
    inf_mass = std::min(inf_mass, m.mu_BY[i]);
  }

  BoundConstants k;
  k.C_z_plus = std::max(1.0 / std::sqrt(2.0 * k2), sup_z);
  k.C_S_minus = std::min(-n / 2.0, inf_S);
  if (p.n == 2) {
    k.C_f_minus = std::min({1.0, p.f_infinity, inf_f});
  } else {
    k.C_f_minus = inf_f;
  }
  const double kc = p.k_n * k.C_z_plus;
  k.p = 1.0 + kc * kc;
  k.C_f_plus = std::max(std::sqrt(1.0 + kc * kc), sup_f);
  if (p.n == 2) k.C_f_plus = std::max(k.C_f_plus, p.f_infinity);
  k.C_lambda2_minus = -std::min(-1.0 / (n - 1.0), 2.0 * inf_l2);
  k.C_zeta_plus = 2.0 * sup_zeta;
  k.initial_S_nonnegative = inf_S >= 0.0;
  k.initial_mass_nonnegative =
      inf_mass >= 0.0 && (p.n > 2 || p.f_infinity >= 1.0);
  return k;
}

/// Snapshot diagnostics plus one signed margin per monitored bound; a
/// margin >= 0 means the bound holds.
struct DiagnosticsRecord {
  double t = 0.0;
  double tol = 0.0;

  double sup_z = 0.0;
  double sup_riem = 0.0;  // max |Riem| = sqrt(max riem_norm_sq)
  std::size_t sup_riem_node = 0;
  double min_f = 0.0, max_f = 0.0;
  double min_S = 0.0;
  double min_lambda2 = 0.0;
  double min_H_off_origin = 0.0;
  double max_zeta = 0.0;  // max |z| / r
  double max_abs_zprime = 0.0;
  double min_y = 0.0;
  double adm_estimate = 0.0;

  double m1 = 0.0;   // C_z+ / sqrt(1+t) - sup|z|
  double m2 = 0.0;   // min S - C_S- / (1+t)
  double m3a = 0.0;  // min f - C_f-
  double m3b = 0.0;  // C_f+ (1+t)^p - max f
  double m4 = 0.0;   // min lambda2 + C_lambda2- / (1+t)
  double m5 = 0.0;   // C_zeta+ (or the hypothesis F(t) for n >= 3) - max|z|/r
  double m6 = 0.0;   // min_{r>0} H; must stay positive
  std::optional<double> s_positivity;     // min S, when S(0) >= 0
  std::optional<double> mass_positivity;  // min_r (1 - 1/f), when mu_BY(0) >= 0

  bool zeta_is_theorem = false;  // m5 is a theorem only for n = 2

  /// Names of the theorem-backed bounds that fail by more than tol.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    const auto check = [&](const char* name, double margin) {
      if (!(margin >= -tol)) out.emplace_back(name);
    };
    check("m1", m1);
    check("m2", m2);
    check("m3a", m3a);
    check("m3b", m3b);
    check("m4", m4);
    if (zeta_is_theorem) check("m5", m5);
    if (!(m6 > 0.0)) out.emplace_back("m6");
    if (s_positivity) check("S>=0", *s_positivity);
    if (mass_positivity) check("mu_BY>=0", *mass_positivity);
    return out;
  }
};

/// Default discretization slack: 10 h^2 with h the largest grid spacing.
inline double default_tolerance(const RadialGrid& g) {
  return 10.0 * g.max_spacing() * g.max_spacing();
}

/// Hypothesis bound on |z| / r used for n >= 3; returns C_zeta_plus when
/// unset.
using ZetaHypothesis = std::function<double(double t)>;

inline DiagnosticsRecord audit(const FlowState& s, const BoundConstants& k,
                               const FlowParameters& p, double tol,
                               const ZetaHypothesis& hypothesis = {}) {
  const CurvatureProfile c = curvature(s, p);
  const MassProfile m = masses(s, p);
  const std::vector<double> zeta = zeta_profile(s);
  const std::vector<double> zprime = hessian_profile(s);
  const std::vector<double> y = y_profile(s, c);

  DiagnosticsRecord d;
  d.t = s.t;
  d.tol = tol;
  d.min_f = d.max_f = s.f[0];
  d.min_S = c.S[0];
  d.min_lambda2 = c.lambda2[0];
  d.min_y = y[0];
  d.min_H_off_origin = std::numeric_limits<double>::infinity();
  double max_riem_sq = -1.0;
  double min_mass = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    d.sup_z = std::max(d.sup_z, std::abs(s.z[i]));
    if (c.riem_norm_sq[i] > max_riem_sq) {
      max_riem_sq = c.riem_norm_sq[i];
      d.sup_riem_node = i;
    }
    d.min_f = std::min(d.min_f, s.f[i]);
    d.max_f = std::max(d.max_f, s.f[i]);
    d.min_S = std::min(d.min_S, c.S[i]);
    d.min_lambda2 = std::min(d.min_lambda2, c.lambda2[i]);
    d.max_zeta = std::max(d.max_zeta, std::abs(zeta[i]));
    d.max_abs_zprime = std::max(d.max_abs_zprime, std::abs(zprime[i]));
    d.min_y = std::min(d.min_y, y[i]);
    if (i > 0) {
      d.min_H_off_origin = std::min(d.min_H_off_origin, m.H[i]);
      min_mass = std::min(min_mass, (s.f[i] - 1.0) / s.f[i]);
    }
  }
  d.sup_riem = std::sqrt(max_riem_sq);
  d.adm_estimate = m.adm.value;

  const double tp1 = 1.0 + s.t;
  d.m1 = k.C_z_plus / std::sqrt(tp1) - d.sup_z;
  d.m2 = d.min_S - k.C_S_minus / tp1;
  d.m3a = d.min_f - k.C_f_minus;
  d.m3b = k.C_f_plus * std::pow(tp1, k.p) - d.max_f;
  d.m4 = d.min_lambda2 + k.C_lambda2_minus / tp1;
  d.zeta_is_theorem = p.n == 2;
  const double zeta_bound =
      (p.n == 2 || !hypothesis) ? k.C_zeta_plus : hypothesis(s.t);
  d.m5 = zeta_bound - d.max_zeta;
  d.m6 = d.min_H_off_origin;
  if (k.initial_S_nonnegative) d.s_positivity = d.min_S;
  if (k.initial_mass_nonnegative) d.mass_positivity = min_mass;
  return d;
}

}  // namespace listflow
