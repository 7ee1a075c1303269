#include <algorithm>
#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "listflow/dynamics.hpp"
#include "listflow/monitors.hpp"
#include "support/oracles.hpp"

using namespace listflow;

namespace {

std::shared_ptr<const RadialGrid> grid(double r_max, std::size_t n) {
  return std::make_shared<const RadialGrid>(build_grid(r_max, n));
}

FlowParameters two_dim(double f_inf) {
  FlowParameters p;
  p.n = 2;
  p.k_n = 1.0;
  p.f_infinity = f_inf;
  return p;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

TEST(Constants, FlatThreeDimensional) {
  FlowParameters p;
  const auto k = compute_constants(make_initial_data({}, p, grid(20, 200)), p);
  // k^2 = 2: C_z = 1/sqrt(2 k^2) = 1/2, p = 1 + k^2 / 4 = 3/2.
  EXPECT_DOUBLE_EQ(k.C_z_plus, 0.5);
  EXPECT_DOUBLE_EQ(k.C_S_minus, -1.5);
  EXPECT_DOUBLE_EQ(k.C_f_minus, 1.0);
  EXPECT_DOUBLE_EQ(k.p, 1.5);
  EXPECT_DOUBLE_EQ(k.C_f_plus, std::sqrt(1.5));
  EXPECT_DOUBLE_EQ(k.C_lambda2_minus, 0.5);
  EXPECT_DOUBLE_EQ(k.C_zeta_plus, 0.0);
  EXPECT_TRUE(k.initial_S_nonnegative);
  EXPECT_TRUE(k.initial_mass_nonnegative);
}

TEST(Constants, FieldBumpBelowTheFloor) {
  FlowParameters p;
  InitialDataSpec spec;
  spec.kind = InitialDataKind::FieldBump;
  spec.field_amplitude = 1.0;
  const auto s = make_initial_data(spec, p, grid(20, 400));
  const auto k = compute_constants(s, p);
  // sup z = e^{-1/2} / sqrt(2) < 1/2.
  EXPECT_DOUBLE_EQ(k.C_z_plus, 0.5);
  EXPECT_DOUBLE_EQ(k.C_S_minus, -1.5);
  EXPECT_FALSE(k.initial_S_nonnegative);
  // The odd-parity origin slope is z(h) / h = exp(-h^2), also the maximum.
  const double h = 0.05;
  EXPECT_NEAR(k.C_zeta_plus, 2 * std::exp(-h * h), 1e-12);
}

TEST(Constants, LargeFieldRaisesZBound) {
  FlowParameters p;
  InitialDataSpec spec;
  spec.kind = InitialDataKind::FieldBump;
  spec.field_amplitude = 3.0;
  const auto s = make_initial_data(spec, p, grid(20, 400));
  const double sup = *std::max_element(s.z.begin(), s.z.end());
  const auto k = compute_constants(s, p);
  EXPECT_EQ(k.C_z_plus, sup);
  EXPECT_DOUBLE_EQ(k.p, 1 + 2 * sup * sup);
  EXPECT_DOUBLE_EQ(k.C_f_plus, std::sqrt(1 + 2 * sup * sup));
}

TEST(Constants, TwoDimensionalCone) {
  {
    const auto p = two_dim(0.8);
    const auto k = compute_constants(make_initial_data({}, p, grid(40, 400)), p);
    EXPECT_DOUBLE_EQ(k.C_f_minus, 0.8);
    // inf lambda2 = -0.36 at the origin; -1/(n-1) = -1 is lower.
    EXPECT_DOUBLE_EQ(k.C_lambda2_minus, 1.0);
    EXPECT_FALSE(k.initial_mass_nonnegative);
  }
  {
    const auto p = two_dim(2.0);
    const auto k = compute_constants(make_initial_data({}, p, grid(40, 400)), p);
    EXPECT_DOUBLE_EQ(k.C_f_minus, 1.0);
    EXPECT_DOUBLE_EQ(k.C_z_plus, 1 / std::sqrt(2.0));
    EXPECT_DOUBLE_EQ(k.C_f_plus, 2.0);
  }
}

TEST(Audit, FlatMarginsAreTheConstants) {
  FlowParameters p;
  auto s = make_initial_data({}, p, grid(20, 200));
  const auto k = compute_constants(s, p);
  for (double t : {0.0, 3.0}) {
    s.t = t;
    const auto d = audit(s, k, p, default_tolerance(s.g()));
    EXPECT_DOUBLE_EQ(d.m1, 0.5 / std::sqrt(1 + t));
    EXPECT_DOUBLE_EQ(d.m2, 1.5 / (1 + t));
    EXPECT_EQ(d.m3a, 0.0);
    EXPECT_DOUBLE_EQ(d.m3b, std::sqrt(1.5) * std::pow(1 + t, 1.5) - 1);
    EXPECT_DOUBLE_EQ(d.m4, 0.5 / (1 + t));
    EXPECT_EQ(d.m5, 0.0);
    EXPECT_NEAR(d.m6, 2 / 20.0, 1e-15);
    EXPECT_EQ(d.sup_riem, 0.0);
    EXPECT_TRUE(d.violations().empty());
    EXPECT_NEAR(d.tol, 10 * 0.01, 1e-12);
  }
}

TEST(Audit, InjectedFaultIsFlagged) {
  FlowParameters p;
  auto s = make_initial_data({}, p, grid(20, 200));
  const auto k = compute_constants(s, p);
  s.f[50] = 0.5 * k.C_f_minus;
  const auto d = audit(s, k, p, default_tolerance(s.g()));
  EXPECT_DOUBLE_EQ(d.m3a, -0.5);
  EXPECT_TRUE(contains(d.violations(), "m3a"));
  EXPECT_TRUE(contains(d.violations(), "mu_BY>=0"));
}

TEST(Audit, ZetaBoundIsTheoremOnlyInTwoDimensions) {
  FlowParameters p;
  auto s = make_initial_data({}, p, grid(20, 200));
  const auto k = compute_constants(s, p);
  for (std::size_t i = 1; i < s.size(); ++i) s.z[i] = 1e-3 * s.g().r(i) * std::exp(-s.g().r(i));
  const auto d3 = audit(s, k, p, 0.0);
  EXPECT_LT(d3.m5, 0.0);
  EXPECT_FALSE(contains(d3.violations(), "m5"));
  const auto hyp = audit(s, k, p, 0.0, [](double) { return 1.0; });
  EXPECT_GT(hyp.m5, 0.0);

  const auto p2 = two_dim(1.0);
  const auto k2 = compute_constants(make_initial_data({}, p2, s.grid), p2);
  const auto d2 = audit(s, k2, p2, 0.0);
  EXPECT_TRUE(d2.zeta_is_theorem);
  EXPECT_TRUE(contains(d2.violations(), "m5"));
}

TEST(Profiles, ZetaOfGaussianField) {
  FlowParameters p;
  auto s = make_initial_data({}, p, grid(4, 400));
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double r = s.g().r(i);
    s.z[i] = r * std::exp(-r * r);
  }
  const auto zeta = zeta_profile(s);
  EXPECT_NEAR(zeta[0], 1.0, 1e-3);
  for (std::size_t i = 1; i < s.size(); ++i) {
    const double r = s.g().r(i);
    EXPECT_NEAR(zeta[i], std::exp(-r * r), 1e-15);
  }
  const auto zp = hessian_profile(s);
  for (std::size_t i = 1; i < s.g().intervals(); ++i) {
    const double r = s.g().r(i);
    EXPECT_NEAR(zp[i], (1 - 2 * r * r) * std::exp(-r * r), 1e-3);
  }
}

TEST(Profiles, YOnSphereCap) {
  const double rho = 2.0;
  auto g = grid(1.5, 400);
  FlowState s;
  s.grid = g;
  for (double r : g->nodes()) {
    s.f.push_back(oracle::sphere_cap(r, rho));
    s.z.push_back(0.0);
  }
  const auto y = y_profile(s, FlowParameters{});
  EXPECT_EQ(y[0], 0.0);
  for (std::size_t i = 1; i < s.g().intervals(); ++i) {
    const double f = s.f[i];
    const double lam = 1 / (rho * rho);
    EXPECT_NEAR(y[i], f * lam * (1 - f) / (2 * (1 + f)), 1e-5);
  }
}

TEST(Profiles, FlatIsZero) {
  FlowParameters p;
  const auto s = make_initial_data({}, p, grid(10, 100));
  for (double v : y_profile(s, p)) EXPECT_EQ(v, 0.0);
  for (double v : zeta_profile(s)) EXPECT_EQ(v, 0.0);
  for (double v : hessian_profile(s)) EXPECT_EQ(v, 0.0);
}

TEST(Audit, FieldBumpRespectsDecayAlongTheFlow) {
  FlowParameters p;
  p.t_end = 5.0;
  p.output_interval = 0.25;
  InitialDataSpec spec;
  spec.kind = InitialDataKind::FieldBump;
  spec.field_amplitude = 1.0;
  const auto s0 = make_initial_data(spec, p, grid(20, 200));
  const auto k = compute_constants(s0, p);
  const double tol = default_tolerance(s0.g());
  std::size_t audits = 0;
  Observers obs;
  obs.on_output.push_back([&](const FlowState& s, const StepInfo&) {
    const auto d = audit(s, k, p, tol);
    EXPECT_GE(d.m1, -tol) << "t = " << s.t;
    EXPECT_GE(d.m3a, -tol) << "t = " << s.t;
    EXPECT_GE(d.m3b, -tol) << "t = " << s.t;
    EXPECT_GT(d.m6, 0.0) << "t = " << s.t;
    ++audits;
    return ObserverAction::Continue;
  });
  const auto sum = evolve(s0, p, obs);
  EXPECT_EQ(sum.reason, Termination::Completed);
  EXPECT_GE(audits, 21u);
}
