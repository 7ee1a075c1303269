#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include <gtest/gtest.h>

#include "listflow/geometry.hpp"
#include "listflow/state.hpp"
#include "support/oracles.hpp"

using namespace listflow;

namespace {

std::shared_ptr<const RadialGrid> grid(double r_max, std::size_t n) {
  return std::make_shared<const RadialGrid>(build_grid(r_max, n));
}

FlowState custom(std::shared_ptr<const RadialGrid> g, double (*f)(double),
                 double (*z)(double)) {
  FlowState s;
  s.grid = g;
  for (double r : g->nodes()) {
    s.f.push_back(f(r));
    s.z.push_back(z(r));
  }
  return s;
}

}  // namespace

TEST(FlowParameters, Invariants) {
  FlowParameters p;
  EXPECT_NO_THROW(p.validate());
  p.n = 1;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = FlowParameters{};
  p.k_n = -1;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = FlowParameters{};
  p.f_infinity = 1.2;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.n = 2;
  EXPECT_NO_THROW(p.validate());
  p.f_infinity = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  EXPECT_NEAR(FlowParameters::static_coupling(3), std::sqrt(2.0), 1e-15);
  EXPECT_THROW(FlowParameters::static_coupling(2), InvalidArgument);
}

TEST(FlowState, DefectDetection) {
  FlowState s;
  s.grid = grid(1, 32);
  s.f.assign(33, 1.0);
  s.z.assign(33, 0.0);
  EXPECT_FALSE(find_defect(s));
  s.f[5] = -0.1;
  EXPECT_EQ(find_defect(s)->node, 5u);
  s.f[5] = 1.0;
  s.z[0] = 1e-3;
  EXPECT_TRUE(find_defect(s));
  s.z[0] = 0.0;
  s.z[9] = std::nan("");
  EXPECT_EQ(find_defect(s)->node, 9u);
  EXPECT_THROW(require_valid(s), InvalidArgument);
}

TEST(InitialData, FlatHigherDimension) {
  const auto s = make_initial_data({}, FlowParameters{}, grid(10, 100));
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s.f[i], 1.0);
    EXPECT_EQ(s.z[i], 0.0);
  }
}

TEST(InitialData, FlatTwoDimensionalCone) {
  FlowParameters p;
  p.n = 2;
  p.k_n = 1;
  p.f_infinity = 1.2;
  const auto s = make_initial_data({}, p, grid(40, 400));
  EXPECT_EQ(s.f[0], 1.0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = s.g().r(i);
    EXPECT_NEAR(s.f[i] * s.f[i] - 1, (1.44 - 1) * r * r / (1 + r * r), 1e-14);
  }
  EXPECT_NEAR(s.f.back(), 1.2, 1e-3);
}

TEST(InitialData, MetricBumpFormula) {
  InitialDataSpec spec;
  spec.kind = InitialDataKind::MetricBump;
  spec.metric_amplitude = 0.5;
  const auto s = make_initial_data(spec, FlowParameters{}, grid(10, 100));
  EXPECT_NEAR(s.f[10], 1 + 0.5 / std::pow(2.0, 1.5), 1e-14);
  EXPECT_NEAR(s.f[10], 1.17678, 1e-5);
}

TEST(InitialData, FieldBumpMaximum) {
  InitialDataSpec spec;
  spec.kind = InitialDataKind::FieldBump;
  spec.field_amplitude = 1;
  spec.field_width = 1;
  const auto s = make_initial_data(spec, FlowParameters{}, grid(5, 5000));
  const auto it = std::max_element(s.z.begin(), s.z.end());
  const double r_star = s.g().r(static_cast<std::size_t>(it - s.z.begin()));
  EXPECT_NEAR(r_star, 1 / std::sqrt(2.0), 1e-3);
  EXPECT_NEAR(*it, std::exp(-0.5) / std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(*it, 0.42888, 1e-5);
}

TEST(InitialData, BuiltInFamiliesAreRegularAtOrigin) {
  for (auto kind : {InitialDataKind::Flat, InitialDataKind::MetricBump,
                    InitialDataKind::FieldBump, InitialDataKind::Combined}) {
    InitialDataSpec spec;
    spec.kind = kind;
    spec.metric_amplitude = 0.4;
    spec.field_amplitude = 0.3;
    const auto s = make_initial_data(spec, FlowParameters{}, grid(10, 100));
    EXPECT_EQ(s.f[0], 1.0);
    EXPECT_EQ(s.z[0], 0.0);
    EXPECT_EQ(d1(s.f, Parity::Even, s.g())[0], 0.0);
  }
}

TEST(InitialData, PositiveMetricBumpHasNonnegativeLambda2) {
  InitialDataSpec spec;
  spec.kind = InitialDataKind::MetricBump;
  spec.metric_amplitude = 0.7;
  FlowParameters p;
  const auto s = make_initial_data(spec, p, grid(20, 200));
  const auto c = curvature(s, p);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_GE(s.f[i], 1.0);
    EXPECT_GE(c.lambda2[i], 0.0);
  }
}

TEST(InitialData, Rejections) {
  InitialDataSpec spec;
  spec.kind = InitialDataKind::MetricBump;
  spec.metric_amplitude = -1.0;
  EXPECT_THROW(make_initial_data(spec, FlowParameters{}, grid(10, 100)), InvalidArgument);
  spec.metric_amplitude = 1.5;
  FlowParameters p;
  p.f_cap = 1.5;  // max f = 1 + 1.5 * 2 / 3^{3/2} = 1.577
  EXPECT_THROW(make_initial_data(spec, p, grid(10, 100)), MinimalSphereError);
  spec = {};
  spec.kind = InitialDataKind::Tabulated;
  EXPECT_THROW(make_initial_data(spec, FlowParameters{}, grid(10, 100)), InvalidArgument);
}

TEST(Table, ParsesHeaderCommentsAndColumns) {
  std::istringstream in("# sample\nr,f,z\n0,1,0\n1,1.1,0.5\n2,1.05,0.2\n3,1.0,0\n");
  const Table t = read_table(in);
  ASSERT_EQ(t.r.size(), 4u);
  EXPECT_EQ(t.f[1], 1.1);
  EXPECT_EQ(t.z[2], 0.2);
  std::istringstream two("0,1\n1,1.1\n2,1.05\n3,1\n");
  const Table u = read_table(two);
  EXPECT_EQ(u.z[3], 0.0);
  std::istringstream bad("0,1\n2,1.1\n1,1.05\n3,1\n");
  EXPECT_THROW(read_table(bad), InvalidArgument);
}

TEST(InitialData, TabulatedResamplesMonotonically) {
  const auto path = std::filesystem::temp_directory_path() / "listflow_state_table.csv";
  {
    std::ofstream out(path);
    out << "r,f,z\n";
    for (int i = 0; i <= 200; ++i) {
      const double r = 0.1 * i;
      out << r << ',' << 1 + 0.3 * oracle::bump(r) << ',' << r * std::exp(-r * r) << '\n';
    }
  }
  InitialDataSpec spec;
  spec.kind = InitialDataKind::Tabulated;
  spec.table_path = path.string();
  const auto s = make_initial_data(spec, FlowParameters{}, grid(20, 400));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = s.g().r(i);
    // h^2 max|f''| / 8 with table spacing 0.1 and max|f''| = 0.6.
    EXPECT_NEAR(s.f[i], 1 + 0.3 * oracle::bump(r), 7.5e-4);
    EXPECT_NEAR(s.z[i], r * std::exp(-r * r), 2e-3);
  }
  std::filesystem::remove(path);
}

TEST(InitialData, TabulatedMustCoverDomain) {
  const auto path = std::filesystem::temp_directory_path() / "listflow_short_table.csv";
  {
    std::ofstream out(path);
    out << "0,1\n1,1\n2,1\n3,1\n";
  }
  InitialDataSpec spec;
  spec.kind = InitialDataKind::Tabulated;
  spec.table_path = path.string();
  EXPECT_THROW(make_initial_data(spec, FlowParameters{}, grid(20, 400)), InvalidArgument);
  std::filesystem::remove(path);
}

TEST(Asymptotics, FlatIsExact) {
  const auto s = make_initial_data({}, FlowParameters{}, grid(40, 400));
  const auto rep = validate_asymptotics(s, FlowParameters{});
  EXPECT_TRUE(rep.metric.exact);
  EXPECT_TRUE(rep.field.exact);
  EXPECT_TRUE(rep.passed());
}

TEST(Asymptotics, MetricBumpDecaysAtOrderOne) {
  InitialDataSpec spec;
  spec.kind = InitialDataKind::MetricBump;
  spec.metric_amplitude = 0.5;
  const auto s = make_initial_data(spec, FlowParameters{}, grid(40, 400));
  const auto rep = validate_asymptotics(s, FlowParameters{});
  // Independent fit of log(f - 1) against log r on the same tail.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = s.g().r(i);
    if (r <= 20) continue;
    const double x = std::log(r), y = std::log(oracle::bump(r));
    sx += x, sy += y, sxx += x * x, sxy += x * y, m += 1;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  EXPECT_GE(slope, -1.3);
  EXPECT_LE(slope, -0.7);
  EXPECT_NEAR(rep.metric.exponent, slope, 0.02);
  EXPECT_TRUE(rep.metric.ok);
}

TEST(Asymptotics, SlowTailFails) {
  auto g = grid(100, 1000);
  const auto s = custom(
      g, [](double r) { return 1 + r * r * std::pow(1 + r * r, -1.25); },
      [](double) { return 0.0; });
  const auto rep = validate_asymptotics(s, FlowParameters{});
  EXPECT_NEAR(rep.metric.exponent, -0.5, 0.05);
  EXPECT_FALSE(rep.metric.ok);
  EXPECT_FALSE(rep.passed());
}

TEST(Asymptotics, InsufficientTail) {
  auto g = std::make_shared<const RadialGrid>(build_grid(10, 16, StretchMap::power(4)));
  FlowState s = make_initial_data({}, FlowParameters{}, g);
  EXPECT_THROW(validate_asymptotics(s, FlowParameters{}), InsufficientTail);
}

TEST(ReconstructU, ZeroField) {
  const auto s = make_initial_data({}, FlowParameters{}, grid(10, 100));
  for (double u : reconstruct_u(s)) EXPECT_EQ(u, 0.0);
}

TEST(ReconstructU, GaussianAntiderivative) {
  std::vector<double> err;
  for (std::size_t n : {200, 400, 800}) {
    const auto s = custom(
        grid(6, n), [](double) { return 1.0; },
        [](double r) { return -r * std::exp(-r * r / 2); });
    const auto u = reconstruct_u(s);
    double e = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double r = s.g().r(i);
      e = std::max(e, std::abs(u[i] - (std::exp(-r * r / 2) - std::exp(-18.0))));
    }
    err.push_back(e);
  }
  EXPECT_LT(err[2], 1e-5);
  EXPECT_NEAR(oracle::order(err[1], err[2]), 2.0, 0.2);
}

TEST(ReconstructU, RoundTripRefinesAtSecondOrder) {
  std::vector<double> err;
  for (std::size_t n : {200, 400, 800}) {
    const auto s = custom(
        grid(8, n), [](double r) { return 1 + 0.3 * oracle::bump(r); },
        [](double r) { return r * std::exp(-r * r); });
    const auto u = reconstruct_u(s);
    const auto du = d1(u, Parity::Even, s.g());
    double e = 0;
    for (std::size_t i = 0; i < s.size(); ++i) e = std::max(e, std::abs(du[i] / s.f[i] - s.z[i]));
    err.push_back(e);
  }
  EXPECT_NEAR(oracle::order(err[1], err[2]), 2.0, 0.2);
}
