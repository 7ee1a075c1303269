#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "listflow/errors.hpp"

namespace listflow {

/// Reflection symmetry of a nodal field across r = 0.
enum class Parity { Even, Odd };

/// Monotone map xi in [0, 1] -> [0, 1]; radii are r_max * map(i / N).
struct StretchMap {
  std::string name;
  std::function<double(double)> map;

  /// r = r_max * xi^p. Only p == 1 or p >= 2 keep the second derivative
  /// bounded at the origin.
  static StretchMap power(double p) {
    if (!(p == 1.0 || p >= 2.0)) {
      throw InvalidArgument("power stretch exponent must be 1 or >= 2");
    }
    return {"power", [p](double xi) { return std::pow(xi, p); }};
  }

  /// r = r_max * sinh(c xi) / sinh(c): near-uniform at the origin, coarser
  /// in the tail.
  static StretchMap sinh(double c) {
    if (!(c > 0.0)) throw InvalidArgument("sinh stretch needs c > 0");
    const double norm = std::sinh(c);
    return {"sinh", [c, norm](double xi) { return std::sinh(c * xi) / norm; }};
  }
};

/// Three-point weights for the value at nodes (i-1, i, i+1).
struct Stencil3 {
  double minus = 0.0;
  double center = 0.0;
  double plus = 0.0;
};

namespace detail {

// Fornberg's recursion for finite-difference weights at x0 over arbitrary
// nodes. Returns weights[order][node] for derivative orders 0..max_order.
inline std::vector<std::vector<double>> fornberg_weights(
    double x0, std::span<const double> x, int max_order) {
  const std::size_t n = x.size();
  const auto m = static_cast<std::size_t>(max_order);
  std::vector<std::vector<double>> c(m + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - x0;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (std::size_t k = mn; k >= 1; --k) {
          c[k][i] = c1 * (static_cast<double>(k) * c[k - 1][i - 1] -
                          c5 * c[k][i - 1]) /
                    c2;
        }
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (std::size_t k = mn; k >= 1; --k) {
        c[k][j] = (c4 * c[k][j] - static_cast<double>(k) * c[k - 1][j]) / c3;
      }
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

}  // namespace detail

/// Immutable radial grid on [0, r_max] with precomputed derivative weights.
///
/// Interior nodes use three-point Lagrange stencils, which reduce to the
/// usual centered differences on uniform grids and stay exact on quadratics
/// when the grid is stretched. Node 0 closes with a parity ghost at -r_1;
/// node N uses one-sided stencils (3 points for d1, 4 for d2).
class RadialGrid {
 public:
  static constexpr std::size_t kMinIntervals = 16;

  std::span<const double> nodes() const { return nodes_; }
  double r(std::size_t i) const { return nodes_[i]; }
  double r_max() const { return nodes_.back(); }
  /// Number of intervals N; there are N + 1 nodes.
  std::size_t intervals() const { return nodes_.size() - 1; }
  std::size_t size() const { return nodes_.size(); }

  bool is_uniform() const { return uniform_step_.has_value(); }
  std::optional<double> uniform_step() const { return uniform_step_; }
  const std::string& stretch_name() const { return stretch_name_; }

  /// Largest spacing on the grid; the discretization scale for tolerances.
  double max_spacing() const { return max_spacing_; }
  /// min(r_i - r_{i-1}, r_{i+1} - r_i) for interior i.
  double local_spacing(std::size_t i) const {
    return std::min(nodes_[i] - nodes_[i - 1], nodes_[i + 1] - nodes_[i]);
  }

  const Stencil3& d1_weights(std::size_t i) const { return d1_[i]; }
  const Stencil3& ds_weights(std::size_t i) const { return ds_[i]; }
  const Stencil3& dss_weights(std::size_t i) const { return dss_[i]; }
  const Stencil3& d2_weights(std::size_t i) const { return d2_[i]; }

  /// First derivative at interior node i (1 <= i < N).
  double d1_at(std::span<const double> g, std::size_t i) const {
    const Stencil3& w = d1_[i];
    return (w.minus * g[i - 1] + w.plus * g[i + 1]) + w.center * g[i];
  }
  /// Second derivative at interior node i (1 <= i < N).
  double d2_at(std::span<const double> g, std::size_t i) const {
    const Stencil3& w = d2_[i];
    return (w.minus * g[i - 1] + w.plus * g[i + 1]) + w.center * g[i];
  }

  /// d/d(r^2) of an even field at interior node i (three points in s = r^2,
  /// error O(r^2 h^2)).
  double ds_at(std::span<const double> g, std::size_t i) const {
    const Stencil3& w = ds_[i];
    return (w.minus * g[i - 1] + w.plus * g[i + 1]) + w.center * g[i];
  }
  /// d^2/d(r^2)^2 of an even field at interior node i.
  double dss_at(std::span<const double> g, std::size_t i) const {
    const Stencil3& w = dss_[i];
    return (w.minus * g[i - 1] + w.plus * g[i + 1]) + w.center * g[i];
  }
  /// d/d(r^2) of an even field at r = 0 from nodes 0, 1, 2 (one-sided in s,
  /// error O(h^4)).
  double ds_origin(std::span<const double> g) const {
    return (ds_origin_[1] * g[1] + ds_origin_[2] * g[2]) + ds_origin_[0] * g[0];
  }

  /// Derivatives at r = 0 from the ghost value g(-r_1) = +-g(r_1).
  double d1_origin(std::span<const double> g, Parity parity) const {
    if (parity == Parity::Even) return 0.0;
    return (g[1] + g[1]) / (2.0 * nodes_[1]);
  }
  double d2_origin(std::span<const double> g, Parity parity) const {
    const double r1sq = nodes_[1] * nodes_[1];
    if (parity == Parity::Even) return 2.0 * (g[1] - g[0]) / r1sq;
    return -2.0 * g[0] / r1sq;
  }

  double d1_outer(std::span<const double> g) const {
    const std::size_t n = intervals();
    return outer_d1_[0] * g[n] + outer_d1_[1] * g[n - 1] +
           outer_d1_[2] * g[n - 2];
  }
  double d2_outer(std::span<const double> g) const {
    const std::size_t n = intervals();
    return outer_d2_[0] * g[n] + outer_d2_[1] * g[n - 1] +
           outer_d2_[2] * g[n - 2] + outer_d2_[3] * g[n - 3];
  }

 private:
  friend RadialGrid build_grid(double, std::size_t, std::optional<StretchMap>);

  RadialGrid(std::vector<double> nodes, std::optional<double> uniform_step,
             std::string stretch_name)
      : nodes_(std::move(nodes)),
        uniform_step_(uniform_step),
        stretch_name_(std::move(stretch_name)) {
    const std::size_t n = intervals();
    d1_.resize(n + 1);
    d2_.resize(n + 1);
    ds_.resize(n + 1);
    dss_.resize(n + 1);
    max_spacing_ = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      max_spacing_ = std::max(max_spacing_, nodes_[i] - nodes_[i - 1]);
    }
    for (std::size_t i = 1; i < n; ++i) {
      const double hm = nodes_[i] - nodes_[i - 1];
      const double hp = nodes_[i + 1] - nodes_[i];
      const double hs = hm + hp;
      Stencil3& a = d1_[i];
      a.minus = -hp / (hm * hs);
      a.plus = hm / (hp * hs);
      a.center = -(a.minus + a.plus);
      Stencil3& b = d2_[i];
      b.minus = 2.0 / (hm * hs);
      b.plus = 2.0 / (hp * hs);
      b.center = -(b.minus + b.plus);
      const double sm = nodes_[i] * nodes_[i] - nodes_[i - 1] * nodes_[i - 1];
      const double sp = nodes_[i + 1] * nodes_[i + 1] - nodes_[i] * nodes_[i];
      Stencil3& c = ds_[i];
      c.minus = -sp / (sm * (sm + sp));
      c.plus = sm / (sp * (sm + sp));
      c.center = -(c.minus + c.plus);
      Stencil3& e = dss_[i];
      e.minus = 2.0 / (sm * (sm + sp));
      e.plus = 2.0 / (sp * (sm + sp));
      e.center = -(e.minus + e.plus);
    }
    {
      const double a = nodes_[1] * nodes_[1];
      const double b = nodes_[2] * nodes_[2];
      ds_origin_[1] = b / (a * (b - a));
      ds_origin_[2] = -a / (b * (b - a));
      ds_origin_[0] = -(ds_origin_[1] + ds_origin_[2]);
    }
    const double xs[4] = {nodes_[n], nodes_[n - 1], nodes_[n - 2],
                          nodes_[n - 3]};
    const auto w3 = detail::fornberg_weights(nodes_[n], std::span(xs, 3), 1);
    const auto w4 = detail::fornberg_weights(nodes_[n], std::span(xs, 4), 2);
    for (int k = 0; k < 3; ++k) outer_d1_[k] = w3[1][k];
    for (int k = 0; k < 4; ++k) outer_d2_[k] = w4[2][k];
  }

  std::vector<double> nodes_;
  std::optional<double> uniform_step_;
  std::string stretch_name_;
  double max_spacing_ = 0.0;
  std::vector<Stencil3> d1_;
  std::vector<Stencil3> d2_;
  std::vector<Stencil3> ds_;
  std::vector<Stencil3> dss_;
  double ds_origin_[3] = {};
  double outer_d1_[3] = {};
  double outer_d2_[4] = {};
};

/// Builds a grid with N intervals (N + 1 nodes) on [0, r_max]. Without a
/// stretch map the grid is uniform, r_i = r_max * i / N.
inline RadialGrid build_grid(double r_max, std::size_t intervals,
                             std::optional<StretchMap> stretch = std::nullopt) {
  if (!(r_max > 0.0) || !std::isfinite(r_max)) {
    throw InvalidArgument("grid: r_max must be positive and finite");
  }
  if (intervals < RadialGrid::kMinIntervals) {
    throw InvalidArgument("grid: N = " + std::to_string(intervals) +
                          " is below the minimum of " +
                          std::to_string(RadialGrid::kMinIntervals));
  }
  std::vector<double> nodes(intervals + 1);
  const auto n = static_cast<double>(intervals);
  if (!stretch) {
    for (std::size_t i = 0; i <= intervals; ++i) {
      nodes[i] = r_max * static_cast<double>(i) / n;
    }
    nodes.back() = r_max;
    return RadialGrid(std::move(nodes), r_max / n, "uniform");
  }
  if (!stretch->map) throw InvalidArgument("grid: empty stretch map");
  for (std::size_t i = 0; i <= intervals; ++i) {
    nodes[i] = r_max * stretch->map(static_cast<double>(i) / n);
  }
  if (nodes.front() != 0.0 || std::abs(nodes.back() - r_max) > 1e-12 * r_max) {
    throw InvalidArgument("grid: stretch map must send 0 -> 0 and 1 -> 1");
  }
  nodes.front() = 0.0;
  nodes.back() = r_max;
  for (std::size_t i = 1; i <= intervals; ++i) {
    if (!std::isfinite(nodes[i]) || !(nodes[i] > nodes[i - 1])) {
      throw InvalidArgument("grid: stretch map '" + stretch->name +
                            "' is not strictly monotone");
    }
  }
  return RadialGrid(std::move(nodes), std::nullopt, stretch->name);
}

namespace detail {
inline void check_length(std::span<const double> field, const RadialGrid& grid) {
  if (field.size() != grid.size()) {
    throw InvalidArgument("field length " + std::to_string(field.size()) +
                          " does not match grid size " +
                          std::to_string(grid.size()));
  }
}
}  // namespace detail

/// Second-order first derivative of a nodal field.
inline std::vector<double> d1(std::span<const double> field, Parity parity,
                              const RadialGrid& grid) {
  detail::check_length(field, grid);
  const std::size_t n = grid.intervals();
  std::vector<double> out(n + 1);
  out[0] = grid.d1_origin(field, parity);
  for (std::size_t i = 1; i < n; ++i) out[i] = grid.d1_at(field, i);
  out[n] = grid.d1_outer(field);
  return out;
}

/// Second-order second derivative of a nodal field.
inline std::vector<double> d2(std::span<const double> field, Parity parity,
                              const RadialGrid& grid) {
  detail::check_length(field, grid);
  const std::size_t n = grid.intervals();
  std::vector<double> out(n + 1);
  out[0] = grid.d2_origin(field, parity);
  for (std::size_t i = 1; i < n; ++i) out[i] = grid.d2_at(field, i);
  out[n] = grid.d2_outer(field);
  return out;
}

}  // namespace listflow
