#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "listflow/errors.hpp"
#include "listflow/grid.hpp"

namespace listflow {

enum class OuterBoundary {
  Dirichlet,  // f = f_inf, z = 0 at r_N
  Robin,      // (f - f_inf) ~ 1/r and z ~ 1/r^2 continued from r_{N-1}
};

/// Physics and stepping configuration for one trajectory.
struct FlowParameters {
  int n = 3;
  double k_n = std::sqrt(2.0);
  /// Asymptotic value of f. Only meaningful for n = 2, where it encodes
  /// the cone parameter a via f_inf = sqrt(1 + a); it must be 1 for n >= 3.
  double f_infinity = 1.0;
  double cfl_safety = 0.5;
  double t_end = 1.0;
  double output_interval = 0.1;
  double dt_floor = 1e-14;
  double f_cap = 1e6;
  OuterBoundary outer = OuterBoundary::Dirichlet;

  /// Default coupling sqrt((n-1)/(n-2)), for which fixed points are static
  /// vacuum metrics. Undefined for n = 2.
  static double static_coupling(int n) {
    if (n < 3) throw InvalidArgument("static coupling needs n >= 3");
    return std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n - 2));
  }

  void validate() const {
    if (n < 2) throw InvalidArgument("physics.n must be >= 2");
    if (!(k_n > 0.0) || !std::isfinite(k_n)) {
      throw InvalidArgument("physics.k_n must be positive");
    }
    if (n == 2 && !(f_infinity > 0.0)) {
      throw InvalidArgument("physics.f_infinity must be positive for n = 2");
    }
    if (n >= 3 && f_infinity != 1.0) {
      throw InvalidArgument("physics.f_infinity must equal 1 for n >= 3");
    }
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) {
      throw InvalidArgument("cfl_safety must lie in (0, 1]");
    }
    if (!(t_end >= 0.0)) throw InvalidArgument("t_end must be >= 0");
    if (!(output_interval > 0.0)) {
      throw InvalidArgument("output_interval must be positive");
    }
    if (!(dt_floor > 0.0)) throw InvalidArgument("dt_floor must be positive");
    if (!(f_cap > 1.0)) throw InvalidArgument("f_cap must exceed 1");
  }
};

/// Flow time plus nodal f = sqrt(g_rr) and z = (1/f) du/dr.
struct FlowState {
  double t = 0.0;
  std::vector<double> f;
  std::vector<double> z;
  std::shared_ptr<const RadialGrid> grid;

  const RadialGrid& g() const { return *grid; }
  std::size_t size() const { return f.size(); }
};

enum class FieldName { F, Z };

inline const char* to_string(FieldName field) {
  return field == FieldName::F ? "f" : "z";
}

/// First offending node of a state, if any.
struct StateDefect {
  std::size_t node;
  FieldName field;
  std::string what;
};

/// Checks the FlowState invariants. Values must be finite with f > 0, and the
/// origin pins f(0) = 1, z(0) = 0.
inline std::optional<StateDefect> find_defect(const FlowState& s) {
  if (!s.grid) return StateDefect{0, FieldName::F, "state has no grid"};
  if (s.f.size() != s.grid->size() || s.z.size() != s.grid->size()) {
    return StateDefect{0, FieldName::F, "array length does not match grid"};
  }
  for (std::size_t i = 0; i < s.f.size(); ++i) {
    if (!std::isfinite(s.f[i])) return StateDefect{i, FieldName::F, "non-finite"};
    if (!std::isfinite(s.z[i])) return StateDefect{i, FieldName::Z, "non-finite"};
    if (!(s.f[i] > 0.0)) return StateDefect{i, FieldName::F, "f <= 0"};
  }
  if (s.f[0] != 1.0) return StateDefect{0, FieldName::F, "f(0) != 1"};
  if (s.z[0] != 0.0) return StateDefect{0, FieldName::Z, "z(0) != 0"};
  return std::nullopt;
}

inline void require_valid(const FlowState& s) {
  if (auto d = find_defect(s)) {
    throw InvalidArgument("invalid state: " + d->what + " at node " +
                          std::to_string(d->node) + " (" +
                          to_string(d->field) + ")");
  }
}

enum class InitialDataKind { Flat, MetricBump, FieldBump, Combined, Tabulated };

/// Built-in initial-data families.
///
/// The metric part is f = f_base + A r^2 / (1 + r^2)^{3/2}, where f_base is
/// 1 for n >= 3 and the flat-cone profile sqrt(1 + (f_inf^2 - 1) r^2/(1+r^2))
/// for n = 2. The field part is z = B r exp(-r^2 / sigma^2). Flat uses
/// A = B = 0; the single bumps ignore the other amplitude.
struct InitialDataSpec {
  InitialDataKind kind = InitialDataKind::Flat;
  double metric_amplitude = 0.0;
  double field_amplitude = 0.0;
  double field_width = 1.0;
  std::string table_path;

  void validate() const {
    if (!std::isfinite(metric_amplitude) || !std::isfinite(field_amplitude) ||
        !std::isfinite(field_width)) {
      throw InvalidArgument("initial_data: amplitudes and widths must be finite");
    }
    if (uses_metric() && !(metric_amplitude > -1.0)) {
      throw InvalidArgument("initial_data: metric amplitude must exceed -1");
    }
    if (uses_field() && !(field_width > 0.0)) {
      throw InvalidArgument("initial_data: field width must be positive");
    }
    if (kind == InitialDataKind::Tabulated && table_path.empty()) {
      throw InvalidArgument("initial_data: tabulated data needs a path");
    }
  }

  bool uses_metric() const {
    return kind == InitialDataKind::MetricBump ||
           kind == InitialDataKind::Combined;
  }
  bool uses_field() const {
    return kind == InitialDataKind::FieldBump ||
           kind == InitialDataKind::Combined;
  }
};

/// Table of (r, f, z) samples read from comma-separated text.
struct Table {
  std::vector<double> r, f, z;
};

/// Reads two- or three-column CSV (r, f[, z]). Comments and a non-numeric
/// header row are skipped; r must be strictly increasing.
inline Table read_table(std::istream& in, const std::string& origin = "table") {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  std::size_t columns = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) {
          numeric = false;
        }
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw InvalidArgument(origin + ":" + std::to_string(lineno) +
                            ": non-numeric row");
    }
    header_allowed = false;
    if (row.size() != 2 && row.size() != 3) {
      throw InvalidArgument(origin + ":" + std::to_string(lineno) +
                            ": expected 2 or 3 columns");
    }
    if (columns == 0) columns = row.size();
    if (row.size() != columns) {
      throw InvalidArgument(origin + ":" + std::to_string(lineno) +
                            ": inconsistent column count");
    }
    if (!t.r.empty() && !(row[0] > t.r.back())) {
      throw InvalidArgument(origin + ":" + std::to_string(lineno) +
                            ": r must be strictly increasing");
    }
    t.r.push_back(row[0]);
    t.f.push_back(row[1]);
    t.z.push_back(columns == 3 ? row[2] : 0.0);
  }
  if (t.r.size() < 4) {
    throw InvalidArgument(origin + ": need at least 4 rows");
  }
  return t;
}

inline Table read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open table '" + path + "'");
  return read_table(in, path);
}

namespace detail {

inline double cone_profile(double r, double f_inf) {
  const double r2 = r * r;
  return std::sqrt(1.0 + (f_inf * f_inf - 1.0) * r2 / (1.0 + r2));
}

inline double metric_bump(double r, double amplitude) {
  const double r2 = r * r;
  return amplitude * r2 / std::pow(1.0 + r2, 1.5);
}

inline double field_bump(double r, double amplitude, double width) {
  return amplitude * r * std::exp(-(r * r) / (width * width));
}

// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes with
// the Fritsch-Butland harmonic mean), so resampled data never overshoots.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)), d_(x_.size(), 0.0) {
    const std::size_t m = x_.size();
    std::vector<double> h(m - 1), delta(m - 1);
    for (std::size_t k = 0; k + 1 < m; ++k) {
      h[k] = x_[k + 1] - x_[k];
      delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    for (std::size_t k = 1; k + 1 < m; ++k) {
      if (delta[k - 1] * delta[k] > 0.0) {
        const double w1 = 2.0 * h[k] + h[k - 1];
        const double w2 = h[k] + 2.0 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[m - 1] = end_slope(h[m - 2], h[m - 3], delta[m - 2], delta[m - 3]);
  }

  double operator()(double x) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    k = std::min(k, x_.size() - 2);
    const double h = x_[k + 1] - x_[k];
    const double s = (x - x_[k]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y_[k] + (s3 - 2 * s2 + s) * h * d_[k] +
           (-2 * s3 + 3 * s2) * y_[k + 1] + (s3 - s2) * h * d_[k + 1];
  }

 private:
  // Three-point end slope, limited to preserve monotonicity.
  static double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) {
      d = 0.0;
    } else if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3 * d0)) {
      d = 3 * d0;
    }
    return d;
  }

  std::vector<double> x_, y_, d_;
};

inline std::vector<double> resample(const Table& t, const std::vector<double>& y,
                                    const RadialGrid& grid) {
  const MonotoneCubic spline(t.r, y);
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = spline(grid.r(i));
  return out;
}

}  // namespace detail

/// Builds the initial state on `grid`. Throws InvalidArgument for invalid
/// specs or data with f <= 0, MinimalSphereError when f exceeds f_cap.
inline FlowState make_initial_data(const InitialDataSpec& spec,
                                   const FlowParameters& params,
                                   std::shared_ptr<const RadialGrid> grid) {
  spec.validate();
  params.validate();
  const RadialGrid& g = *grid;
  FlowState s;
  s.grid = grid;
  s.f.assign(g.size(), 1.0);
  s.z.assign(g.size(), 0.0);

  if (spec.kind == InitialDataKind::Tabulated) {
    const Table t = read_table_file(spec.table_path);
    if (t.r.front() > 0.0 || t.r.back() < g.r_max()) {
      throw InvalidArgument("tabulated data must cover [0, r_max]");
    }
    s.f = detail::resample(t, t.f, g);
    s.z = detail::resample(t, t.z, g);
    constexpr double kOriginSlack = 1e-6;
    if (std::abs(s.f[0] - 1.0) > kOriginSlack || std::abs(s.z[0]) > kOriginSlack) {
      throw InvalidArgument("tabulated data must satisfy f(0) = 1, z(0) = 0");
    }
  } else {
    const double metric = spec.uses_metric() ? spec.metric_amplitude : 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = g.r(i);
      const double base =
          params.n == 2 ? detail::cone_profile(r, params.f_infinity) : 1.0;
      s.f[i] = base + detail::metric_bump(r, metric);
      if (spec.uses_field()) {
        s.z[i] = detail::field_bump(r, spec.field_amplitude, spec.field_width);
      }
    }
  }
  s.f[0] = 1.0;
  s.z[0] = 0.0;

  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(s.f[i]) || !std::isfinite(s.z[i])) {
      throw InvalidArgument("initial data not finite at node " + std::to_string(i));
    }
    if (!(s.f[i] > 0.0)) {
      throw InvalidArgument("initial data has f <= 0 at node " + std::to_string(i));
    }
    if (s.f[i] > params.f_cap) {
      throw MinimalSphereError("initial data exceeds f_cap at r = " +
                               std::to_string(g.r(i)));
    }
  }
  return s;
}

/// Result of a log-log power-law fit |value| ~ C r^exponent on the tail.
struct DecayFit {
  bool exact = false;  // every tail value is exactly zero
  double exponent = 0.0;
  double required = 0.0;  // -1 for the metric, -2 for the field
  std::size_t samples = 0;
  bool ok = false;
};

struct AsymptoticsReport {
  DecayFit metric;  // |f^2 - f_inf^2| ~ C / r
  DecayFit field;   // |z| ~ D / r^2
  double slack = 0.3;
  bool passed() const { return metric.ok && field.ok; }
};

namespace detail {

inline DecayFit fit_decay(const RadialGrid& g, const std::vector<double>& values,
                          double required, double slack) {
  DecayFit fit;
  fit.required = required;
  const double half = 0.5 * g.r_max();
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(g.r(i) > half)) continue;
    const double v = std::abs(values[i]);
    if (v > 0.0) {
      lx.push_back(std::log(g.r(i)));
      ly.push_back(std::log(v));
    }
  }
  fit.samples = lx.size();
  if (lx.empty()) {
    fit.exact = true;
    fit.ok = true;
    return fit;
  }
  if (lx.size() < 2) {
    // A single nonzero sample carries no slope information.
    fit.ok = false;
    return fit;
  }
  const auto m = static_cast<double>(lx.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  fit.exponent = sxy / sxx;
  fit.ok = fit.exponent <= required + slack;
  return fit;
}

}  // namespace detail

/// Fits the tail decay of f^2 - f_inf^2 and z over r > r_max / 2. Decay at
/// least as fast as order one (within `slack` in the exponent) passes.
inline AsymptoticsReport validate_asymptotics(const FlowState& s,
                                              const FlowParameters& params,
                                              double slack = 0.3) {
  const RadialGrid& g = s.g();
  std::size_t tail = 0;
  for (double r : g.nodes()) tail += r > 0.5 * g.r_max() ? 1 : 0;
  if (tail < 8) {
    throw InsufficientTail("asymptotics: need >= 8 nodes beyond r_max/2, have " +
                           std::to_string(tail));
  }
  const double finf2 = params.f_infinity * params.f_infinity;
  std::vector<double> w(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) w[i] = s.f[i] * s.f[i] - finf2;
  AsymptoticsReport rep;
  rep.slack = slack;
  rep.metric = detail::fit_decay(g, w, -1.0, slack);
  rep.field = detail::fit_decay(g, s.z, -2.0, slack);
  return rep;
}

/// Scalar field u with u(r_max) = 0 and du/dr = f z, integrated inward by
/// the trapezoidal rule.
inline std::vector<double> reconstruct_u(const FlowState& s) {
  require_valid(s);
  const RadialGrid& g = s.g();
  const std::size_t n = g.intervals();
  std::vector<double> u(n + 1, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const double dr = g.r(i + 1) - g.r(i);
    u[i] = u[i + 1] - 0.5 * dr * (s.f[i] * s.z[i] + s.f[i + 1] * s.z[i + 1]);
  }
  return u;
}

}  // namespace listflow
