#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "listflow/dynamics.hpp"
#include "listflow/errors.hpp"
#include "listflow/geometry.hpp"
#include "listflow/grid.hpp"
#include "listflow/state.hpp"

namespace listflow {

/// Observed order from a sequence of error norms at successively halved
/// spacing.
struct OrderEstimate {
  std::vector<double> errors;
  std::vector<double> orders;  // log2(e_k / e_{k+1})
  bool exact = false;          // all errors identically zero
  bool pre_asymptotic = false;  // finest order outside [lo, hi]

  double finest() const {
    return orders.empty() ? std::numeric_limits<double>::quiet_NaN() : orders.back();
  }
};

inline OrderEstimate estimate_order(std::vector<double> errors, double lo = 1.8,
                                    double hi = 2.2) {
  OrderEstimate est;
  est.errors = std::move(errors);
  est.exact = true;
  for (double e : est.errors) est.exact = est.exact && e == 0.0;
  if (est.exact) return est;
  for (std::size_t k = 0; k + 1 < est.errors.size(); ++k) {
    est.orders.push_back(std::log2(est.errors[k] / est.errors[k + 1]));
  }
  const double last = est.finest();
  est.pre_asymptotic = !(last >= lo && last <= hi);
  return est;
}

struct ConvergenceReport {
  std::vector<std::size_t> levels;
  double t = 0.0;
  std::vector<Termination> terminations;
  OrderEstimate f;        // Richardson: differences of successive levels
  OrderEstimate z;
  OrderEstimate bianchi;  // max-norm of the residual itself
};

/// Grid factory for a given interval count.
using GridFactory = std::function<std::shared_ptr<const RadialGrid>(std::size_t)>;

/// Runs the same physics at each resolution to params.t_end and compares.
/// Levels must double; the coarsest grid's nodes are then shared by all
/// finer grids, where the solutions are compared.
inline ConvergenceReport converge(const GridFactory& make_grid,
                                  const InitialDataSpec& spec,
                                  const FlowParameters& params,
                                  const std::vector<std::size_t>& levels) {
  if (levels.size() < 3) throw InvalidArgument("converge: need at least 3 levels");
  for (std::size_t k = 1; k < levels.size(); ++k) {
    if (levels[k] != 2 * levels[k - 1]) {
      throw InvalidArgument("converge: levels must double (got " +
                            std::to_string(levels[k - 1]) + " then " +
                            std::to_string(levels[k]) + ")");
    }
  }
  ConvergenceReport rep;
  rep.levels = levels;
  rep.t = params.t_end;
  std::vector<FlowState> finals;
  std::vector<double> bianchi_norms;
  for (std::size_t n : levels) {
    const auto grid = make_grid(n);
    const FlowState init = make_initial_data(spec, params, grid);
    EvolveSummary sum = evolve(init, params);
    rep.terminations.push_back(sum.reason);
    double norm = 0.0;
    for (double v : bianchi_residual(sum.final_state, params)) {
      norm = std::max(norm, std::abs(v));
    }
    bianchi_norms.push_back(norm);
    finals.push_back(std::move(sum.final_state));
  }
  const std::size_t coarse = levels.front();
  std::vector<double> ef, ez;
  for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
    const std::size_t sa = levels[k] / coarse;
    const std::size_t sb = levels[k + 1] / coarse;
    double df = 0.0, dz = 0.0;
    for (std::size_t i = 0; i <= coarse; ++i) {
      df = std::max(df, std::abs(finals[k].f[i * sa] - finals[k + 1].f[i * sb]));
      dz = std::max(dz, std::abs(finals[k].z[i * sa] - finals[k + 1].z[i * sb]));
    }
    ef.push_back(df);
    ez.push_back(dz);
  }
  rep.f = estimate_order(ef);
  rep.z = estimate_order(ez);
  rep.bianchi = estimate_order(bianchi_norms);
  return rep;
}

}  // namespace listflow
