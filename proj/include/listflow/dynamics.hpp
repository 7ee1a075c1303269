#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "listflow/errors.hpp"
#include "listflow/grid.hpp"
#include "listflow/state.hpp"

namespace listflow {

/// Time derivatives of (f, z). Zero at both ends, where the values are
/// imposed rather than evolved.
struct RhsPair {
  std::vector<double> df_dt;
  std::vector<double> dz_dt;
};

/// Evaluates the area-radius-gauge flow at interior nodes:
///
///   f_t = f''/f^2 - 2 f'^2/f^3 + ((n-2)/r - 1/(r f^2)) f'
///         - (n-2)(f^2 - 1)/(r^2 f) + k^2 f z^2
///   z_t = z''/f^2 + (1/(r f^2) + (n-2)/r) z' - ((n-1)/(r^2 f^2) + k^2 z^2) z
///
/// The DeTurck term is already absorbed. At r = 0 the right side of the f
/// equation vanishes for regular even f (f = 1 + a r^2 + ...) and z is odd,
/// so both derivatives are exactly zero there.
inline void rhs_into(std::span<const double> f, std::span<const double> z,
                     const RadialGrid& g, const FlowParameters& p,
                     std::span<double> df, std::span<double> dz) {
  const std::size_t n = g.intervals();
  const double nm1 = static_cast<double>(p.n - 1);
  const double nm2 = static_cast<double>(p.n - 2);
  const double k2 = p.k_n * p.k_n;
  df[0] = 0.0;
  dz[0] = 0.0;
  // f and zeta = z / r are even, so both are smooth in s = r^2 and the
  // singular parts of the operators become regular there:
  //   f'' - f' / r = 4 s F_ss,   f' / r = 2 F_s,
  //   z'' + (n-1) (z' / r - z / r^2) = r ((2n + 4) zeta_s + 4 s zeta_ss).
  // zeta(0) comes from the even quadratic through zeta_1, zeta_2.
  const auto zeta = [&](std::size_t j) {
    if (j > 0) return z[j] / g.r(j);
    return (4.0 * (z[1] / g.r(1)) - z[2] / g.r(2)) / 3.0;
  };
  const double c_zeta = 2.0 * nm1 + 6.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double r = g.r(i);
    const double sq = r * r;
    const double fi = f[i];
    const double zi = z[i];
    const double fs = g.ds_at(f, i);
    const double fss = g.dss_at(f, i);
    const Stencil3& a = g.ds_weights(i);
    const Stencil3& b = g.dss_weights(i);
    const double zm = zeta(i - 1), z0 = zi / r, zp = zeta(i + 1);
    const double zs = (a.minus * zm + a.plus * zp) + a.center * z0;
    const double zss = (b.minus * zm + b.plus * zp) + b.center * z0;
    const double inv_f = 1.0 / fi;
    const double inv_f2 = inv_f * inv_f;
    const double w = (fi - 1.0) * (fi + 1.0);
    df[i] = 4.0 * sq * (fss * inv_f2 - 2.0 * fs * fs * inv_f2 * inv_f) +
            nm2 * (2.0 * fs - w * inv_f / sq) + k2 * fi * zi * zi;
    dz[i] = r * (c_zeta * zs + 4.0 * sq * zss) * inv_f2 +
            nm2 * w * inv_f2 * (z0 + 2.0 * sq * zs) / r - k2 * zi * zi * zi;
  }
  df[n] = 0.0;
  dz[n] = 0.0;
}

inline RhsPair rhs(const FlowState& s, const FlowParameters& p) {
  require_valid(s);
  RhsPair out{std::vector<double>(s.size()), std::vector<double>(s.size())};
  rhs_into(s.f, s.z, s.g(), p, out.df_dt, out.dz_dt);
  return out;
}

/// Explicit step size: cfl_safety * min(f^2 dr^2 / 2) over interior nodes,
/// capped by cfl_safety * dr / |drift| for the first-derivative
/// coefficients of both equations.
inline double cfl_dt(const FlowState& s, const FlowParameters& p) {
  const RadialGrid& g = s.g();
  const double nm2 = static_cast<double>(p.n - 2);
  double diffusive = std::numeric_limits<double>::infinity();
  double drift = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < g.intervals(); ++i) {
    const double dr = g.local_spacing(i);
    const double fi = s.f[i];
    const double inv_f2 = 1.0 / (fi * fi);
    const double inv_r = 1.0 / g.r(i);
    diffusive = std::min(diffusive, fi * fi * dr * dr / 2.0);
    const double fr = g.d1_at(s.f, i);
    const double c_f = std::abs(-2.0 * fr * inv_f2 / fi + (nm2 - inv_f2) * inv_r);
    const double c_z = std::abs((inv_f2 + nm2) * inv_r);
    const double c = std::max(c_f, c_z);
    if (c > 0.0) drift = std::min(drift, dr / c);
  }
  return p.cfl_safety * std::min(diffusive, drift);
}

struct Advanced {
  FlowState state;
  double dt;
};
struct CflCollapse {
  double dt;
};
struct NonFinite {
  std::size_t node;
  FieldName field;
};
/// f exceeded f_cap: the mean curvature (n-1)/(r f) of a symmetry sphere is
/// collapsing towards zero.
struct MinimalSphereSignal {
  std::size_t node;
};

using StepOutcome = std::variant<Advanced, CflCollapse, NonFinite, MinimalSphereSignal>;

/// Classical four-stage Runge-Kutta integrator with reusable scratch space.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(const FlowParameters& params) : params_(params) {}

  /// Advances by the CFL step, shortened to `dt_limit` when given (used to
  /// land exactly on t_end).
  StepOutcome step(const FlowState& s, std::optional<double> dt_limit = std::nullopt) {
    if (auto d = find_defect(s)) {
      if (d->what == "f <= 0" || d->what == "non-finite") {
        return NonFinite{d->node, d->field};
      }
      throw InvalidArgument("step: invalid state: " + d->what);
    }
    const double dt_cfl = cfl_dt(s, params_);
    if (!(dt_cfl >= params_.dt_floor)) return CflCollapse{dt_cfl};
    double dt = dt_cfl;
    if (dt_limit) dt = std::min(dt, *dt_limit);

    const RadialGrid& g = s.g();
    const std::size_t m = s.size();
    resize(m);
    const auto stage = [&](const std::vector<double>& f0, const std::vector<double>& z0,
                           const std::vector<double>& kf, const std::vector<double>& kz,
                           double a) {
      for (std::size_t i = 0; i < m; ++i) {
        sf_[i] = f0[i] + a * kf[i];
        sz_[i] = z0[i] + a * kz[i];
      }
      close_boundaries(g, sf_, sz_);
    };

    rhs_into(s.f, s.z, g, params_, k1f_, k1z_);
    stage(s.f, s.z, k1f_, k1z_, 0.5 * dt);
    rhs_into(sf_, sz_, g, params_, k2f_, k2z_);
    stage(s.f, s.z, k2f_, k2z_, 0.5 * dt);
    rhs_into(sf_, sz_, g, params_, k3f_, k3z_);
    stage(s.f, s.z, k3f_, k3z_, dt);
    rhs_into(sf_, sz_, g, params_, k4f_, k4z_);

    FlowState next;
    next.t = s.t + dt;
    next.grid = s.grid;
    next.f.resize(m);
    next.z.resize(m);
    const double w = dt / 6.0;
    for (std::size_t i = 0; i < m; ++i) {
      next.f[i] = s.f[i] + w * (k1f_[i] + 2.0 * k2f_[i] + 2.0 * k3f_[i] + k4f_[i]);
      next.z[i] = s.z[i] + w * (k1z_[i] + 2.0 * k2z_[i] + 2.0 * k3z_[i] + k4z_[i]);
    }
    close_boundaries(g, next.f, next.z);

    for (std::size_t i = 0; i < m; ++i) {
      if (!std::isfinite(next.f[i]) || !(next.f[i] > 0.0)) {
        return NonFinite{i, FieldName::F};
      }
      if (!std::isfinite(next.z[i])) return NonFinite{i, FieldName::Z};
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (next.f[i] > params_.f_cap) return MinimalSphereSignal{i};
    }
    return Advanced{std::move(next), dt};
  }

  /// Re-imposes f(0) = 1, z(0) = 0 and the outer closure.
  void close_boundaries(const RadialGrid& g, std::vector<double>& f,
                        std::vector<double>& z) const {
    const std::size_t n = g.intervals();
    f[0] = 1.0;
    z[0] = 0.0;
    if (params_.outer == OuterBoundary::Dirichlet) {
      f[n] = params_.f_infinity;
      z[n] = 0.0;
    } else {
      const double ratio = g.r(n - 1) / g.r(n);
      f[n] = params_.f_infinity + (f[n - 1] - params_.f_infinity) * ratio;
      z[n] = z[n - 1] * ratio * ratio;
    }
  }

 private:
  void resize(std::size_t m) {
    for (auto* v : {&sf_, &sz_, &k1f_, &k1z_, &k2f_, &k2z_, &k3f_, &k3z_, &k4f_, &k4z_}) {
      v->resize(m);
    }
  }

  FlowParameters params_;
  std::vector<double> sf_, sz_, k1f_, k1z_, k2f_, k2z_, k3f_, k3z_, k4f_, k4z_;
};

inline StepOutcome step(const FlowState& s, const FlowParameters& p,
                        std::optional<double> dt_limit = std::nullopt) {
  Rk4Stepper stepper(p);
  return stepper.step(s, dt_limit);
}

enum class Termination {
  Completed,
  MinimalSphere,
  NonFinite,
  CflCollapse,
  Stopped,  // an observer asked to stop
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::MinimalSphere: return "minimal-sphere";
    case Termination::NonFinite: return "non-finite";
    case Termination::CflCollapse: return "cfl-collapse";
    case Termination::Stopped: return "stopped";
  }
  return "unknown";
}

enum class ObserverAction { Continue, Stop };

struct StepInfo {
  std::size_t step = 0;
  double dt = 0.0;  // 0 for the initial state
};

using Observer = std::function<ObserverAction(const FlowState&, const StepInfo&)>;

/// per_step observers see every accepted state and the initial one.
/// on_output observers see the first state at or past each multiple of
/// output_interval; the final state is always reported.
struct Observers {
  std::vector<Observer> per_step;
  std::vector<Observer> on_output;
};

struct EvolveSummary {
  FlowState final_state;
  Termination reason = Termination::Completed;
  std::string detail;
  std::size_t steps = 0;
  double dt_min = std::numeric_limits<double>::infinity();
  double dt_max = 0.0;
};

/// Steps from `initial` until t_end or a non-Advanced outcome.
inline EvolveSummary evolve(const FlowState& initial, const FlowParameters& params,
                            const Observers& observers = {}) {
  params.validate();
  require_valid(initial);
  EvolveSummary summary;
  summary.final_state = initial;
  FlowState& s = summary.final_state;
  Rk4Stepper stepper(params);

  double next_output = s.t;
  double last_output = -std::numeric_limits<double>::infinity();
  bool stop = false;
  const auto notify = [&](const std::vector<Observer>& list, const StepInfo& info) {
    for (const auto& obs : list) {
      if (obs(s, info) == ObserverAction::Stop) stop = true;
    }
  };
  const auto maybe_output = [&](const StepInfo& info, bool force) {
    if (force ? s.t != last_output : s.t >= next_output) {
      notify(observers.on_output, info);
      last_output = s.t;
      while (next_output <= s.t) next_output += params.output_interval;
    }
  };

  StepInfo info;
  notify(observers.per_step, info);
  maybe_output(info, false);

  while (!stop && s.t < params.t_end) {
    StepOutcome outcome = stepper.step(s, params.t_end - s.t);
    if (auto* adv = std::get_if<Advanced>(&outcome)) {
      s = std::move(adv->state);
      // Guard against t falling a rounding error short of t_end.
      if (params.t_end - s.t <= 1e-12 * std::max(1.0, params.t_end)) s.t = params.t_end;
      ++summary.steps;
      summary.dt_min = std::min(summary.dt_min, adv->dt);
      summary.dt_max = std::max(summary.dt_max, adv->dt);
      info = StepInfo{summary.steps, adv->dt};
      notify(observers.per_step, info);
      maybe_output(info, false);
      continue;
    }
    if (auto* nf = std::get_if<NonFinite>(&outcome)) {
      summary.reason = Termination::NonFinite;
      summary.detail = std::string("non-finite ") + to_string(nf->field) +
                       " at node " + std::to_string(nf->node);
    } else if (auto* ms = std::get_if<MinimalSphereSignal>(&outcome)) {
      summary.reason = Termination::MinimalSphere;
      summary.detail = "f exceeded f_cap at node " + std::to_string(ms->node);
    } else if (auto* cc = std::get_if<CflCollapse>(&outcome)) {
      summary.reason = Termination::CflCollapse;
      summary.detail = "dt = " + std::to_string(cc->dt) + " below floor";
    }
    break;
  }
  if (stop && summary.reason == Termination::Completed) {
    summary.reason = Termination::Stopped;
  }
  maybe_output(info, true);
  return summary;
}

}  // namespace listflow
