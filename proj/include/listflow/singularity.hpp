#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "listflow/errors.hpp"
#include "listflow/geometry.hpp"
#include "listflow/monitors.hpp"
#include "listflow/state.hpp"

namespace listflow {

/// One recorded step: sup |Riem| over the grid and where it is attained.
struct HistoryEntry {
  double t = 0.0;
  double sup_riem = 0.0;
  double r = 0.0;
};

struct BlowUpPoint {
  std::size_t index = 0;  // position in the history
  double t = 0.0;
  double r = 0.0;
  double B = 0.0;  // |Riem|(t_k, r_k)
};

/// s = 0 slice of the parabolic rescaling g_k(s) = B g(t_k + s / B).
/// Radii stretch by sqrt(B) and curvatures shrink by B. f and u are unchanged.
struct RescaledProfile {
  double t = 0.0;
  double B = 0.0;
  std::vector<double> r;  // sqrt(B) r
  std::vector<double> f;
  std::vector<double> z;  // z / sqrt(B); |grad u| has units of 1/length
  std::vector<double> u;
  std::vector<double> lambda1;
  std::vector<double> lambda2;
  std::vector<double> riem;  // |Riem| / B
  /// -C_lambda2_minus / (B (1 + t)); shrinks to 0 as B grows.
  std::optional<double> lambda2_lower_bound;
};

/// Candidate essential blow-up sequence.
struct BlowUpRecord {
  double C_used = 1.0;
  std::vector<BlowUpPoint> sequence;
  std::vector<RescaledProfile> rescaled_profiles;
  std::string termination;
};

/// Selects the history entries (t_k, r_k) whose curvature B_k dominates the
/// running supremum up to factor C:
///   sup_{t <= t_k} |Riem| <= C * B_k,  B_k > 0.
inline BlowUpRecord track_blowup(std::span<const HistoryEntry> history, double C) {
  if (!(C >= 1.0)) throw InvalidArgument("blow-up constant C must be >= 1");
  if (history.empty()) throw InvalidArgument("blow-up scan needs a non-empty history");
  BlowUpRecord rec;
  rec.C_used = C;
  double running = 0.0;
  for (std::size_t j = 0; j < history.size(); ++j) {
    const HistoryEntry& h = history[j];
    running = std::max(running, h.sup_riem);
    if (h.sup_riem > 0.0 && running <= C * h.sup_riem) {
      rec.sequence.push_back({j, h.t, h.r, h.sup_riem});
    }
  }
  return rec;
}

inline RescaledProfile rescale(const FlowState& s, const FlowParameters& p, double B,
                               const BoundConstants* constants = nullptr) {
  if (!(B > 0.0) || !std::isfinite(B)) {
    throw InvalidArgument("rescale: B must be positive and finite");
  }
  const CurvatureProfile c = curvature(s, p);
  const double root = std::sqrt(B);
  RescaledProfile out;
  out.t = s.t;
  out.B = B;
  out.f = s.f;
  out.u = reconstruct_u(s);
  const std::size_t m = s.size();
  out.r.resize(m);
  out.z.resize(m);
  out.lambda1.resize(m);
  out.lambda2.resize(m);
  out.riem.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.r[i] = root * s.g().r(i);
    out.z[i] = s.z[i] / root;
    out.lambda1[i] = c.lambda1[i] / B;
    out.lambda2[i] = c.lambda2[i] / B;
    out.riem[i] = std::sqrt(c.riem_norm_sq[i]) / B;
  }
  if (constants) {
    out.lambda2_lower_bound = -constants->C_lambda2_minus / (B * (1.0 + s.t));
  }
  return out;
}

}  // namespace listflow
