#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "listflow/cli/config.hpp"
#include "listflow/cli/csv.hpp"
#include "listflow/convergence.hpp"
#include "listflow/dynamics.hpp"
#include "listflow/geometry.hpp"
#include "listflow/monitors.hpp"
#include "listflow/singularity.hpp"
#include "listflow/state.hpp"

namespace listflow::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kCompleted = 0,
  kReportFailed = 1,  // check: decay report failed
  kConfigError = 2,
  kMinimalSphere = 10,
  kNonFinite = 11,
  kCflCollapse = 12,
  kMonitorViolation = 13,
};

inline constexpr const char* kOutputDirEnv = "LISTFLOW_OUTPUT_DIR";

/// Output directory: the environment override, else the config value.
inline fs::path output_dir(const RunConfig& c) {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return c.output.dir;
}

inline int exit_code(Termination t) {
  switch (t) {
    case Termination::Completed: return kCompleted;
    case Termination::MinimalSphere: return kMinimalSphere;
    case Termination::NonFinite: return kNonFinite;
    case Termination::CflCollapse: return kCflCollapse;
    case Termination::Stopped: return kMonitorViolation;
  }
  return kConfigError;
}

/// Per-node snapshot table with the full diagnostic column schema.
inline void write_snapshot(const std::string& path, const FlowState& s,
                           const FlowParameters& p) {
  const CurvatureProfile c = curvature(s, p);
  const MassProfile m = masses(s, p);
  const std::vector<double> u = reconstruct_u(s);
  const std::vector<double> zeta = zeta_profile(s);
  const std::vector<double> zprime = hessian_profile(s);
  const std::vector<double> y = y_profile(s, c);
  CsvWriter w(path, {"t", "r", "f", "z", "u", "lambda1", "lambda2", "R", "S",
                     "riem_norm_sq", "H", "mu_BY", "mu_MS", "zeta", "zprime", "y"});
  for (std::size_t i = 0; i < s.size(); ++i) {
    w.row({s.t, s.g().r(i), s.f[i], s.z[i], u[i], c.lambda1[i], c.lambda2[i], c.R[i],
           c.S[i], c.riem_norm_sq[i], m.H[i], m.mu_BY[i], m.mu_MS[i], zeta[i],
           zprime[i], y[i]});
  }
}

inline HistoryEntry history_entry(const FlowState& s, const FlowParameters& p) {
  const CurvatureProfile c = curvature(s, p);
  const auto it = std::max_element(c.riem_norm_sq.begin(), c.riem_norm_sq.end());
  const auto node = static_cast<std::size_t>(it - c.riem_norm_sq.begin());
  return {s.t, std::sqrt(*it), s.g().r(node)};
}

struct Prepared {
  std::shared_ptr<const RadialGrid> grid;
  FlowState initial;
};

// Builds grid and initial data; throws ConfigError for data the config
// cannot produce. MinimalSphereError passes through.
inline Prepared prepare(const RunConfig& c) {
  Prepared out;
  try {
    out.grid = c.grid.build();
    out.initial = make_initial_data(c.perturbed_initial(), c.physics, out.grid);
    (void)masses(out.initial, c.physics);
  } catch (const MinimalSphereError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(c.source, 0, "", e.what());
  }
  return out;
}

/// Evolves the configured run, writing into the output directory:
///   config.ini       verbatim copy of the config
///   timeseries.csv   one audited row per output time
///   history.csv      (t, sup |Riem|, attaining r) for every step
///   snapshots/       per-node tables at each output time
///   summary.txt      termination reason and step statistics
inline int run(const RunConfig& c, std::ostream& log) {
  Prepared prep;
  try {
    prep = prepare(c);
  } catch (const MinimalSphereError& e) {
    log << "minimal sphere in initial data: " << e.what() << '\n';
    return kMinimalSphere;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const FlowParameters& p = c.physics;
  const BoundConstants k = compute_constants(prep.initial, p);
  const double tol = c.monitors.tol.value_or(default_tolerance(*prep.grid));
  ZetaHypothesis hypothesis;
  if (c.monitors.zeta_bound) {
    const double b = *c.monitors.zeta_bound;
    hypothesis = [b](double) { return b; };
  }

  const fs::path dir = output_dir(c);
  fs::create_directories(dir);
  if (c.output.snapshots) fs::create_directories(dir / "snapshots");
  {
    std::ofstream cfg(dir / "config.ini", std::ios::binary | std::ios::trunc);
    cfg << c.text;
  }
  CsvWriter series((dir / "timeseries.csv").string(),
                   {"t", "dt", "sup_riem", "min_f", "max_f", "sup_z", "min_S",
                    "min_lambda2", "min_H_off_origin", "max_zeta", "m1", "m2", "m3a",
                    "m3b", "m4", "m5", "m6", "adm_estimate"});
  CsvWriter history((dir / "history.csv").string(), {"t", "sup_riem", "r"});

  std::size_t outputs = 0;
  std::size_t violating_rows = 0;
  bool fatal_hit = false;
  Observers obs;
  obs.per_step.push_back([&](const FlowState& s, const StepInfo&) {
    const HistoryEntry h = history_entry(s, p);
    history.row({h.t, h.sup_riem, h.r});
    return ObserverAction::Continue;
  });
  obs.on_output.push_back([&](const FlowState& s, const StepInfo& info) {
    const DiagnosticsRecord d = audit(s, k, p, tol, hypothesis);
    series.row({d.t, info.dt, d.sup_riem, d.min_f, d.max_f, d.sup_z, d.min_S,
                d.min_lambda2, d.min_H_off_origin, d.max_zeta, d.m1, d.m2, d.m3a, d.m3b,
                d.m4, d.m5, d.m6, d.adm_estimate});
    if (c.output.snapshots) {
      char name[32];
      std::snprintf(name, sizeof name, "snap_%06zu.csv", outputs);
      write_snapshot((dir / "snapshots" / name).string(), s, p);
    }
    ++outputs;
    const auto v = d.violations();
    if (!v.empty()) {
      ++violating_rows;
      log << "t = " << num(d.t) << ": bound violated:";
      for (const auto& name : v) log << ' ' << name;
      log << '\n';
      if (c.monitors.fatal) {
        fatal_hit = true;
        return ObserverAction::Stop;
      }
    }
    return ObserverAction::Continue;
  });

  const EvolveSummary sum = evolve(prep.initial, p, obs);
  series.flush();
  history.flush();
  {
    std::ofstream out(dir / "summary.txt", std::ios::binary | std::ios::trunc);
    out << "termination = " << to_string(sum.reason) << '\n';
    if (!sum.detail.empty()) out << "detail = " << sum.detail << '\n';
    out << "t_final = " << num(sum.final_state.t) << '\n';
    out << "steps = " << sum.steps << '\n';
    out << "dt_min = " << num(sum.steps ? sum.dt_min : 0.0) << '\n';
    out << "dt_max = " << num(sum.dt_max) << '\n';
    out << "outputs = " << outputs << '\n';
    out << "violating_rows = " << violating_rows << '\n';
    out << "tol = " << num(tol) << '\n';
  }
  log << "termination: " << to_string(sum.reason);
  if (!sum.detail.empty()) log << " (" << sum.detail << ")";
  log << ", t = " << num(sum.final_state.t) << ", steps = " << sum.steps << '\n';
  if (fatal_hit) return kMonitorViolation;
  return exit_code(sum.reason);
}

inline void print_constants(const BoundConstants& k, std::ostream& out) {
  out << "C_z_plus = " << num(k.C_z_plus) << '\n'
      << "C_S_minus = " << num(k.C_S_minus) << '\n'
      << "C_f_minus = " << num(k.C_f_minus) << '\n'
      << "C_f_plus = " << num(k.C_f_plus) << '\n'
      << "p = " << num(k.p) << '\n'
      << "C_lambda2_minus = " << num(k.C_lambda2_minus) << '\n'
      << "C_zeta_plus = " << num(k.C_zeta_plus) << '\n'
      << "initial_S_nonnegative = " << (k.initial_S_nonnegative ? "yes" : "no") << '\n'
      << "initial_mass_nonnegative = " << (k.initial_mass_nonnegative ? "yes" : "no")
      << '\n';
}

inline void print_decay(const char* name, const DecayFit& f, std::ostream& out) {
  out << name << ": ";
  if (f.exact) {
    out << "exact (tail identically zero)\n";
    return;
  }
  out << "exponent = " << num(f.exponent) << ", required <= " << num(f.required)
      << ", samples = " << f.samples << ", " << (f.ok ? "ok" : "FAIL") << '\n';
}

/// Initial constants and tail decay report, without evolving.
inline int check(const RunConfig& c, std::ostream& out) {
  Prepared prep;
  try {
    prep = prepare(c);
  } catch (const MinimalSphereError& e) {
    out << "minimal sphere in initial data: " << e.what() << '\n';
    return kMinimalSphere;
  } catch (const ConfigError& e) {
    out << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  const BoundConstants k = compute_constants(prep.initial, c.physics);
  print_constants(k, out);
  const AsymptoticsReport rep = validate_asymptotics(prep.initial, c.physics);
  print_decay("decay f^2 - f_inf^2", rep.metric, out);
  print_decay("decay z", rep.field, out);
  out << "asymptotics: " << (rep.passed() ? "ok" : "FAIL") << '\n';
  return rep.passed() ? kCompleted : kReportFailed;
}

inline void print_order(const char* name, const OrderEstimate& e, std::ostream& out) {
  out << name << ": errors =";
  for (double v : e.errors) out << ' ' << num(v);
  if (e.exact) {
    out << ", order = exact\n";
    return;
  }
  out << ", orders =";
  for (double v : e.orders) out << ' ' << num(v);
  out << (e.pre_asymptotic ? ", pre-asymptotic" : ", asymptotic") << '\n';
}

/// Runs the configured physics at each level and reports observed orders.
inline int converge_cmd(const RunConfig& c, const std::vector<std::size_t>& levels,
                        std::ostream& out) {
  const GridFactory factory = [&](std::size_t n) {
    GridSpec g = c.grid;
    g.intervals = n;
    return g.build();
  };
  ConvergenceReport rep;
  try {
    rep = converge(factory, c.perturbed_initial(), c.physics, levels);
  } catch (const MinimalSphereError& e) {
    out << "minimal sphere in initial data: " << e.what() << '\n';
    return kMinimalSphere;
  } catch (const InvalidArgument& e) {
    out << "error: " << e.what() << '\n';
    return kConfigError;
  }
  out << "levels =";
  for (std::size_t n : rep.levels) out << ' ' << n;
  out << "\nt = " << num(rep.t) << '\n';
  for (std::size_t i = 0; i < rep.levels.size(); ++i) {
    out << "N = " << rep.levels[i] << ": " << to_string(rep.terminations[i]) << '\n';
  }
  print_order("f", rep.f, out);
  print_order("z", rep.z, out);
  print_order("bianchi", rep.bianchi, out);
  for (Termination t : rep.terminations) {
    if (t != Termination::Completed) return exit_code(t);
  }
  return kCompleted;
}

inline std::vector<HistoryEntry> read_history(const fs::path& path) {
  const CsvTable t = read_csv(path.string());
  const std::size_t ct = t.column("t"), cs = t.column("sup_riem"), cr = t.column("r");
  std::vector<HistoryEntry> out;
  for (const auto& row : t.rows) out.push_back({row[ct], row[cs], row[cr]});
  return out;
}

// Rebuilds a state from a snapshot table on the run's grid.
inline FlowState state_from_snapshot(const CsvTable& t,
                                     std::shared_ptr<const RadialGrid> grid) {
  const std::vector<double> r = t.values("r");
  if (r.size() != grid->size()) throw Error("snapshot does not match the run grid");
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (std::abs(r[i] - grid->r(i)) > 1e-12 * std::max(1.0, grid->r_max())) {
      throw Error("snapshot radii do not match the run grid");
    }
  }
  FlowState s;
  s.t = t.rows.front()[t.column("t")];
  s.f = t.values("f");
  s.z = t.values("z");
  s.grid = std::move(grid);
  require_valid(s);
  return s;
}

/// Scans a run directory's history for essential blow-up candidates and
/// writes blowup/report.txt plus one rescaled table per candidate that has a
/// snapshot at its time. C defaults to the run's [monitors] blowup_c.
inline int rescale_cmd(const fs::path& dir, std::optional<double> C_override,
                       std::ostream& out) {
  if (C_override && !(*C_override >= 1.0)) {
    out << "error: blow-up constant C must be >= 1\n";
    return kConfigError;
  }
  if (!fs::exists(dir / "history.csv")) {
    out << "error: no history.csv in " << dir.string() << '\n';
    return kConfigError;
  }
  RunConfig c;
  std::vector<HistoryEntry> history;
  try {
    c = load_config(dir / "config.ini", false);
    history = read_history(dir / "history.csv");
  } catch (const Error& e) {
    out << "error: " << e.what() << '\n';
    return kConfigError;
  }
  if (history.empty()) {
    out << "error: history.csv has no rows\n";
    return kConfigError;
  }
  const BlowUpRecord rec = track_blowup(history, C_override.value_or(c.monitors.blowup_c));
  const auto grid = c.grid.build();

  // Snapshots by time; exact matches only, since both files store the same
  // round-trip decimal.
  std::map<double, fs::path> snaps;
  if (fs::exists(dir / "snapshots")) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir / "snapshots")) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f);
      std::string header, first;
      std::getline(in, header);
      std::getline(in, first);
      snaps.emplace(std::strtod(first.c_str(), nullptr), f);
    }
  }
  std::optional<BoundConstants> consts;
  if (auto it = snaps.find(0.0); it != snaps.end()) {
    consts = compute_constants(state_from_snapshot(read_csv(it->second.string()), grid),
                               c.physics);
  }

  std::string termination = "unknown";
  {
    std::ifstream in(dir / "summary.txt");
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("termination = ", 0) == 0) termination = line.substr(14);
    }
  }

  const fs::path bdir = dir / "blowup";
  fs::create_directories(bdir);
  std::ofstream rep(bdir / "report.txt", std::ios::binary | std::ios::trunc);
  rep << "C_used = " << num(rec.C_used) << '\n';
  rep << "termination = " << termination << '\n';
  rep << "candidates = " << rec.sequence.size() << '\n';
  rep << "sensitivity =";
  for (double C : {1.0, 1.5, 2.0, 4.0, 8.0}) {
    rep << ' ' << num(C) << ':' << track_blowup(history, C).sequence.size();
  }
  rep << '\n';
  if (rec.sequence.empty()) {
    rep << "no blow-up candidates\n";
    out << "no blow-up candidates\n";
    return kCompleted;
  }
  rep << "k,index,t,r,B,rescaled\n";
  std::size_t written = 0;
  for (std::size_t k = 0; k < rec.sequence.size(); ++k) {
    const BlowUpPoint& bp = rec.sequence[k];
    std::string file = "-";
    if (auto it = snaps.find(bp.t); it != snaps.end()) {
      const FlowState s = state_from_snapshot(read_csv(it->second.string()), grid);
      const RescaledProfile prof =
          rescale(s, c.physics, bp.B, consts ? &*consts : nullptr);
      char name[32];
      std::snprintf(name, sizeof name, "rescaled_%04zu.csv", k);
      file = name;
      CsvWriter w((bdir / name).string(),
                  {"t", "B", "r", "f", "z", "u", "lambda1", "lambda2", "riem",
                   "lambda2_lower_bound"});
      const double lb = prof.lambda2_lower_bound.value_or(std::nan(""));
      for (std::size_t i = 0; i < prof.r.size(); ++i) {
        w.row({prof.t, prof.B, prof.r[i], prof.f[i], prof.z[i], prof.u[i],
               prof.lambda1[i], prof.lambda2[i], prof.riem[i], lb});
      }
      ++written;
    }
    rep << k << ',' << bp.index << ',' << num(bp.t) << ',' << num(bp.r) << ','
        << num(bp.B) << ',' << file << '\n';
  }
  out << rec.sequence.size() << " blow-up candidates, " << written
      << " rescaled profiles written to " << bdir.string() << '\n';
  return kCompleted;
}

}  // namespace listflow::cli
