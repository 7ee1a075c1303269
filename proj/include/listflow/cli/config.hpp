#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "listflow/errors.hpp"
#include "listflow/grid.hpp"
#include "listflow/state.hpp"

namespace listflow::cli {

/// Rejected configuration. `line` is 0 when the offending key is absent.
class ConfigError : public Error {
 public:
  ConfigError(std::string source, std::size_t line, std::string field,
              const std::string& message)
      : Error(format(source, line, field, message)),
        source_(std::move(source)),
        line_(line),
        field_(std::move(field)) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(const std::string& source, std::size_t line,
                            const std::string& field, const std::string& message) {
    std::string out = source;
    if (line > 0) out += ":" + std::to_string(line);
    if (!field.empty()) out += ": " + field;
    return out + ": " + message;
  }

  std::string source_;
  std::size_t line_;
  std::string field_;
};

struct GridSpec {
  double r_max = 40.0;
  std::size_t intervals = 1000;
  std::string stretch = "uniform";  // uniform | power | sinh
  double stretch_param = 1.0;

  std::shared_ptr<const RadialGrid> build() const {
    std::optional<StretchMap> map;
    if (stretch == "power") map = StretchMap::power(stretch_param);
    if (stretch == "sinh") map = StretchMap::sinh(stretch_param);
    return std::make_shared<const RadialGrid>(build_grid(r_max, intervals, map));
  }
};

struct OutputSpec {
  std::string dir = "listflow_out";
  bool snapshots = true;
};

struct MonitorSpec {
  std::optional<double> tol;  // default 10 h^2
  bool fatal = false;
  double blowup_c = 2.0;
  std::optional<double> zeta_bound;  // constant hypothesis F for n >= 3
};

struct RunConfig {
  GridSpec grid;
  FlowParameters physics;
  InitialDataSpec initial;
  OutputSpec output;
  MonitorSpec monitors;
  std::uint64_t seed = 0;
  double perturbation = 0.0;  // relative amplitude jitter, 0 disables
  std::string source = "<config>";
  std::string text;  // verbatim config, copied into run directories

  /// Initial data after applying the seeded amplitude perturbation.
  InitialDataSpec perturbed_initial() const {
    InitialDataSpec s = initial;
    if (perturbation != 0.0) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> jitter(-1.0, 1.0);
      s.metric_amplitude *= 1.0 + perturbation * jitter(rng);
      s.field_amplitude *= 1.0 + perturbation * jitter(rng);
    }
    return s;
  }
};

namespace detail {

// Line of `key` inside `[section]`, or 0.
inline std::size_t locate(const std::string& text, const std::string& section,
                          const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  std::size_t no = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      current = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq != std::string::npos && current == section && trim(t.substr(0, eq)) == key) {
      return no;
    }
  }
  return 0;
}

class Reader {
 public:
  Reader(const boost::property_tree::ptree& tree, const std::string& text,
         const std::string& source)
      : tree_(tree), text_(text), source_(source) {}

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& message) const {
    throw ConfigError(source_, locate(text_, section, key), section + "." + key,
                      message);
  }

  bool has(const std::string& section, const std::string& key) const {
    used_.insert(section + "." + key);
    const auto sec = tree_.get_child_optional(section);
    return sec && sec->get_child_optional(key);
  }

  std::string raw(const std::string& section, const std::string& key) const {
    return tree_.get_child(section).get_child(key).data();
  }

  template <class T>
  void number(const std::string& section, const std::string& key, T& out) const {
    if (!has(section, key)) return;
    const std::string v = raw(section, key);
    std::istringstream in(v);
    in.imbue(std::locale::classic());
    T parsed{};
    in >> parsed;
    if (in.fail() || !(in >> std::ws).eof()) fail(section, key, "not a number: '" + v + "'");
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(parsed)) fail(section, key, "must be finite");
    }
    out = parsed;
  }

  void text(const std::string& section, const std::string& key, std::string& out) const {
    if (has(section, key)) out = raw(section, key);
  }

  void flag(const std::string& section, const std::string& key, bool& out) const {
    if (!has(section, key)) return;
    const std::string v = raw(section, key);
    if (v == "true" || v == "1" || v == "yes") {
      out = true;
    } else if (v == "false" || v == "0" || v == "no") {
      out = false;
    } else {
      fail(section, key, "expected true/false, got '" + v + "'");
    }
  }

  // Rejects sections and keys that were never queried.
  void reject_unknown() const {
    for (const auto& [section, keys] : tree_) {
      if (keys.empty() && !keys.data().empty()) {
        throw ConfigError(source_, 0, section, "key outside any section");
      }
      for (const auto& [key, value] : keys) {
        if (!used_.count(section + "." + key)) fail(section, key, "unknown key");
      }
    }
  }

 private:
  const boost::property_tree::ptree& tree_;
  const std::string& text_;
  const std::string& source_;
  mutable std::set<std::string> used_;
};

}  // namespace detail

/// Parses an INI-style config. Relative table paths resolve against `base_dir`;
/// `check_files` = false skips the existence check on them.
inline RunConfig parse_config(const std::string& text, const std::string& source,
                              const std::filesystem::path& base_dir = {},
                              bool check_files = true) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  {
    std::istringstream in(text);
    try {
      pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(source, e.line(), "", e.message());
    }
  }
  RunConfig c;
  c.source = source;
  c.text = text;
  const detail::Reader rd(tree, text, source);

  rd.number("grid", "r_max", c.grid.r_max);
  long long intervals = static_cast<long long>(c.grid.intervals);
  rd.number("grid", "intervals", intervals);
  rd.text("grid", "stretch", c.grid.stretch);
  rd.number("grid", "stretch_param", c.grid.stretch_param);
  if (!(c.grid.r_max > 0.0)) rd.fail("grid", "r_max", "must be positive");
  if (intervals < static_cast<long long>(RadialGrid::kMinIntervals)) {
    rd.fail("grid", "intervals",
            "must be >= " + std::to_string(RadialGrid::kMinIntervals));
  }
  c.grid.intervals = static_cast<std::size_t>(intervals);
  if (c.grid.stretch != "uniform" && c.grid.stretch != "power" &&
      c.grid.stretch != "sinh") {
    rd.fail("grid", "stretch", "expected uniform, power or sinh");
  }
  try {
    (void)c.grid.build();
  } catch (const InvalidArgument& e) {
    rd.fail("grid", "stretch_param", e.what());
  }

  FlowParameters& p = c.physics;
  rd.number("physics", "n", p.n);
  if (p.n < 2) rd.fail("physics", "n", "must be >= 2");
  if (rd.has("physics", "k_n")) {
    rd.number("physics", "k_n", p.k_n);
    if (!(p.k_n > 0.0)) rd.fail("physics", "k_n", "must be positive");
  } else if (p.n == 2) {
    rd.fail("physics", "k_n", "required for n = 2");
  } else {
    p.k_n = FlowParameters::static_coupling(p.n);
  }
  if (rd.has("physics", "f_infinity")) {
    rd.number("physics", "f_infinity", p.f_infinity);
    if (p.n == 2 && !(p.f_infinity > 0.0)) {
      rd.fail("physics", "f_infinity", "must be positive");
    }
    if (p.n >= 3 && p.f_infinity != 1.0) {
      rd.fail("physics", "f_infinity", "must be 1 for n >= 3");
    }
  } else if (p.n == 2) {
    rd.fail("physics", "f_infinity", "required for n = 2");
  }
  rd.number("physics", "t_end", p.t_end);
  if (!(p.t_end >= 0.0)) rd.fail("physics", "t_end", "must be >= 0");
  rd.number("physics", "cfl_safety", p.cfl_safety);
  if (!(p.cfl_safety > 0.0 && p.cfl_safety <= 1.0)) {
    rd.fail("physics", "cfl_safety", "must lie in (0, 1]");
  }
  rd.number("physics", "dt_floor", p.dt_floor);
  if (!(p.dt_floor > 0.0)) rd.fail("physics", "dt_floor", "must be positive");
  rd.number("physics", "f_cap", p.f_cap);
  if (!(p.f_cap > 1.0)) rd.fail("physics", "f_cap", "must exceed 1");
  std::string outer = "dirichlet";
  rd.text("physics", "outer_boundary", outer);
  if (outer == "dirichlet") {
    p.outer = OuterBoundary::Dirichlet;
  } else if (outer == "robin") {
    p.outer = OuterBoundary::Robin;
  } else {
    rd.fail("physics", "outer_boundary", "expected dirichlet or robin");
  }

  InitialDataSpec& s = c.initial;
  std::string kind = "flat";
  rd.text("initial_data", "kind", kind);
  static const std::map<std::string, InitialDataKind> kinds = {
      {"flat", InitialDataKind::Flat},
      {"metric_bump", InitialDataKind::MetricBump},
      {"field_bump", InitialDataKind::FieldBump},
      {"combined", InitialDataKind::Combined},
      {"tabulated", InitialDataKind::Tabulated}};
  const auto k = kinds.find(kind);
  if (k == kinds.end()) {
    rd.fail("initial_data", "kind",
            "expected flat, metric_bump, field_bump, combined or tabulated");
  }
  s.kind = k->second;
  rd.number("initial_data", "metric_amplitude", s.metric_amplitude);
  if (s.uses_metric() && !(s.metric_amplitude > -1.0)) {
    rd.fail("initial_data", "metric_amplitude", "must exceed -1");
  }
  rd.number("initial_data", "field_amplitude", s.field_amplitude);
  rd.number("initial_data", "field_width", s.field_width);
  if (!(s.field_width > 0.0)) rd.fail("initial_data", "field_width", "must be positive");
  rd.text("initial_data", "table", s.table_path);
  if (s.kind == InitialDataKind::Tabulated) {
    if (s.table_path.empty()) rd.fail("initial_data", "table", "required for tabulated data");
    std::filesystem::path tp(s.table_path);
    if (tp.is_relative() && !base_dir.empty()) s.table_path = (base_dir / tp).string();
    if (check_files && !std::filesystem::exists(s.table_path)) {
      rd.fail("initial_data", "table", "no such file: " + s.table_path);
    }
  }
  long long seed = 0;
  rd.number("initial_data", "seed", seed);
  if (seed < 0) rd.fail("initial_data", "seed", "must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  rd.number("initial_data", "perturbation", c.perturbation);
  if (!(c.perturbation >= 0.0 && c.perturbation < 1.0)) {
    rd.fail("initial_data", "perturbation", "must lie in [0, 1)");
  }

  rd.text("output", "dir", c.output.dir);
  rd.number("output", "interval", p.output_interval);
  if (!(p.output_interval > 0.0)) rd.fail("output", "interval", "must be positive");
  rd.flag("output", "snapshots", c.output.snapshots);

  if (rd.has("monitors", "tol")) {
    double tol = 0.0;
    rd.number("monitors", "tol", tol);
    if (!(tol >= 0.0)) rd.fail("monitors", "tol", "must be >= 0");
    c.monitors.tol = tol;
  }
  rd.flag("monitors", "fatal", c.monitors.fatal);
  rd.number("monitors", "blowup_c", c.monitors.blowup_c);
  if (!(c.monitors.blowup_c >= 1.0)) rd.fail("monitors", "blowup_c", "must be >= 1");
  if (rd.has("monitors", "zeta_bound")) {
    double b = 0.0;
    rd.number("monitors", "zeta_bound", b);
    if (!(b > 0.0)) rd.fail("monitors", "zeta_bound", "must be positive");
    c.monitors.zeta_bound = b;
  }

  rd.reject_unknown();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path, bool check_files = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), 0, "", "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), path.parent_path(), check_files);
}

}  // namespace listflow::cli
