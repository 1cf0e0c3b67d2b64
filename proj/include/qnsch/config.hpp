#pragma once
/// @file config.hpp
/// @brief Run configuration (JSON), scenario defaults and initial conditions.

#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnsch/diagnostics.hpp"
#include "qnsch/multigrid.hpp"
#include "qnsch/schemes.hpp"

namespace qnsch {

/// Which side of the interface carries the heavier fluid. The phase c = 1 sits below
/// the interface for the capillary and RT profiles; the pair (and viscosities with it)
/// is swapped when needed so the requested side is heavy.
enum class Orientation { as_given, heavy_below, heavy_above };

enum class GuardMode { warn, fail };

struct RunConfig {
  Scheme scheme = Scheme::primitive;
  int m1 = 64, m2 = 64;
  double Lx = 1.0, Ly = 1.0;
  double dt = 1e-3;
  double t_end = 0.0;
  int report_every = 1;
  NondimGroups groups;
  FluidPair fluid;
  BcSet bc = BcSet::channel();
  GravityPlacement projection_gravity = GravityPlacement::predictor;
  ScenarioKind scenario = ScenarioKind::capillary;
  Orientation orientation = Orientation::as_given;
  double H0 = 0.01;             ///< capillary amplitude
  double R0 = 0.25;             ///< droplet radius
  double cx = 0.5, cy = 0.5;    ///< droplet center
  double rt_amplitude = 0.1;    ///< RT perturbation, in units of Lx
  MgConfig mg;
  std::string out_dir = "out";
  std::string csv_name = "timeseries.csv";
  std::vector<double> snapshot_times;
  GuardMode guard = GuardMode::fail;
  double mass_tol = 1e-8;       ///< per-step relative drift of (rho, 1)
  double energy_slack = 10.0;   ///< allowed increase, in units of mg.tol |E|

  GridSpec grid() const { return GridSpec::make(m1, m2, Lx, Ly); }

  /// Number of steps; t_end/dt must be an integer up to rounding of the quotient.
  long steps() const {
    double q = t_end / dt;
    double n = std::round(q);
    if (std::abs(q - n) > 1e-9 * std::max(1.0, q)) throw ConfigError("time.t_end / time.dt is not an integer");
    return static_cast<long>(n);
  }

  /// Step index of each snapshot time.
  std::vector<long> snapshot_steps() const {
    std::vector<long> s;
    for (double t : snapshot_times) {
      double q = t / dt;
      double n = std::round(q);
      if (std::abs(q - n) > 1e-9 * std::max(1.0, std::abs(q)))
        throw ConfigError("snapshot time " + std::to_string(t) + " is not a multiple of dt");
      if (t < 0.0 || t > t_end * (1.0 + 1e-12))
        throw ConfigError("snapshot time " + std::to_string(t) + " lies outside [0, t_end]");
      s.push_back(static_cast<long>(n));
    }
    return s;
  }

  SchemeParams params() const {
    SchemeParams p;
    p.groups = groups;
    p.fluid = fluid;
    p.dt = dt;
    p.scheme = scheme;
    p.bc = bc;
    p.projection_gravity = projection_gravity;
    return p;
  }

  void validate() const {
    GridSpec g = grid();
    params().validate();
    mg.validate();
    if (!(t_end >= 0.0)) throw ConfigError("time.t_end must be >= 0");
    if (report_every < 1) throw ConfigError("time.report_every must be >= 1");
    steps();
    snapshot_steps();
    if (scenario == ScenarioKind::rayleigh_taylor && std::abs(g.Ly - 4.0 * g.Lx) > 1e-12 * g.Ly)
      throw ConfigError("rayleigh_taylor needs Ly = 4 Lx");
    if (scenario == ScenarioKind::droplet && !(R0 > 0.0)) throw ConfigError("droplet radius must be positive");
    if (!(mass_tol > 0.0) || !(energy_slack >= 0.0)) throw ConfigError("guard tolerances must be positive");
  }
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

template <class T>
void get_opt(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline void check_keys(const json& j, const char* where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : keys) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(std::string("unknown key '") + it.key() + "' in " + where);
  }
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "primitive") return Scheme::primitive;
  if (s == "projection") return Scheme::projection;
  throw ConfigError("unknown scheme '" + s + "' (primitive|projection)");
}

inline ScenarioKind parse_scenario(const std::string& s) {
  for (ScenarioKind k : {ScenarioKind::capillary, ScenarioKind::droplet, ScenarioKind::rayleigh_taylor,
                         ScenarioKind::convergence, ScenarioKind::custom})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown scenario '" + s + "'");
}

inline BcSet parse_bc(const std::string& s) {
  if (s == "channel") return BcSet::channel();
  if (s == "walls") return BcSet::box();
  if (s == "neumann") return BcSet::slip_box();
  if (s == "periodic") return BcSet::fully_periodic();
  throw ConfigError("unknown bc '" + s + "' (channel|walls|neumann|periodic)");
}

inline Orientation parse_orientation(const std::string& s) {
  if (s == "as_given") return Orientation::as_given;
  if (s == "heavy_below") return Orientation::heavy_below;
  if (s == "heavy_above") return Orientation::heavy_above;
  throw ConfigError("unknown orientation '" + s + "'");
}

inline void orient(FluidPair& f, Orientation o) {
  bool heavy_c1 = f.rho1 > f.rho2;
  bool want_c1 = o == Orientation::heavy_below;
  if (o != Orientation::as_given && f.rho1 != f.rho2 && heavy_c1 != want_c1) {
    std::swap(f.rho1, f.rho2);
    std::swap(f.mu1, f.mu2);
  }
}

}  // namespace detail

/// Scenario defaults before any JSON override.
inline RunConfig scenario_defaults(ScenarioKind k) {
  RunConfig c;
  c.scenario = k;
  const double eps = 0.01;
  c.groups = NondimGroups{100.0, 1.0, 1.0, eps, 1.0 / eps, eps, 1.0};
  switch (k) {
    case ScenarioKind::capillary:
      c.fluid = FluidPair{1.0, 10.0, 1.0, 10.0};
      c.orientation = Orientation::heavy_below;
      c.m1 = c.m2 = 128;
      break;
    case ScenarioKind::droplet:
      c.fluid = FluidPair{1.0, 10.0, 1.0, 10.0};
      c.Ly = 2.0;
      c.m1 = 128;
      c.m2 = 256;
      break;
    case ScenarioKind::rayleigh_taylor:
      c.fluid = FluidPair{1.0, 3.0, 1.0, 3.0};
      c.orientation = Orientation::heavy_above;
      c.groups.Re = 3000.0;
      c.Ly = 4.0;
      c.m1 = 64;
      c.m2 = 256;
      break;
    case ScenarioKind::convergence:
      c.fluid = FluidPair{1.0, 1.0, 1.0, 1.0};
      c.groups = NondimGroups{1.0, 1.0, 1.0, 0.1, 10.0, 0.1, 1.0};
      c.bc = BcSet::slip_box();
      c.m1 = c.m2 = 16;
      c.dt = 1.0 / 16.0;
      c.t_end = 1.0;
      break;
    case ScenarioKind::custom: break;
  }
  return c;
}

/// Parses a config document. Unspecified fields keep the scenario's defaults; "eta"
/// may be a number or "capillary" (derived from the density pair).
inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::get_opt;
  using nlohmann::json;
  detail::check_keys(j, "config", {"scheme", "grid", "time", "physics", "bc", "scenario", "multigrid",
                                   "output", "guards", "projection_gravity"});
  std::string kind = "custom";
  if (j.contains("scenario")) {
    detail::check_keys(j["scenario"], "scenario", {"kind", "orientation", "H0", "R0", "center", "amplitude"});
    get_opt(j["scenario"], "kind", kind);
  }
  RunConfig c = scenario_defaults(detail::parse_scenario(kind));

  std::string s;
  if (j.contains("scheme")) {
    get_opt(j, "scheme", s);
    c.scheme = detail::parse_scheme(s);
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    detail::check_keys(g, "grid", {"m1", "m2", "m", "Lx", "Ly"});
    get_opt(g, "Lx", c.Lx);
    get_opt(g, "Ly", c.Ly);
    if (g.contains("m")) {
      int m = 0;
      get_opt(g, "m", m);
      c.m1 = m;
      c.m2 = static_cast<int>(std::lround(m * c.Ly / c.Lx));
    }
    get_opt(g, "m1", c.m1);
    get_opt(g, "m2", c.m2);
  }
  if (j.contains("time")) {
    detail::check_keys(j["time"], "time", {"dt", "t_end", "report_every"});
    get_opt(j["time"], "dt", c.dt);
    get_opt(j["time"], "t_end", c.t_end);
    get_opt(j["time"], "report_every", c.report_every);
  }
  bool eta_capillary_rule = false;
  if (c.scenario == ScenarioKind::capillary || c.scenario == ScenarioKind::droplet ||
      c.scenario == ScenarioKind::rayleigh_taylor)
    eta_capillary_rule = true;
  if (j.contains("physics")) {
    const json& p = j["physics"];
    detail::check_keys(p, "physics", {"Re", "We", "Fr", "M", "Pe", "epsilon", "eta", "rho1", "rho2", "mu1", "mu2"});
    get_opt(p, "Re", c.groups.Re);
    get_opt(p, "We", c.groups.We);
    get_opt(p, "Fr", c.groups.Fr);
    if (p.contains("epsilon")) {
      get_opt(p, "epsilon", c.groups.epsilon);
      c.groups.M = c.groups.epsilon;
      c.groups.Pe = 1.0 / c.groups.epsilon;
    }
    get_opt(p, "M", c.groups.M);
    get_opt(p, "Pe", c.groups.Pe);
    if (p.contains("eta")) {
      if (p["eta"].is_string()) {
        if (p["eta"].get<std::string>() != "capillary") throw ConfigError("eta must be a number or \"capillary\"");
        eta_capillary_rule = true;
      } else {
        get_opt(p, "eta", c.groups.eta);
        eta_capillary_rule = false;
      }
    }
    get_opt(p, "rho1", c.fluid.rho1);
    get_opt(p, "rho2", c.fluid.rho2);
    get_opt(p, "mu1", c.fluid.mu1);
    get_opt(p, "mu2", c.fluid.mu2);
  }
  if (j.contains("bc")) {
    get_opt(j, "bc", s);
    c.bc = detail::parse_bc(s);
  }
  if (j.contains("projection_gravity")) {
    get_opt(j, "projection_gravity", s);
    if (s == "predictor") c.projection_gravity = GravityPlacement::predictor;
    else if (s == "correction") c.projection_gravity = GravityPlacement::correction;
    else throw ConfigError("projection_gravity must be predictor or correction");
  }
  if (j.contains("scenario")) {
    const json& sc = j["scenario"];
    if (sc.contains("orientation")) {
      get_opt(sc, "orientation", s);
      c.orientation = detail::parse_orientation(s);
    }
    get_opt(sc, "H0", c.H0);
    get_opt(sc, "R0", c.R0);
    get_opt(sc, "amplitude", c.rt_amplitude);
    if (sc.contains("center")) {
      std::vector<double> ctr;
      get_opt(sc, "center", ctr);
      if (ctr.size() != 2) throw ConfigError("scenario.center needs two numbers");
      c.cx = ctr[0];
      c.cy = ctr[1];
    }
  }
  if (j.contains("multigrid")) {
    const json& m = j["multigrid"];
    detail::check_keys(m, "multigrid", {"n_levels", "pre_smooths", "post_smooths", "coarse_sweeps", "tol",
                                        "max_cycles", "newton_iters", "newton_tol"});
    get_opt(m, "n_levels", c.mg.n_levels);
    get_opt(m, "pre_smooths", c.mg.pre_smooths);
    get_opt(m, "post_smooths", c.mg.post_smooths);
    get_opt(m, "coarse_sweeps", c.mg.coarse_sweeps);
    get_opt(m, "tol", c.mg.tol);
    get_opt(m, "max_cycles", c.mg.max_cycles);
    get_opt(m, "newton_iters", c.mg.newton_iters);
    get_opt(m, "newton_tol", c.mg.newton_tol);
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    detail::check_keys(o, "output", {"directory", "csv_name", "snapshot_times"});
    get_opt(o, "directory", c.out_dir);
    get_opt(o, "csv_name", c.csv_name);
    get_opt(o, "snapshot_times", c.snapshot_times);
  }
  if (j.contains("guards")) {
    const json& g = j["guards"];
    detail::check_keys(g, "guards", {"mode", "mass_tol", "energy_slack"});
    if (g.contains("mode")) {
      get_opt(g, "mode", s);
      if (s == "warn") c.guard = GuardMode::warn;
      else if (s == "fail") c.guard = GuardMode::fail;
      else throw ConfigError("guards.mode must be warn or fail");
    }
    get_opt(g, "mass_tol", c.mass_tol);
    get_opt(g, "energy_slack", c.energy_slack);
  }

  detail::orient(c.fluid, c.orientation);
  if (eta_capillary_rule) c.groups.eta = eta_capillary(c.fluid.rho1, c.fluid.rho2);
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Initial conditions

/// Fresh state for the configured scenario, ghosts filled. Custom starts at c = 0.5.
inline State init_scenario(const RunConfig& cfg) {
  cfg.validate();
  GridSpec g = cfg.grid();
  State s(g);
  const double eps = cfg.groups.epsilon;
  const double pi = std::numbers::pi;
  for_cells(g, [&](int i, int j) {
    double x = g.xc(i), y = g.yc(j);
    double c = 0.5;
    switch (cfg.scenario) {
      case ScenarioKind::capillary: {
        double yt = 0.5 * g.Ly - cfg.H0 * std::cos(2.0 * pi * x / g.Lx);
        c = 0.5 * (1.0 - std::tanh((y - yt) / (2.0 * std::sqrt(2.0 * eps))));
        break;
      }
      case ScenarioKind::droplet: {
        double r = std::hypot(x - cfg.cx, y - cfg.cy);
        c = 0.5 * (1.0 - std::tanh((r - cfg.R0) / (2.0 * std::sqrt(2.0) * eps)));
        break;
      }
      case ScenarioKind::rayleigh_taylor: {
        double yt = 2.0 * g.Lx + cfg.rt_amplitude * g.Lx * std::cos(2.0 * pi * x / g.Lx);
        c = 0.5 * (1.0 - std::tanh((y - yt) / (2.0 * std::sqrt(2.0 * eps))));
        break;
      }
      case ScenarioKind::convergence:
        c = std::cos(2.0 * pi * x) + std::cos(2.0 * pi * y);
        break;
      case ScenarioKind::custom: break;
    }
    s.c(i, j) = c;
  });
  fill_state_ghosts(s, cfg.params());
  return s;
}

}  // namespace qnsch
