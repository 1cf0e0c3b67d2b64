#pragma once
/// @file driver.hpp
/// @brief Time loop, Cauchy convergence harness and operator self-test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qnsch/config.hpp"
#include "qnsch/diagnostics.hpp"
#include "qnsch/identities.hpp"
#include "qnsch/io.hpp"
#include "qnsch/multigrid.hpp"

namespace qnsch {

/// Report row for a state; energy_delta is left at zero.
inline StepReport make_report(const State& s, const SchemeParams& p, ScenarioKind k, int cycles) {
  StepReport r;
  r.time = s.time;
  Masses m = total_masses(s, p.fluid);
  r.mass_rho = m.rho;
  r.mass_rhoc = m.rhoc;
  r.energy = discrete_energy(s, p);
  r.max_div = max_divergence(s);
  r.cycles = cycles;
  r.metric = interface_metrics(s, k);
  return r;
}

struct RunResult {
  std::vector<StepReport> reports;
  State final_state;
  long steps = 0;
  long total_cycles = 0;
  int max_cycles = 0;      ///< worst step
  double worst_residual = 0.0;
  std::vector<double> mass_drift;    ///< per-step relative change of (rho, 1)
  std::vector<double> rhoc_drift;    ///< per-step relative change of (rho c, 1)
  std::vector<double> energy_delta;  ///< per-step E^{n+1} - E^n
  std::vector<double> energy;        ///< E^n for n = 0..steps
};

/// Per-step observer: step index (1-based), new state, solver statistics.
using StepHook = std::function<void(long, const State&, const SolveStats&)>;

struct RunOptions {
  bool write_files = true;  ///< CSV and snapshots under cfg.out_dir
  std::ostream* log = nullptr;
  StepHook hook;
};

/// Runs the configured scenario. Solver failures propagate (DivergenceError,
/// ConvergenceError); a guard breach throws InvariantError in fail mode and is
/// logged in warn mode. The CSV holds every row written before a failure.
inline RunResult run(const RunConfig& cfg, const RunOptions& opt = {}) {
  cfg.validate();
  const SchemeParams p = cfg.params();
  const long n_steps = cfg.steps();
  std::vector<long> snaps = cfg.snapshot_steps();
  const auto is_snap = [&](long n) { return std::find(snaps.begin(), snaps.end(), n) != snaps.end(); };
  std::unique_ptr<TimeseriesWriter> csv;
  std::filesystem::path dir(cfg.out_dir);
  if (opt.write_files) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    csv = std::make_unique<TimeseriesWriter>((dir / cfg.csv_name).string());
  }
  auto snapshot = [&](const State& s, long n) {
    if (!opt.write_files || !is_snap(n)) return;
    std::ostringstream name;
    name << "snapshot_" << std::setw(6) << std::setfill('0') << n << ".vtk";
    write_snapshot(s, (dir / name.str()).string());
  };

  RunResult res;
  State s = init_scenario(cfg);
  StepReport row = make_report(s, p, cfg.scenario, 0);
  res.reports.push_back(row);
  if (csv) csv->append(row);
  snapshot(s, 0);
  double last_energy = row.energy;
  res.energy.push_back(row.energy);
  Masses m_prev = total_masses(s, p.fluid);
  double e_prev = row.energy;

  FasSolver solver(cfg.grid(), p, cfg.mg);
  for (long n = 1; n <= n_steps; ++n) {
    auto t0 = std::chrono::steady_clock::now();
    SolveStats st;
    State next = solver.solve(s, &st);
    next.time = static_cast<double>(n) * cfg.dt;
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    res.total_cycles += st.cycles;
    res.max_cycles = std::max(res.max_cycles, st.cycles);
    res.worst_residual = std::max(res.worst_residual, st.final_norms.max());
    Masses m = total_masses(next, p.fluid);
    double e = discrete_energy(next, p);
    double dm = (m.rho - m_prev.rho) / m_prev.rho;
    double dmc = m_prev.rhoc != 0.0 ? (m.rhoc - m_prev.rhoc) / std::abs(m_prev.rhoc) : m.rhoc - m_prev.rhoc;
    res.mass_drift.push_back(dm);
    res.rhoc_drift.push_back(dmc);
    res.energy_delta.push_back(e - e_prev);
    res.energy.push_back(e);
    if (opt.log)
      *opt.log << "step " << n << " t=" << format_double(next.time) << " cycles=" << st.cycles
               << " residual=" << st.final_norms.max() << " wall=" << wall << "s\n";
    if (opt.hook) opt.hook(n, next, st);

    std::string breach;
    if (std::abs(dm) > cfg.mass_tol)
      breach = "mass drift " + format_double(dm) + " exceeds " + format_double(cfg.mass_tol);
    if (e - e_prev > cfg.energy_slack * cfg.mg.tol * std::abs(e_prev))
      breach += (breach.empty() ? "" : "; ") + std::string("energy increased by ") + format_double(e - e_prev);

    if (n % cfg.report_every == 0 || n == n_steps || !breach.empty()) {
      StepReport r = make_report(next, p, cfg.scenario, st.cycles);
      r.energy_delta = r.energy - last_energy;
      last_energy = r.energy;
      res.reports.push_back(r);
      if (csv) csv->append(r);
    }
    snapshot(next, n);
    m_prev = m;
    e_prev = e;
    s = std::move(next);
    res.steps = n;
    if (!breach.empty()) {
      std::string msg = "step " + std::to_string(n) + ": " + breach;
      if (cfg.guard == GuardMode::fail) throw InvariantError(msg);
      if (opt.log) *opt.log << "warning: " << msg << '\n';
    }
  }
  res.final_state = std::move(s);
  return res;
}

// ---------------------------------------------------------------------------
// Cauchy convergence

struct ConvergenceLevel {
  int m1 = 0, m2 = 0;
  double dt = 0.0;
  long steps = 0;
};

struct ConvergenceTable {
  std::vector<ConvergenceLevel> levels;
  std::vector<double> errors;  ///< ||c_{k+1} - P c_k||_2, one per adjacent pair
  std::vector<double> rates;   ///< log2(e_k / e_{k+1})
  std::vector<CellField> finals;
};

/// log2 ratios of successive errors.
inline std::vector<double> convergence_rates(const std::vector<double>& e) {
  std::vector<double> r;
  for (std::size_t k = 0; k + 1 < e.size(); ++k) r.push_back(std::log2(e[k] / e[k + 1]));
  return r;
}

/// ||fine - P coarse||_2 with bilinear cell prolongation. Coarse ghosts must be filled.
inline double cauchy_error(const CellField& coarse, const CellField& fine) {
  CellField pc = prolong_field(coarse, fine.grid());
  CellField d(fine.grid());
  for_cells(fine.grid(), [&](int i, int j) { d(i, j) = fine(i, j) - pc(i, j); });
  return norm_l2(d);
}

/// Runs `levels` refinements of base: m doubles and dt quarters each time, all to base.t_end.
inline ConvergenceTable converge(const RunConfig& base, int levels, std::ostream* log = nullptr) {
  if (levels < 2) throw ConfigError("converge needs at least two levels");
  base.validate();
  ConvergenceTable t;
  for (int k = 0; k < levels; ++k) {
    RunConfig c = base;
    c.m1 = base.m1 << k;
    c.m2 = base.m2 << k;
    c.dt = base.dt / std::pow(4.0, k);
    c.snapshot_times.clear();
    long n = c.steps();
    if (std::abs(static_cast<double>(n) * c.dt - base.t_end) > 1e-12 * std::max(1.0, base.t_end))
      throw ConfigError("convergence levels do not reach a common final time");
    RunOptions opt;
    opt.write_files = false;
    RunResult r = run(c, opt);
    t.levels.push_back({c.m1, c.m2, c.dt, n});
    CellField cf = r.final_state.c;
    fill_ghost(cf, c.bc);
    t.finals.push_back(cf);
    if (log) *log << "level m=" << c.m1 << "x" << c.m2 << " dt=" << format_double(c.dt) << " steps=" << n << " done\n";
    if (k > 0) t.errors.push_back(cauchy_error(t.finals[k - 1], t.finals[k]));
  }
  t.rates = convergence_rates(t.errors);
  return t;
}

inline void print_table(const ConvergenceTable& t, std::ostream& out) {
  out << "pair,error,rate\n";
  for (std::size_t k = 0; k < t.errors.size(); ++k) {
    out << t.levels[k].m1 << "-" << t.levels[k + 1].m1 << "," << format_double(t.errors[k]) << ",";
    if (k > 0) out << format_double(t.rates[k - 1]);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Self-test

struct SelftestLine {
  std::string name;
  double worst = 0.0;
};

/// Worst violation per identity over m in {8, 16, 32} and every boundary family,
/// plus the secant identities. Deterministic for a fixed seed.
inline std::vector<SelftestLine> selftest(std::size_t secant_pairs = 1000000,
                                          const AdvectionFluxFn& flux = ch_advection_flux) {
  std::vector<SelftestLine> lines;
  std::map<std::string, std::size_t> at;
  std::uint64_t seed = 20240917;
  for (BcFamily f : {BcFamily::walls, BcFamily::channel, BcFamily::periodic})
    for (int m : {8, 16, 32})
      for (const IdentityResult& r :
           grid_identities(m, f, seed + static_cast<std::uint64_t>(m) * 31 + static_cast<std::uint64_t>(f), flux)) {
        auto it = at.find(r.name);
        if (it == at.end()) {
          at[r.name] = lines.size();
          lines.push_back({r.name, r.violation});
        } else {
          lines[it->second].worst = std::max(lines[it->second].worst, r.violation);
        }
      }
  SecantCheck s = secant_identities(secant_pairs, FluidPair{1.0, 10.0, 1.0, 10.0}, seed);
  lines.push_back({"secant: F(a) - F(b) = g(a, b)(a - b)", s.g_violation});
  lines.push_back({"secant: rho(a) - rho(b) = r(a, b)(a - b)", s.r_violation});
  return lines;
}

/// Prints one line per identity; returns true when every line is within tol.
inline bool print_selftest(const std::vector<SelftestLine>& lines, std::ostream& out, double tol = 1e-12) {
  bool ok = true;
  for (const SelftestLine& l : lines) {
    bool pass = l.worst <= tol;
    ok = ok && pass;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", l.worst);
    out << (pass ? "ok   " : "FAIL ") << buf << "  " << l.name << '\n';
  }
  return ok;
}

}  // namespace qnsch
