// Acceptance run: one PASS/FAIL line per criterion. With arguments, only the listed
// criteria run (e.g. `acceptance 1 2 7`). Exit status is nonzero if any criterion fails.

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "qnsch/driver.hpp"

using namespace qnsch;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

std::string fix(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  return buf;
}

RunConfig benchmark(const std::string& name) {
  return load_config(std::string(QNSCH_SOURCE_DIR) + "/configs/" + name + ".json");
}

/// Per-step record of a run, collected through the step hook.
struct Trace {
  RunResult result;
  std::vector<SolveStats> steps;
};

Trace trace_run(RunConfig cfg) {
  cfg.guard = GuardMode::warn;
  cfg.snapshot_times.clear();
  Trace t;
  RunOptions opt;
  opt.write_files = false;
  opt.hook = [&](long, const State&, const SolveStats& st) { t.steps.push_back(st); };
  opt.log = nullptr;
  t.result = run(cfg, opt);
  return t;
}

/// Every step converged and its final residual is within the solver tolerance.
bool all_converged(const Trace& t, const RunConfig& cfg, std::string& why) {
  for (std::size_t n = 0; n < t.steps.size(); ++n) {
    const SolveStats& s = t.steps[n];
    if (s.cycles > cfg.mg.max_cycles || !(s.final_norms.max() <= cfg.mg.tol)) {
      why = "step " + std::to_string(n + 1) + " residual " + sci(s.final_norms.max());
      return false;
    }
  }
  return true;
}

// 1 -------------------------------------------------------------------------
Verdict identities() {
  std::vector<SelftestLine> lines = selftest(0);
  double worst = 0.0;
  std::string name;
  for (const SelftestLine& l : lines) {
    if (l.name.rfind("secant", 0) == 0) continue;
    if (l.worst >= worst) {
      worst = l.worst;
      name = l.name;
    }
  }
  return {worst <= 1e-12, "worst relative violation " + sci(worst) + " (" + name + ")"};
}

// 2 -------------------------------------------------------------------------
Verdict secants() {
  SecantCheck s = secant_identities(1000000, FluidPair{1.0, 10.0, 1.0, 10.0}, 20240917);
  double worst = std::max(s.g_violation, s.r_violation);
  return {worst <= 1e-13, "g " + sci(s.g_violation) + ", r " + sci(s.r_violation) + " over 1e6 pairs"};
}

// 3 and 4 share the capillary runs.
struct CapillaryRuns {
  Trace prim, proj;
  RunConfig cfg;
};

CapillaryRuns& capillary_runs() {
  static std::unique_ptr<CapillaryRuns> runs;
  if (!runs) {
    runs = std::make_unique<CapillaryRuns>();
    runs->cfg = benchmark("capillary");
    RunConfig a = runs->cfg, b = runs->cfg;
    a.scheme = Scheme::primitive;
    b.scheme = Scheme::projection;
    runs->prim = trace_run(a);
    runs->proj = trace_run(b);
  }
  return *runs;
}

Verdict masses() {
  CapillaryRuns& r = capillary_runs();
  bool ok = true;
  std::string d;
  for (auto* t : {&r.prim, &r.proj}) {
    const RunResult& res = t->result;
    double step_rho = 0.0, step_rhoc = 0.0;
    for (double x : res.mass_drift) step_rho = std::max(step_rho, std::abs(x));
    for (double x : res.rhoc_drift) step_rhoc = std::max(step_rhoc, std::abs(x));
    const StepReport& first = res.reports.front();
    const StepReport& last = res.reports.back();
    double cum_rho = std::abs(last.mass_rho - first.mass_rho) / first.mass_rho;
    double cum_rhoc = std::abs(last.mass_rhoc - first.mass_rhoc) / std::abs(first.mass_rhoc);
    bool pass = step_rho <= 1e-8 && cum_rho <= 1e-8 && step_rhoc <= 1e-8 && cum_rhoc <= 1e-8 && res.steps == 500;
    ok = ok && pass;
    bool prim = t == &r.prim;
    d += std::string(prim ? "primitive" : "; projection") + ": rho step " + sci(step_rho) + " cum " + sci(cum_rho) +
         ", rho*c step " + sci(step_rhoc) + " cum " + sci(cum_rhoc);
    if (prim) d += std::string(", 1e-10 target ") + (std::max(step_rho, cum_rho) <= 1e-10 ? "met" : "missed");
  }
  return {ok, d};
}

Verdict energy() {
  CapillaryRuns& r = capillary_runs();
  const double slack = 10.0 * r.cfg.mg.tol;
  bool ok = true;
  std::string d;
  for (auto* t : {&r.prim, &r.proj}) {
    int rises = 0, breaches = 0;
    double worst = -1e300;
    for (double de : t->result.energy_delta) {
      worst = std::max(worst, de);
      rises += de > 0.0;
      breaches += de > slack;
    }
    ok = ok && breaches == 0 && !t->result.energy_delta.empty();
    d += std::string(t == &r.prim ? "primitive" : "; projection") + ": max dE " + sci(worst) + ", " +
         std::to_string(rises) + " increases, " + std::to_string(breaches) + " beyond " + sci(slack);
  }
  return {ok, d};
}

// 5 -------------------------------------------------------------------------
Verdict convergence() {
  bool ok = true;
  std::string d;
  for (Scheme s : {Scheme::primitive, Scheme::projection}) {
    RunConfig cfg = benchmark("convergence");
    cfg.scheme = s;
    ConvergenceTable t = converge(cfg, 4);
    bool decreasing = true;
    for (std::size_t k = 1; k < t.errors.size(); ++k) decreasing = decreasing && t.errors[k] < t.errors[k - 1];
    // rates must settle toward 2: each is no farther from 2 than the one before
    bool settling = true;
    for (std::size_t k = 1; k < t.rates.size(); ++k)
      settling = settling && std::abs(t.rates[k] - 2.0) <= std::abs(t.rates[k - 1] - 2.0);
    double final_rate = t.rates.back();
    bool pass = decreasing && settling && final_rate >= 1.7 && final_rate <= 2.3;
    ok = ok && pass;
    d += std::string(s == Scheme::primitive ? "primitive" : "; projection") + ": errors";
    for (double e : t.errors) d += " " + sci(e);
    d += ", rates";
    for (double r : t.rates) d += " " + fix(r);
  }
  return {ok, d};
}

// 6 -------------------------------------------------------------------------
Verdict locality() {
  RunConfig cfg = benchmark("droplet");
  cfg.guard = GuardMode::warn;
  cfg.snapshot_times.clear();
  double bulk = 0.0, band = 0.0, inner_bulk = 0.0;
  RunOptions opt;
  opt.write_files = false;
  std::vector<SolveStats> steps;
  opt.hook = [&](long, const State& s, const SolveStats& st) {
    steps.push_back(st);
    CellField d = divergence_field(s);
    const GridSpec& g = s.grid();
    for_cells(g, [&](int i, int j) {
      double q = s.c(i, j) * (1.0 - s.c(i, j));
      double a = std::abs(d(i, j));
      if (q < 1e-4) {
        bulk = std::max(bulk, a);
        if (j > 1 && j < g.m2) inner_bulk = std::max(inner_bulk, a);
      } else {
        band = std::max(band, a);
      }
    });
  };
  RunResult r = run(cfg, opt);
  double bound = 10.0 * cfg.mg.tol;
  return {bulk <= bound && r.steps == 300,
          "max |div| where c(1-c) < 1e-4: " + sci(bulk) + " (bound " + sci(bound) + "; away from wall rows " +
              sci(inner_bulk) + "), interfacial band " + sci(band)};
}

// 7 -------------------------------------------------------------------------
Verdict cross_check() {
  RunConfig c = benchmark("capillary");
  c.m1 = c.m2 = 64;
  c.fluid = FluidPair{1.0, 1.0, 1.0, 1.0};
  c.groups.eta = 1.0;
  c.H0 = 0.05;
  const GridSpec g = c.grid();
  State s0 = init_scenario(c);
  // discretely divergence-free velocity from psi = sin^2(pi y) sin(2 pi x) / (2 pi)
  auto psi = [](double x, double y) { return std::pow(std::sin(M_PI * y), 2) * std::sin(2.0 * M_PI * x) / (2.0 * M_PI); };
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 0; i <= g.m1; ++i) s0.u(i, j) = (psi(g.xe(i), j * g.h) - psi(g.xe(i), (j - 1) * g.h)) / g.h;
  for (int j = 0; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i) s0.v(i, j) = -(psi(i * g.h, j * g.h) - psi((i - 1) * g.h, j * g.h)) / g.h;
  fill_state_ghosts(s0, c.params());

  MgConfig mg = c.mg;
  mg.tol = 1e-9;
  std::vector<double> diffs;
  for (double dt : {1e-2, 5e-3, 2.5e-3}) {
    SchemeParams a = c.params(), b = c.params();
    a.dt = b.dt = dt;
    a.scheme = Scheme::primitive;
    b.scheme = Scheme::projection;
    State na = solve_timestep(s0, a, mg), nb = solve_timestep(s0, b, mg);
    double d = 0.0;
    for_cells(g, [&](int i, int j) { d = std::max(d, std::abs(na.c(i, j) - nb.c(i, j))); });
    for_ew_unknowns(g, a.bc, [&](int i, int j) { d = std::max(d, std::abs(na.u(i, j) - nb.u(i, j))); });
    for_ns_unknowns(g, a.bc, [&](int i, int j) { d = std::max(d, std::abs(na.v(i, j) - nb.v(i, j))); });
    diffs.push_back(d);
  }
  std::vector<double> orders = convergence_rates(diffs);
  bool ok = orders[0] >= 1.8 && orders[1] >= 1.8;
  return {ok, "max difference in c, u, v: " + sci(diffs[0]) + " " + sci(diffs[1]) + " " + sci(diffs[2]) +
                  ", orders " + fix(orders[0]) + " " + fix(orders[1])};
}

// 8 -------------------------------------------------------------------------
Verdict robustness() {
  bool ok = true;
  std::string d;
  for (Scheme s : {Scheme::primitive, Scheme::projection}) {
    RunConfig cfg = benchmark("capillary");
    cfg.m1 = cfg.m2 = 64;
    cfg.scheme = s;
    Trace t = trace_run(cfg);
    std::string why;
    bool conv = all_converged(t, cfg, why);
    double worst_factor = 0.0;
    int max_cycles = 0;
    for (const SolveStats& st : t.steps) {
      max_cycles = std::max(max_cycles, st.cycles);
      for (std::size_t k = 3; k < st.history.size(); ++k)
        worst_factor = std::max(worst_factor, st.history[k] / st.history[k - 1]);
    }
    bool pass = conv && worst_factor <= 0.5;
    ok = ok && pass;
    d += std::string(s == Scheme::primitive ? "primitive" : "; projection") + ": worst factor after cycle 2 " +
         fix(worst_factor) + ", max cycles " + std::to_string(max_cycles) + (conv ? "" : ", " + why);
  }
  // the other benchmark runs of this binary
  if (auto* r = &capillary_runs(); r) {
    std::string why;
    bool c1 = all_converged(r->prim, r->cfg, why), c2 = all_converged(r->proj, r->cfg, why);
    ok = ok && c1 && c2;
    d += std::string("; m=128 capillary runs ") + (c1 && c2 ? "all steps converged" : why);
  }
  return {ok, d};
}

// 9 -------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  fs::path root = fs::temp_directory_path() / "qnsch_acceptance_determinism";
  fs::remove_all(root);
  std::string cfg = std::string(QNSCH_SOURCE_DIR) + "/configs/capillary.json";
  for (const char* run : {"a", "b"}) {
    std::string cmd = std::string(QNSCH_CLI_PATH) + " run --quiet --config " + cfg + " --out " + (root / run).string() +
                      " > /dev/null";
    int st = std::system(cmd.c_str());
    if (!WIFEXITED(st) || WEXITSTATUS(st) != 0) return {false, "cli run failed: " + cmd};
  }
  std::string a = slurp(root / "a" / "timeseries.csv"), b = slurp(root / "b" / "timeseries.csv");
  bool csv = !a.empty() && a == b;
  bool vtk = slurp(root / "a" / "snapshot_000500.vtk") == slurp(root / "b" / "snapshot_000500.vtk");
  return {csv && vtk, std::string("capillary benchmark CSV ") + (csv ? "identical" : "differs") + " (" +
                          std::to_string(a.size()) + " bytes), final snapshot " + (vtk ? "identical" : "differs") +
                          "; the solver is single-threaded"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"operator identities", identities}, {"secant identities", secants},
      {"mass conservation", masses},       {"energy stability", energy},
      {"convergence rates", convergence},  {"divergence locality", locality},
      {"scheme cross-check", cross_check}, {"solver robustness", robustness},
      {"determinism", determinism}};
  std::set<int> pick;
  for (int k = 1; k < argc; ++k) pick.insert(std::atoi(argv[k]));
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    int id = static_cast<int>(k) + 1;
    if (!pick.empty() && !pick.count(id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[k].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && v.pass;
    std::cout << "CRITERION " << id << " " << (v.pass ? "PASS" : "FAIL") << " " << criteria[k].first << ": "
              << v.detail << " [" << fix(secs) << " s]" << std::endl;
  }
  return all ? 0 : 1;
}
