#pragma once
/// @file diagnostics.hpp
/// @brief Discrete masses, energy, divergence and the scenario observables.
///
/// Masses and energy carry the h^2 cell measure so they approximate the integrals.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qnsch/schemes.hpp"

namespace qnsch {

enum class ScenarioKind { capillary, droplet, rayleigh_taylor, convergence, custom };

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::capillary: return "capillary";
    case ScenarioKind::droplet: return "droplet";
    case ScenarioKind::rayleigh_taylor: return "rayleigh_taylor";
    case ScenarioKind::convergence: return "convergence";
    case ScenarioKind::custom: return "custom";
  }
  return "custom";
}

/// One output row. metric is empty (no observable), one value (H or V_c) or the
/// RT tip pair (top, bottom).
struct StepReport {
  double time = 0.0;
  double mass_rho = 0.0;
  double mass_rhoc = 0.0;
  double energy = 0.0;
  double energy_delta = 0.0;
  double max_div = 0.0;
  int cycles = 0;
  std::vector<double> metric;

  bool operator==(const StepReport&) const = default;
};

struct Masses {
  double rho = 0.0;
  double rhoc = 0.0;
};

/// h^2 (rho, 1) and h^2 (rho c, 1) over interior cells.
inline Masses total_masses(const State& s, const FluidPair& fp) {
  const GridSpec& g = s.grid();
  double mr = 0.0, mc = 0.0;
  for_cells(g, [&](int i, int j) {
    double r = fp.density(s.c(i, j));
    mr += r;
    mc += r * s.c(i, j);
  });
  return {g.h * g.h * mr, g.h * g.h * mc};
}

/// E_h = kinetic + gradient + bulk + potential. Ghosts must be filled.
inline double discrete_energy(const State& s, const SchemeParams& p) {
  const GridSpec& g = s.grid();
  const NondimGroups& G = p.groups;
  const double h2 = g.h * g.h;
  CellField rho = density_field(s.c, p.fluid);
  double kin = norm_weighted_velocity(rho, s.u, s.v);
  double grad = norm_weighted_gradient(rho, s.c);
  double bulk = 0.0, pot = 0.0;
  for_cells(g, [&](int i, int j) {
    bulk += rho(i, j) * double_well_F(s.c(i, j));
    pot += rho(i, j) * g.yc(j);
  });
  return 0.5 * kin * kin + G.epsilon * G.eta / (2.0 * G.We) * grad * grad +
         G.eta * h2 / (G.epsilon * G.We) * bulk + h2 / G.Fr * pot;
}

/// d_x u + d_y v on the cells.
inline CellField divergence_field(const State& s) { return diff_x(s.u) + diff_y(s.v); }

/// (a_y v c, 1) / (c, 1).
inline double rising_velocity(const State& s) {
  CellField av = avg_y(s.v);
  double num = 0.0, den = 0.0;
  for_cells(s.grid(), [&](int i, int j) {
    num += av(i, j) * s.c(i, j);
    den += s.c(i, j);
  });
  if (den == 0.0) throw DomainError("rising velocity: (c, 1) vanishes");
  return num / den;
}

/// Heights of every c = 0.5 crossing in column i, by linear interpolation between
/// the bracketing cell centers, bottom to top.
inline std::vector<double> interface_crossings(const CellField& c, int i) {
  const GridSpec& g = c.grid();
  std::vector<double> ys;
  for (int j = 1; j < g.m2; ++j) {
    double a = c(i, j) - 0.5, b = c(i, j + 1) - 0.5;
    if (a == 0.0) {
      ys.push_back(g.yc(j));
    } else if (a * b < 0.0) {
      ys.push_back(g.yc(j) + g.h * a / (a - b));
    }
  }
  if (c(i, g.m2) == 0.5) ys.push_back(g.yc(g.m2));
  return ys;
}

/// Capillary amplitude at the column nearest x = 0, signed so that the profile
/// 0.5 - H cos(2 pi x) gives H > 0.
inline double capillary_amplitude(const State& s) {
  std::vector<double> ys = interface_crossings(s.c, 1);
  if (ys.empty()) throw MetricError("capillary amplitude: no c = 0.5 crossing in column 1");
  return 0.5 - ys.front();
}

/// RT tips: (highest, lowest) crossing height over all columns.
inline std::pair<double, double> rt_tips(const State& s) {
  const GridSpec& g = s.grid();
  double top = -1e300, bottom = 1e300;
  for (int i = 1; i <= g.m1; ++i) {
    std::vector<double> ys = interface_crossings(s.c, i);
    if (ys.empty())
      throw MetricError("rayleigh-taylor tips: no c = 0.5 crossing in column " + std::to_string(i));
    top = std::max(top, ys.back());
    bottom = std::min(bottom, ys.front());
  }
  return {top, bottom};
}

inline std::vector<double> interface_metrics(const State& s, ScenarioKind k) {
  switch (k) {
    case ScenarioKind::capillary: return {capillary_amplitude(s)};
    case ScenarioKind::droplet: return {rising_velocity(s)};
    case ScenarioKind::rayleigh_taylor: {
      auto [t, b] = rt_tips(s);
      return {t, b};
    }
    default: return {};
  }
}

/// Interior max of |d_x u + d_y v|.
inline double max_divergence(const State& s) {
  CellField d = divergence_field(s);
  double m = 0.0;
  for_cells(s.grid(), [&](int i, int j) { m = std::max(m, std::abs(d(i, j))); });
  return m;
}

}  // namespace qnsch
