#pragma once
// Shared fixtures for the unit tests.

#include <random>

#include "qnsch/identities.hpp"
#include "qnsch/multigrid.hpp"

namespace qnsch::testing {

inline SchemeParams capillary_params(Scheme s, const BcSet& bc = BcSet::channel()) {
  SchemeParams p;
  p.scheme = s;
  p.bc = bc;
  p.fluid = FluidPair{10.0, 1.0, 10.0, 1.0};
  const double eps = 0.01;
  p.groups = NondimGroups{100.0, 1.0, 1.0, eps, 1.0 / eps, eps, eta_capillary(10.0, 1.0)};
  p.dt = 1e-3;
  return p;
}

/// Random state with c in [lo, hi] and all other fields in [-1, 1]; ghosts filled.
inline State random_state(const GridSpec& g, const SchemeParams& p, std::mt19937_64& rng, double lo = 0.0,
                          double hi = 1.0) {
  State s(g);
  s.c = random_field<Cell>(g, p.bc, rng, lo, hi);
  s.mu_bar = random_field<Cell>(g, p.bc, rng);
  s.p_bar = random_field<Cell>(g, p.bc, rng);
  s.u = random_field<EwEdge>(g, p.velocity_bc(), rng);
  s.v = random_field<NsEdge>(g, p.velocity_bc(), rng);
  s.u_tilde = random_field<EwEdge>(g, p.predictor_bc(), rng);
  s.v_tilde = random_field<NsEdge>(g, p.predictor_bc(), rng);
  fill_state_ghosts(s, p);
  return s;
}

/// Capillary-type tanh profile with a cosine perturbation; everything else zero.
inline State wave_state(const GridSpec& g, const SchemeParams& p, double amp = 0.01) {
  State s(g);
  const double eps = p.groups.epsilon;
  for_cells(g, [&](int i, int j) {
    double yt = 0.5 * g.Ly - amp * std::cos(2.0 * M_PI * g.xc(i) / g.Lx);
    s.c(i, j) = 0.5 * (1.0 - std::tanh((g.yc(j) - yt) / (2.0 * std::sqrt(2.0 * eps))));
  });
  fill_state_ghosts(s, p);
  return s;
}

template <class Loc>
double max_diff(const Field<Loc>& a, const Field<Loc>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.data().size(); ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
  return m;
}

inline double max_diff(const State& a, const State& b) {
  return std::max({max_diff(a.c, b.c), max_diff(a.mu_bar, b.mu_bar), max_diff(a.p_bar, b.p_bar),
                   max_diff(a.u, b.u), max_diff(a.v, b.v), max_diff(a.u_tilde, b.u_tilde),
                   max_diff(a.v_tilde, b.v_tilde)});
}

inline double max_diff(const Residual& a, const Residual& b) {
  return std::max({max_diff(a.momx, b.momx), max_diff(a.momy, b.momy), max_diff(a.projx, b.projx),
                   max_diff(a.projy, b.projy), max_diff(a.mass, b.mass), max_diff(a.phase, b.phase),
                   max_diff(a.chem, b.chem)});
}

}  // namespace qnsch::testing
