#pragma once
/// @file identities.hpp
/// @brief Summation-by-parts, stencil duality and secant identities on random fields.
///
/// Each check evaluates both sides of an identity independently and reports
/// |lhs - rhs| / scale, where scale is the largest magnitude among the terms involved.

#include <algorithm>
#include <cmath>
#include <functional>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qnsch/operators.hpp"
#include "qnsch/physics.hpp"
#include "qnsch/schemes.hpp"

namespace qnsch {

struct IdentityResult {
  std::string name;
  std::string family;
  int m = 0;
  double violation = 0.0;
};

enum class BcFamily { walls, channel, periodic };

inline std::string to_string(BcFamily f) {
  switch (f) {
    case BcFamily::walls: return "neumann/no-slip";
    case BcFamily::channel: return "periodic-x/walls-y";
    case BcFamily::periodic: return "periodic";
  }
  return "?";
}

inline BcSet bc_of(BcFamily f) {
  switch (f) {
    case BcFamily::walls: return BcSet::box();
    case BcFamily::channel: return BcSet::channel();
    case BcFamily::periodic: return BcSet::fully_periodic();
  }
  return BcSet::box();
}

/// Random interior values in [lo, hi], ghosts filled.
template <class Loc>
Field<Loc> random_field(const GridSpec& g, const BcSet& bc, std::mt19937_64& rng, double lo = -1.0,
                        double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Field<Loc> f(g);
  for (int j = f.jlo; j <= f.jhi(); ++j)
    for (int i = f.ilo; i <= f.ihi(); ++i) f(i, j) = dist(rng);
  if constexpr (!std::is_same_v<Loc, Vertex>) fill_ghost(f, bc);
  return f;
}

namespace detail {
inline double rel(double lhs, double rhs, std::initializer_list<double> terms) {
  double scale = std::max(std::abs(lhs), std::abs(rhs));
  for (double t : terms) scale = std::max(scale, std::abs(t));
  if (scale == 0.0) return 0.0;
  return std::abs(lhs - rhs) / scale;
}
}  // namespace detail

/// CH advection stencil under test; swappable so a corrupted stencil can be shown to fail.
using AdvectionFluxFn =
    std::function<CellField(const CellField&, const CellField&, const EwEdgeField&, const NsEdgeField&)>;

/// All grid identities for one resolution and boundary family.
inline std::vector<IdentityResult> grid_identities(int m, BcFamily family, std::uint64_t seed,
                                                   const AdvectionFluxFn& flux_fn = ch_advection_flux) {
  std::mt19937_64 rng(seed);
  GridSpec g = GridSpec::make(m, m, 1.0, 1.0);
  BcSet bc = bc_of(family);
  const std::string fam = to_string(family);
  std::vector<IdentityResult> out;
  auto add = [&](const std::string& name, double v) { out.push_back({name, fam, m, v}); };

  CellField phi = random_field<Cell>(g, bc, rng, 0.5, 2.0);
  CellField psi = random_field<Cell>(g, bc, rng);
  CellField zeta = random_field<Cell>(g, bc, rng);
  EwEdgeField u = random_field<EwEdge>(g, bc, rng);
  EwEdgeField gam = random_field<EwEdge>(g, bc, rng);
  NsEdgeField v = random_field<NsEdge>(g, bc, rng);
  NsEdgeField om = random_field<NsEdge>(g, bc, rng);
  const double h2 = g.h * g.h;

  {
    double a = h2 * inner(diff_x(phi), u), b = -h2 * inner(phi, diff_x(u));
    add("sbp: [D_x phi, u]_ew = -(phi, d_x u)", detail::rel(a, b, {}));
    a = h2 * inner(diff_y(phi), v), b = -h2 * inner(phi, diff_y(v));
    add("sbp: [D_y phi, v]_ns = -(phi, d_y v)", detail::rel(a, b, {}));
  }
  {
    CellField pa = phi * avg_x(u);
    double t1 = h2 * inner(avg_x(pa * diff_x(gam)), gam);
    double t2 = h2 * inner(0.5 * (gam * diff_x(pa)), gam);
    add("skew: A_x(phi a_x u d_x g) + g D_x(phi a_x u)/2 against g", detail::rel(t1 + t2, 0.0, {t1, t2}));
    CellField pb = phi * avg_y(v);
    t1 = h2 * inner(avg_y(pb * diff_y(om)), om);
    t2 = h2 * inner(0.5 * (om * diff_y(pb)), om);
    add("skew: A_y(phi a_y v d_y w) + w D_y(phi a_y v)/2 against w", detail::rel(t1 + t2, 0.0, {t1, t2}));
  }
  {
    VertexField q = avg_xy(phi) * avg_x(v);
    double t1 = h2 * inner(avg_y(q * diff_y(u)), u);
    double t2 = h2 * inner(0.5 * (u * diff_y(q)), u);
    add("skew: vertex transport of u by A_x v", detail::rel(t1 + t2, 0.0, {t1, t2}));
    VertexField r = avg_xy(phi) * avg_y(u);
    t1 = h2 * inner(avg_x(r * diff_x(v)), v);
    t2 = h2 * inner(0.5 * (v * diff_x(r)), v);
    add("skew: vertex transport of v by A_y u", detail::rel(t1 + t2, 0.0, {t1, t2}));
  }
  {
    double a = inner(diff_x(phi * diff_x(u)), gam), b = -inner(phi * diff_x(u), diff_x(gam));
    add("sbp: [D_x(phi d_x u), g]_ew = -(phi d_x u, d_x g)", detail::rel(a, b, {}));
    a = inner(diff_y(phi * diff_y(v)), om), b = -inner(phi * diff_y(v), diff_y(om));
    add("sbp: [D_y(phi d_y v), w]_ns = -(phi d_y v, d_y w)", detail::rel(a, b, {}));
  }
  {
    double a = inner(diff_y(avg_xy(phi) * diff_y(u)), gam);
    double b = -inner(diff_y(u), diff_y(gam), phi);
    add("sbp: [D_y(A phi D_y u), g]_ew = -<phi D_y u, D_y g>_vc", detail::rel(a, b, {}));
    a = inner(diff_x(avg_xy(phi) * diff_x(v)), om);
    b = -inner(diff_x(v), diff_x(om), phi);
    add("sbp: [D_x(A phi D_x v), w]_ns = -<phi D_x v, D_x w>_vc", detail::rel(a, b, {}));
  }
  {
    double a = inner(diff_x(phi * diff_y(v)), u), b = -inner(phi * diff_y(v), diff_x(u));
    add("sbp: [D_x(phi d_y v), u]_ew = -(phi d_y v, d_x u)", detail::rel(a, b, {}));
    a = inner(diff_y(phi * diff_x(u)), v), b = -inner(phi * diff_x(u), diff_y(v));
    add("sbp: [D_y(phi d_x u), v]_ns = -(phi d_x u, d_y v)", detail::rel(a, b, {}));
  }
  {
    double a = inner(diff_x(avg_x(phi) * diff_x(psi)), zeta);
    double b = -inner(diff_x(psi), diff_x(zeta), phi);
    add("sbp: (d_x(A_x phi D_x psi), z) = -[phi D_x psi, D_x z]_ew", detail::rel(a, b, {}));
    a = inner(diff_y(avg_y(phi) * diff_y(psi)), zeta);
    b = -inner(diff_y(psi), diff_y(zeta), phi);
    add("sbp: (d_y(A_y phi D_y psi), z) = -[phi D_y psi, D_y z]_ns", detail::rel(a, b, {}));
  }

  // Stencils of the coupled system: c in a physical range so that rho(c) exists.
  FluidPair fp{1.0, 10.0, 1.0, 10.0};
  CellField c = random_field<Cell>(g, bc, rng, -0.05, 1.05);
  CellField rho = density_field(c, fp);
  CellField mub = random_field<Cell>(g, bc, rng);
  {
    CellField flux = flux_fn(rho, c, u, v);
    double a = inner(flux, (-fp.alpha()) * rho);
    CellField ones(g, 1.0);
    double b = inner(avg_x(u * diff_x(rho)), ones) + inner(avg_y(v * diff_y(rho)), ones);
    add("advection/mass: (flux, -alpha rho) = (a_x(u D_x rho) + a_y(v D_y rho), 1)",
        detail::rel(a, b, {}));
  }
  {
    auto [fx, fy] = surface_tension_force(rho, mub, c);
    double a = inner(fx, u) + inner(fy, v);
    double b = inner(flux_fn(rho, c, u, v), mub);
    add("surface tension/advection duality", detail::rel(a, b, {}));
  }
  {
    EwEdgeField ua = random_field<EwEdge>(g, bc, rng);
    NsEdgeField va = random_field<NsEdge>(g, bc, rng);
    auto [ax, ay] = momentum_advection(rho, ua, va, u, v);
    double t1 = inner(ax, u), t2 = inner(ay, v);
    // Each component is already skew, so scale by the transport terms themselves.
    CellField px = rho * avg_x(ua);
    CellField py = rho * avg_y(va);
    double s1 = inner(avg_x(px * diff_x(u)), u);
    double s2 = inner(avg_y(py * diff_y(v)), v);
    add("momentum advection skew-symmetry", detail::rel(t1 + t2, 0.0, {s1, s2}));
  }
  return out;
}

/// The full grid suite at m in {8, 16, 32} for every boundary family.
inline std::vector<IdentityResult> identity_suite(std::uint64_t seed = 20240917) {
  std::vector<IdentityResult> all;
  for (BcFamily f : {BcFamily::walls, BcFamily::channel, BcFamily::periodic})
    for (int m : {8, 16, 32}) {
      auto r = grid_identities(m, f, seed + static_cast<std::uint64_t>(m) * 31 +
                                         static_cast<std::uint64_t>(f));
      all.insert(all.end(), r.begin(), r.end());
    }
  return all;
}

struct SecantCheck {
  double g_violation = 0.0;
  double r_violation = 0.0;
};

/// Worst relative violation of F(a)-F(b) = g(a,b)(a-b) and rho(a)-rho(b) = r(a,b)(a-b).
inline SecantCheck secant_identities(std::size_t pairs, const FluidPair& fp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.05, 1.05);
  SecantCheck s;
  for (std::size_t k = 0; k < pairs; ++k) {
    double a = dist(rng), b = dist(rng);
    double Fa = double_well_F(a), Fb = double_well_F(b);
    double gd = g_avg(a, b) * (a - b);
    s.g_violation = std::max(s.g_violation, detail::rel(Fa - Fb, gd, {Fa, Fb}));
    double ra = fp.density(a), rb = fp.density(b);
    double rd = r_avg(fp, a, b) * (a - b);
    s.r_violation = std::max(s.r_violation, detail::rel(ra - rb, rd, {ra, rb}));
  }
  return s;
}

}  // namespace qnsch
