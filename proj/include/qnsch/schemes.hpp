#pragma once
/// @file schemes.hpp
/// @brief Fully discrete primitive and projection schemes: state, parameters and residuals.
///
/// Every equation is stored as (left side - right side), so a residual field is zero
/// exactly where the discrete equation holds. The residual functions here are written
/// with the operator algebra of operators.hpp and serve as the reference evaluation;
/// the multigrid smoothers use pointwise kernels that must agree with them.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "qnsch/grid.hpp"
#include "qnsch/operators.hpp"
#include "qnsch/physics.hpp"

namespace qnsch {

enum class Scheme { primitive, projection };

inline std::string to_string(Scheme s) { return s == Scheme::primitive ? "primitive" : "projection"; }

/// Which projection-scheme equation carries the gravity body force.
enum class GravityPlacement { predictor, correction };

struct State {
  CellField c, mu_bar, p_bar;
  EwEdgeField u, u_tilde;
  NsEdgeField v, v_tilde;
  double time = 0.0;

  State() = default;
  explicit State(const GridSpec& g)
      : c(g), mu_bar(g), p_bar(g), u(g), u_tilde(g), v(g), v_tilde(g) {}

  const GridSpec& grid() const { return c.grid(); }
};

struct SchemeParams {
  NondimGroups groups;
  FluidPair fluid;
  double dt = 1e-3;
  Scheme scheme = Scheme::primitive;
  BcSet bc;
  GravityPlacement projection_gravity = GravityPlacement::predictor;

  void validate() const {
    groups.validate();
    fluid.validate();
    bc.validate();
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  }
  double alpha() const { return fluid.alpha(); }
  /// Velocity condition of the end-of-step velocity: the declared wall condition for
  /// the primitive scheme, normal component only for the projected velocity.
  BcSet velocity_bc() const {
    return scheme == Scheme::primitive ? bc : bc.with_walls(VelBc::normal_zero);
  }
  /// The projection predictor carries the declared wall condition.
  BcSet predictor_bc() const { return bc; }
};

inline void fill_state_ghosts(State& s, const SchemeParams& p) {
  fill_ghost(s.c, p.bc);
  fill_ghost(s.mu_bar, p.bc);
  fill_ghost(s.p_bar, p.bc);
  BcSet vb = p.velocity_bc();
  fill_ghost(s.u, vb);
  fill_ghost(s.v, vb);
  if (p.scheme == Scheme::projection) {
    BcSet tb = p.predictor_bc();
    fill_ghost(s.u_tilde, tb);
    fill_ghost(s.v_tilde, tb);
  }
}

struct Residual {
  EwEdgeField momx, projx;
  NsEdgeField momy, projy;
  CellField mass, phase, chem;

  Residual() = default;
  explicit Residual(const GridSpec& g)
      : momx(g), projx(g), momy(g), projy(g), mass(g), phase(g), chem(g) {}
};

// ---------------------------------------------------------------------------
// Pointwise constitutive maps (ghosts included; they only read the cell's own value).

inline CellField density_field(const CellField& c, const FluidPair& fp) {
  return map(c, [&](double x) { return fp.density(x); });
}
inline CellField viscosity_field(const CellField& c, const FluidPair& fp) {
  return map(c, [&](double x) { return fp.viscosity(x); });
}
inline CellField mobility_field(const CellField& c, double epsilon) {
  return map(c, [&](double x) { return mobility_reg(x, epsilon); });
}

// ---------------------------------------------------------------------------
// Special stencils

/// a_x(rho_ew D_x c u) + a_y(rho_ns D_y c v) with the outward-neighbour density weights.
inline CellField ch_advection_flux(const CellField& rho, const CellField& c, const EwEdgeField& u,
                                   const NsEdgeField& v) {
  const GridSpec& g = c.grid();
  CellField r(g);
  const double ih = 1.0 / g.h;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i) {
      double fx = rho(i + 1, j) * (c(i + 1, j) - c(i, j)) * ih * u(i, j) +
                  rho(i - 1, j) * (c(i, j) - c(i - 1, j)) * ih * u(i - 1, j);
      double fy = rho(i, j + 1) * (c(i, j + 1) - c(i, j)) * ih * v(i, j) +
                  rho(i, j - 1) * (c(i, j) - c(i, j - 1)) * ih * v(i, j - 1);
      r(i, j) = 0.5 * (fx + fy);
    }
  return r;
}

/// Edge force A(rho_ew mu_bar) D c with the cross pairing of rho and mu_bar.
inline std::pair<EwEdgeField, NsEdgeField> surface_tension_force(const CellField& rho,
                                                                 const CellField& mu_bar,
                                                                 const CellField& c) {
  const GridSpec& g = c.grid();
  EwEdgeField fx(g);
  NsEdgeField fy(g);
  const double ih = 1.0 / g.h;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 0; i <= g.m1; ++i)
      fx(i, j) = 0.5 * (rho(i + 1, j) * mu_bar(i, j) + rho(i, j) * mu_bar(i + 1, j)) *
                 (c(i + 1, j) - c(i, j)) * ih;
  for (int j = 0; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i)
      fy(i, j) = 0.5 * (rho(i, j + 1) * mu_bar(i, j) + rho(i, j) * mu_bar(i, j + 1)) *
                 (c(i, j + 1) - c(i, j)) * ih;
  return {std::move(fx), std::move(fy)};
}

/// Convective term plus the skew half-divergence term, in the summation-by-parts form.
inline std::pair<EwEdgeField, NsEdgeField> momentum_advection(const CellField& rho,
                                                              const EwEdgeField& ua,
                                                              const NsEdgeField& va,
                                                              const EwEdgeField& ut,
                                                              const NsEdgeField& vt) {
  VertexField rho_v = avg_xy(rho);
  CellField px = rho * avg_x(ua);
  CellField py = rho * avg_y(va);
  VertexField qx = rho_v * avg_x(va);  // A rho A_x v at vertices
  VertexField qy = rho_v * avg_y(ua);  // A rho A_y u at vertices

  EwEdgeField ax = avg_x(px * diff_x(ut)) + avg_y(qx * diff_y(ut));
  ax += 0.5 * (ut * (diff_x(px) + diff_y(qx)));
  NsEdgeField ay = avg_x(qy * diff_x(vt)) + avg_y(py * diff_y(vt));
  ay += 0.5 * (vt * (diff_x(qy) + diff_y(py)));
  return {std::move(ax), std::move(ay)};
}

/// Cell value of |grad_D c|^2: mean of the two adjacent squared edge differences per axis.
inline CellField grad_sq_cell(const CellField& c) {
  EwEdgeField gx = diff_x(c);
  NsEdgeField gy = diff_y(c);
  return avg_x(gx * gx) + avg_y(gy * gy);
}

struct HalfTimeFields {
  CellField rho_half, F_half, gradc_sq_half;
};

inline HalfTimeFields half_time_fields(const State& old_s, const State& new_s, const FluidPair& fp) {
  HalfTimeFields h;
  h.rho_half = 0.5 * (density_field(new_s.c, fp) + density_field(old_s.c, fp));
  h.F_half = 0.5 * (map(new_s.c, double_well_F) + map(old_s.c, double_well_F));
  h.gradc_sq_half = 0.5 * (grad_sq_cell(new_s.c) + grad_sq_cell(old_s.c));
  return h;
}

// ---------------------------------------------------------------------------
// Residuals

namespace detail {

/// d(A m D phi): the variable-mobility Laplacian with edge mobility A m.
inline CellField mobility_laplacian(const EwEdgeField& amx, const NsEdgeField& amy,
                                    const CellField& phi) {
  return diff_x(amx * diff_x(phi)) + diff_y(amy * diff_y(phi));
}

/// (1/Re) div(mu grad u) + (1/3Re) grad(mu div u), both components.
inline std::pair<EwEdgeField, NsEdgeField> viscous_force(const CellField& mu, const EwEdgeField& u,
                                                         const NsEdgeField& v, double Re) {
  VertexField mu_v = avg_xy(mu);
  CellField div = diff_x(u) + diff_y(v);
  EwEdgeField fx = diff_x(mu * diff_x(u)) + diff_y(mu_v * diff_y(u));
  NsEdgeField fy = diff_x(mu_v * diff_x(v)) + diff_y(mu * diff_y(v));
  CellField mdiv = mu * div;
  fx = (1.0 / Re) * fx + (1.0 / (3.0 * Re)) * diff_x(mdiv);
  fy = (1.0 / Re) * fy + (1.0 / (3.0 * Re)) * diff_y(mdiv);
  return {std::move(fx), std::move(fy)};
}

/// Chemical-potential equation, lhs_weight * mu_bar - (bulk + gradient terms).
inline CellField chem_residual(const State& o, const State& n, const CellField& lhs_weight,
                               const SchemeParams& p) {
  const NondimGroups& G = p.groups;
  const FluidPair& fp = p.fluid;
  const double alpha = fp.alpha();
  HalfTimeFields hf = half_time_fields(o, n, fp);
  CellField rho_n = density_field(o.c, fp);
  CellField rho_s = density_field(n.c, fp);
  CellField gavg(n.c.grid()), ravg(n.c.grid());
  for (std::size_t k = 0; k < gavg.data().size(); ++k) {
    gavg.data()[k] = g_avg(n.c.data()[k], o.c.data()[k]);
    ravg.data()[k] = -alpha * rho_s.data()[k] * rho_n.data()[k];
  }
  CellField c_half = 0.5 * (n.c + o.c);
  CellField div = diff_x(avg_x(hf.rho_half) * diff_x(c_half)) +
                  diff_y(avg_y(hf.rho_half) * diff_y(c_half));
  const double bulk = G.M * G.eta / (G.epsilon * G.We);
  const double grad = G.epsilon * G.eta * G.M / G.We;
  CellField r = lhs_weight * n.mu_bar;
  r -= bulk * (hf.rho_half * gavg + hf.F_half * ravg);
  r -= (0.5 * grad) * (hf.gradc_sq_half * ravg);
  r += grad * div;
  return r;
}

template <class Loc>
void zero_outside(Field<Loc>& f, const BcSet& bc);

template <>
inline void zero_outside(EwEdgeField& f, const BcSet& bc) {
  const GridSpec& g = f.grid();
  int last = ew_last(g, bc);
  for (int j = f.jlo; j <= f.jhi(); ++j)
    for (int i = f.ilo; i <= f.ihi(); ++i)
      if (j < 1 || j > g.m2 || i < 1 || i > last) f(i, j) = 0.0;
}
template <>
inline void zero_outside(NsEdgeField& f, const BcSet& bc) {
  const GridSpec& g = f.grid();
  int last = ns_last(g, bc);
  for (int j = f.jlo; j <= f.jhi(); ++j)
    for (int i = f.ilo; i <= f.ihi(); ++i)
      if (i < 1 || i > g.m1 || j < 1 || j > last) f(i, j) = 0.0;
}
template <>
inline void zero_outside(CellField& f, const BcSet&) {
  const GridSpec& g = f.grid();
  for (int j = 0; j <= f.jhi(); ++j)
    for (int i = 0; i <= f.ihi(); ++i)
      if (i < 1 || i > g.m1 || j < 1 || j > g.m2) f(i, j) = 0.0;
}

inline NsEdgeField gravity_field(const CellField& rho, double Fr) {
  return (1.0 / Fr) * avg_y(rho);
}

}  // namespace detail

/// Residual of the primitive scheme at (old -> new). Ghosts must be filled on both.
inline Residual residual_primitive(const State& o, const State& n, const SchemeParams& p) {
  const GridSpec& g = o.grid();
  const NondimGroups& G = p.groups;
  const double dt = p.dt, alpha = p.alpha();
  Residual R(g);

  CellField rho_o = density_field(o.c, p.fluid);
  CellField rho_n = density_field(n.c, p.fluid);
  CellField mu_o = viscosity_field(o.c, p.fluid);
  CellField mob = mobility_field(o.c, G.epsilon);
  EwEdgeField amx = avg_x(mob);
  NsEdgeField amy = avg_y(mob);

  EwEdgeField arx_o = avg_x(rho_o), arx_n = avg_x(rho_n);
  NsEdgeField ary_o = avg_y(rho_o), ary_n = avg_y(rho_n);
  auto [advx, advy] = momentum_advection(rho_o, o.u, o.v, n.u, n.v);
  auto [stx, sty] = surface_tension_force(rho_o, n.mu_bar, o.c);
  auto [visx, visy] = detail::viscous_force(mu_o, n.u, n.v, G.Re);

  R.momx = (1.0 / dt) * (arx_o * (n.u - o.u)) + advx + (0.5 / dt) * ((arx_n - arx_o) * n.u) +
           (1.0 / G.M) * (diff_x(n.p_bar) - stx) - visx;
  R.momy = (1.0 / dt) * (ary_o * (n.v - o.v)) + advy + (0.5 / dt) * ((ary_n - ary_o) * n.v) +
           (1.0 / G.M) * (diff_y(n.p_bar) - sty) - visy + detail::gravity_field(rho_o, G.Fr);

  CellField lap_mu = detail::mobility_laplacian(amx, amy, n.mu_bar);
  CellField lap_p = detail::mobility_laplacian(amx, amy, n.p_bar);
  R.mass = diff_x(n.u) + diff_y(n.v) - (alpha / G.Pe) * lap_mu - (alpha * alpha / G.Pe) * lap_p;
  R.phase = (1.0 / dt) * (rho_n * (n.c - o.c)) + ch_advection_flux(rho_o, o.c, n.u, n.v) -
            (1.0 / G.Pe) * lap_mu - (alpha / G.Pe) * lap_p;
  R.chem = detail::chem_residual(o, n, rho_n, p);

  detail::zero_outside(R.momx, p.bc);
  detail::zero_outside(R.momy, p.bc);
  detail::zero_outside(R.mass, p.bc);
  detail::zero_outside(R.phase, p.bc);
  detail::zero_outside(R.chem, p.bc);
  return R;
}

/// Residual of the projection scheme. momx/momy hold the predictor equation for the
/// intermediate velocity, projx/projy the correction equation for the end-of-step velocity.
inline Residual residual_projection(const State& o, const State& n, const SchemeParams& p) {
  const GridSpec& g = o.grid();
  const NondimGroups& G = p.groups;
  const double dt = p.dt, alpha = p.alpha();
  Residual R(g);

  CellField rho_o = density_field(o.c, p.fluid);
  CellField rho_n = density_field(n.c, p.fluid);
  CellField mu_o = viscosity_field(o.c, p.fluid);
  CellField mob = mobility_field(o.c, G.epsilon);
  EwEdgeField amx = avg_x(mob);
  NsEdgeField amy = avg_y(mob);

  EwEdgeField arx_o = avg_x(rho_o), arx_n = avg_x(rho_n);
  NsEdgeField ary_o = avg_y(rho_o), ary_n = avg_y(rho_n);
  auto [advx, advy] = momentum_advection(rho_o, o.u, o.v, n.u_tilde, n.v_tilde);
  auto [visx, visy] = detail::viscous_force(mu_o, n.u_tilde, n.v_tilde, G.Re);
  NsEdgeField grav = detail::gravity_field(rho_n, G.Fr);

  R.momx = (1.0 / dt) * (arx_o * (n.u_tilde - o.u)) + advx +
           (0.5 / dt) * ((arx_n - arx_o) * n.u_tilde) - visx;
  R.momy = (1.0 / dt) * (ary_o * (n.v_tilde - o.v)) + advy +
           (0.5 / dt) * ((ary_n - ary_o) * n.v_tilde) - visy;

  auto [stx, sty] = surface_tension_force(rho_n, n.mu_bar, n.c);
  R.projx = (1.0 / dt) * (arx_n * (n.u - n.u_tilde)) + (1.0 / G.M) * (diff_x(n.p_bar) - stx);
  R.projy = (1.0 / dt) * (ary_n * (n.v - n.v_tilde)) + (1.0 / G.M) * (diff_y(n.p_bar) - sty);
  if (p.projection_gravity == GravityPlacement::predictor)
    R.momy += grav;
  else
    R.projy += grav;

  CellField lap_mu = detail::mobility_laplacian(amx, amy, n.mu_bar);
  CellField lap_p = detail::mobility_laplacian(amx, amy, n.p_bar);
  R.mass = diff_x(n.u) + diff_y(n.v) - (alpha / G.Pe) * lap_mu - (alpha * alpha / G.Pe) * lap_p;
  R.phase = (1.0 / dt) * (rho_o * (n.c - o.c)) + ch_advection_flux(rho_n, n.c, n.u, n.v) -
            (1.0 / G.Pe) * lap_mu - (alpha / G.Pe) * lap_p;
  R.chem = detail::chem_residual(o, n, rho_o, p);

  BcSet tb = p.predictor_bc();
  detail::zero_outside(R.momx, tb);
  detail::zero_outside(R.momy, tb);
  detail::zero_outside(R.projx, p.bc);
  detail::zero_outside(R.projy, p.bc);
  detail::zero_outside(R.mass, p.bc);
  detail::zero_outside(R.phase, p.bc);
  detail::zero_outside(R.chem, p.bc);
  return R;
}

inline Residual residual(const State& o, const State& n, const SchemeParams& p) {
  return p.scheme == Scheme::primitive ? residual_primitive(o, n, p) : residual_projection(o, n, p);
}

template <class Loc>
double max_abs(const Field<Loc>& f) {
  double m = 0.0;
  for (double x : f.data()) {
    if (std::isnan(x)) return x;
    m = std::max(m, std::abs(x));
  }
  return m;
}

struct ResidualNorms {
  double momx = 0, momy = 0, projx = 0, projy = 0, mass = 0, phase = 0, chem = 0;
  double max() const {
    double vals[] = {momx, momy, projx, projy, mass, phase, chem};
    double m = 0.0;
    for (double v : vals) {
      if (std::isnan(v)) return v;
      m = std::max(m, v);
    }
    return m;
  }
};

inline ResidualNorms residual_norms(const Residual& r) {
  return {max_abs(r.momx), max_abs(r.momy), max_abs(r.projx), max_abs(r.projy),
          max_abs(r.mass), max_abs(r.phase), max_abs(r.chem)};
}

}  // namespace qnsch
