#pragma once
/// @file multigrid.hpp
/// @brief FAS V-cycle for one time step, with red-black nonlinear smoothers.
///
/// Smoothers work on pointwise residual kernels (below) that reproduce the operator
/// form in schemes.hpp entry by entry. Local Jacobians are built by perturbing the
/// unknowns in place; ImageMap keeps every ghost copy of a perturbed unknown in step,
/// so periodic wraps and wall reflections are seen by the local solve exactly as the
/// global residual sees them.
///
/// Within one colour, box corrections are computed from the frozen iterate and then
/// applied together, so a sweep does not depend on the traversal order inside a colour.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <vector>

#include "qnsch/errors.hpp"
#include "qnsch/grid.hpp"
#include "qnsch/operators.hpp"
#include "qnsch/physics.hpp"
#include "qnsch/schemes.hpp"

namespace qnsch {

struct MgConfig {
  int n_levels = 0;  ///< 0 picks the deepest hierarchy whose coarsest grid keeps m1, m2 >= 4
  int pre_smooths = 2;
  int post_smooths = 2;
  int coarse_sweeps = 20;
  double tol = 1e-7;
  int max_cycles = 200;
  int newton_iters = 5;
  double newton_tol = 1e-10;

  void validate() const {
    if (n_levels < 0) throw ConfigError("multigrid.n_levels must be >= 0 (0 = automatic)");
    if (pre_smooths < 1 || post_smooths < 1 || coarse_sweeps < 1)
      throw ConfigError("multigrid sweep counts must be positive");
    if (max_cycles < 1 || newton_iters < 1) throw ConfigError("multigrid cycle counts must be positive");
    if (!(tol > 0.0) || !(newton_tol > 0.0)) throw ConfigError("multigrid tolerances must be positive");
  }
};

/// Deepest usable hierarchy for g.
inline int max_levels(const GridSpec& g) {
  int n = 1;
  GridSpec c = g;
  while (c.can_coarsen() && c.m1 / 2 >= 4 && c.m2 / 2 >= 4) {
    c = c.coarsened();
    ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------
// Ghost images

/// For every stored entry: which unknown it copies (with sign), or none (fixed zero).
template <class Loc>
class ImageMap {
 public:
  ImageMap() = default;
  ImageMap(const GridSpec& g, const BcSet& bc) {
    Field<Loc> probe(g);
    auto mark = [&](int i, int j) {
      std::size_t k = probe.index(i, j);
      probe.data()[k] = static_cast<double>(k + 1);
    };
    if constexpr (std::is_same_v<Loc, Cell>)
      for_cells(g, mark);
    else if constexpr (std::is_same_v<Loc, EwEdge>)
      for_ew_unknowns(g, bc, mark);
    else
      for_ns_unknowns(g, bc, mark);
    fill_ghost(probe, bc);

    const std::size_t n = probe.data().size();
    src_.assign(n, -1);
    sign_.assign(n, 0.0);
    std::vector<int> count(n + 1, 0);
    for (std::size_t s = 0; s < n; ++s) {
      double v = probe.data()[s];
      if (v == 0.0) continue;
      src_[s] = static_cast<long>(std::abs(v)) - 1;
      sign_[s] = v > 0.0 ? 1.0 : -1.0;
      if (static_cast<std::size_t>(src_[s]) != s) ++count[src_[s] + 1];
    }
    for (std::size_t k = 0; k < n; ++k) count[k + 1] += count[k];
    start_ = count;
    img_.resize(count[n]);
    img_sign_.resize(count[n]);
    std::vector<int> fillp(count.begin(), count.end() - 1);
    for (std::size_t s = 0; s < n; ++s) {
      if (src_[s] < 0 || static_cast<std::size_t>(src_[s]) == s) continue;
      int q = fillp[src_[s]]++;
      img_[q] = s;
      img_sign_[q] = sign_[s];
    }
  }

  /// Storage index of the unknown behind entry s, or -1 for a fixed wall value.
  long canonical(std::size_t s) const { return src_[s]; }
  /// +1 or -1 for a copy of an unknown, 0 for a fixed wall value.
  double sign(std::size_t s) const { return sign_[s]; }

  /// Writes value to unknown k and to every ghost copy of it.
  void set(Field<Loc>& f, std::size_t k, double value) const {
    f.data()[k] = value;
    for (int q = start_[k]; q < start_[k + 1]; ++q) f.data()[img_[q]] = img_sign_[q] * value;
  }

 private:
  std::vector<long> src_;
  std::vector<double> sign_;
  std::vector<int> start_;
  std::vector<std::size_t> img_;
  std::vector<double> img_sign_;
};

// ---------------------------------------------------------------------------
// One level of the hierarchy

struct Level {
  GridSpec grid;
  SchemeParams params;
  State old_s;   ///< frozen old-time state
  State w;       ///< current iterate
  Residual rhs;  ///< FAS right-hand side, zero on the finest level

  // Coefficients that depend on the old state only.
  CellField rho_o, mu_o, F_o, gsq_o, px, py;
  VertexField mu_v, qx, qy;
  EwEdgeField amx, arx_o, hx;
  NsEdgeField amy, ary_o, hy;

  /// rho of the iterate's c; refreshed whenever c changes outside the CH solve.
  CellField rho_n;

  ImageMap<Cell> cim;
  ImageMap<EwEdge> uim, utim;
  ImageMap<NsEdge> vim, vtim;

  Level() = default;
  Level(const GridSpec& g, const SchemeParams& p)
      : grid(g), params(p), old_s(g), w(g), rhs(g), rho_n(g), cim(g, p.bc), uim(g, p.velocity_bc()),
        utim(g, p.predictor_bc()), vim(g, p.velocity_bc()), vtim(g, p.predictor_bc()) {}

  void set_old(const State& o) {
    old_s = o;
    fill_state_ghosts(old_s, params);
    const FluidPair& fp = params.fluid;
    rho_o = density_field(old_s.c, fp);
    mu_o = viscosity_field(old_s.c, fp);
    F_o = map(old_s.c, double_well_F);
    gsq_o = grad_sq_cell(old_s.c);
    CellField mob = mobility_field(old_s.c, params.groups.epsilon);
    amx = avg_x(mob);
    amy = avg_y(mob);
    arx_o = avg_x(rho_o);
    ary_o = avg_y(rho_o);
    mu_v = avg_xy(mu_o);
    px = rho_o * avg_x(old_s.u);
    py = rho_o * avg_y(old_s.v);
    VertexField rho_v = avg_xy(rho_o);
    qx = rho_v * avg_x(old_s.v);
    qy = rho_v * avg_y(old_s.u);
    hx = 0.5 * (diff_x(px) + diff_y(qx));
    hy = 0.5 * (diff_x(qy) + diff_y(py));
  }

  void refresh_density() { rho_n = density_field(w.c, params.fluid); }
};

// ---------------------------------------------------------------------------
// Pointwise residual kernels (lhs - rhs - fas_rhs) on the current iterate.

namespace kernel {

inline double rho(const Level& L, double c) { return L.params.fluid.density(c); }

inline double div_at(const EwEdgeField& u, const NsEdgeField& v, int i, int j, double ih) {
  return (u(i, j) - u(i - 1, j)) * ih + (v(i, j) - v(i, j - 1)) * ih;
}

inline double lapm(const Level& L, const CellField& f, int i, int j) {
  const double ih = 1.0 / L.grid.h;
  double x = L.amx(i, j) * (f(i + 1, j) - f(i, j)) * ih - L.amx(i - 1, j) * (f(i, j) - f(i - 1, j)) * ih;
  double y = L.amy(i, j) * (f(i, j + 1) - f(i, j)) * ih - L.amy(i, j - 1) * (f(i, j) - f(i, j - 1)) * ih;
  return x * ih + y * ih;
}

inline double adv_x(const Level& L, const EwEdgeField& u, int i, int j) {
  const double ih = 1.0 / L.grid.h;
  double a = 0.5 * (L.px(i + 1, j) * (u(i + 1, j) - u(i, j)) * ih + L.px(i, j) * (u(i, j) - u(i - 1, j)) * ih);
  double b = 0.5 * (L.qx(i, j) * (u(i, j + 1) - u(i, j)) * ih + L.qx(i, j - 1) * (u(i, j) - u(i, j - 1)) * ih);
  return a + b + L.hx(i, j) * u(i, j);
}

inline double adv_y(const Level& L, const NsEdgeField& v, int i, int j) {
  const double ih = 1.0 / L.grid.h;
  double a = 0.5 * (L.qy(i, j) * (v(i + 1, j) - v(i, j)) * ih + L.qy(i - 1, j) * (v(i, j) - v(i - 1, j)) * ih);
  double b = 0.5 * (L.py(i, j + 1) * (v(i, j + 1) - v(i, j)) * ih + L.py(i, j) * (v(i, j) - v(i, j - 1)) * ih);
  return a + b + L.hy(i, j) * v(i, j);
}

inline double visc_x(const Level& L, const EwEdgeField& u, const NsEdgeField& v, int i, int j) {
  const double ih = 1.0 / L.grid.h, Re = L.params.groups.Re;
  const CellField& mu = L.mu_o;
  double lap = (mu(i + 1, j) * (u(i + 1, j) - u(i, j)) * ih - mu(i, j) * (u(i, j) - u(i - 1, j)) * ih) * ih +
               (L.mu_v(i, j) * (u(i, j + 1) - u(i, j)) * ih - L.mu_v(i, j - 1) * (u(i, j) - u(i, j - 1)) * ih) * ih;
  double grad = (mu(i + 1, j) * div_at(u, v, i + 1, j, ih) - mu(i, j) * div_at(u, v, i, j, ih)) * ih;
  return (1.0 / Re) * lap + (1.0 / (3.0 * Re)) * grad;
}

inline double visc_y(const Level& L, const EwEdgeField& u, const NsEdgeField& v, int i, int j) {
  const double ih = 1.0 / L.grid.h, Re = L.params.groups.Re;
  const CellField& mu = L.mu_o;
  double lap = (L.mu_v(i, j) * (v(i + 1, j) - v(i, j)) * ih - L.mu_v(i - 1, j) * (v(i, j) - v(i - 1, j)) * ih) * ih +
               (mu(i, j + 1) * (v(i, j + 1) - v(i, j)) * ih - mu(i, j) * (v(i, j) - v(i, j - 1)) * ih) * ih;
  double grad = (mu(i, j + 1) * div_at(u, v, i, j + 1, ih) - mu(i, j) * div_at(u, v, i, j, ih)) * ih;
  return (1.0 / Re) * lap + (1.0 / (3.0 * Re)) * grad;
}

/// Cross-paired surface tension on an EW edge with density field values ra, rb.
inline double st_x(const Level& L, const CellField& c, double r_l, double r_r, int i, int j) {
  const CellField& m = L.w.mu_bar;
  return 0.5 * (r_r * m(i, j) + r_l * m(i + 1, j)) * (c(i + 1, j) - c(i, j)) / L.grid.h;
}
inline double st_y(const Level& L, const CellField& c, double r_b, double r_t, int i, int j) {
  const CellField& m = L.w.mu_bar;
  return 0.5 * (r_t * m(i, j) + r_b * m(i, j + 1)) * (c(i, j + 1) - c(i, j)) / L.grid.h;
}

/// Predictor (projection) or full momentum (primitive) equation on an EW edge.
inline double momx(const Level& L, int i, int j) {
  const State& n = L.w;
  const SchemeParams& p = L.params;
  const double dt = p.dt, iM = 1.0 / p.groups.M;
  const bool prim = p.scheme == Scheme::primitive;
  const EwEdgeField& u = prim ? n.u : n.u_tilde;
  const NsEdgeField& v = prim ? n.v : n.v_tilde;
  double arn = 0.5 * (L.rho_n(i + 1, j) + L.rho_n(i, j));
  double ar = L.arx_o(i, j);
  double r = (1.0 / dt) * (ar * (u(i, j) - L.old_s.u(i, j))) + adv_x(L, u, i, j) +
             (0.5 / dt) * ((arn - ar) * u(i, j)) - visc_x(L, u, v, i, j);
  if (prim) {
    double st = st_x(L, L.old_s.c, L.rho_o(i, j), L.rho_o(i + 1, j), i, j);
    r += iM * ((n.p_bar(i + 1, j) - n.p_bar(i, j)) / L.grid.h - st);
  }
  return r - L.rhs.momx(i, j);
}

inline double momy(const Level& L, int i, int j) {
  const State& n = L.w;
  const SchemeParams& p = L.params;
  const double dt = p.dt, iM = 1.0 / p.groups.M;
  const bool prim = p.scheme == Scheme::primitive;
  const EwEdgeField& u = prim ? n.u : n.u_tilde;
  const NsEdgeField& v = prim ? n.v : n.v_tilde;
  double rb = L.rho_n(i, j), rt = L.rho_n(i, j + 1);
  double arn = 0.5 * (rt + rb);
  double ar = L.ary_o(i, j);
  double r = (1.0 / dt) * (ar * (v(i, j) - L.old_s.v(i, j))) + adv_y(L, v, i, j) +
             (0.5 / dt) * ((arn - ar) * v(i, j)) - visc_y(L, u, v, i, j);
  if (prim) {
    double st = st_y(L, L.old_s.c, L.rho_o(i, j), L.rho_o(i, j + 1), i, j);
    r += iM * ((n.p_bar(i, j + 1) - n.p_bar(i, j)) / L.grid.h - st);
    r += (1.0 / p.groups.Fr) * (0.5 * (L.rho_o(i, j + 1) + L.rho_o(i, j)));
  } else if (p.projection_gravity == GravityPlacement::predictor) {
    r += (1.0 / p.groups.Fr) * (0.5 * (rt + rb));
  }
  return r - L.rhs.momy(i, j);
}

/// Projection correction equation on an EW edge.
inline double projx(const Level& L, int i, int j) {
  const State& n = L.w;
  const double dt = L.params.dt, iM = 1.0 / L.params.groups.M;
  double rl = L.rho_n(i, j), rr = L.rho_n(i + 1, j);
  double arn = 0.5 * (rr + rl);
  double st = st_x(L, n.c, rl, rr, i, j);
  double r = (1.0 / dt) * (arn * (n.u(i, j) - n.u_tilde(i, j))) +
             iM * ((n.p_bar(i + 1, j) - n.p_bar(i, j)) / L.grid.h - st);
  return r - L.rhs.projx(i, j);
}

inline double projy(const Level& L, int i, int j) {
  const State& n = L.w;
  const SchemeParams& p = L.params;
  const double dt = p.dt, iM = 1.0 / p.groups.M;
  double rb = L.rho_n(i, j), rt = L.rho_n(i, j + 1);
  double arn = 0.5 * (rt + rb);
  double st = st_y(L, n.c, rb, rt, i, j);
  double r = (1.0 / dt) * (arn * (n.v(i, j) - n.v_tilde(i, j))) +
             iM * ((n.p_bar(i, j + 1) - n.p_bar(i, j)) / L.grid.h - st);
  if (p.projection_gravity == GravityPlacement::correction) r += (1.0 / p.groups.Fr) * (0.5 * (rt + rb));
  return r - L.rhs.projy(i, j);
}

inline double mass(const Level& L, int i, int j) {
  const State& n = L.w;
  const NondimGroups& G = L.params.groups;
  const double a = L.params.alpha();
  double r = div_at(n.u, n.v, i, j, 1.0 / L.grid.h) - (a / G.Pe) * lapm(L, n.mu_bar, i, j) -
             (a * a / G.Pe) * lapm(L, n.p_bar, i, j);
  return r - L.rhs.mass(i, j);
}

inline double phase(const Level& L, int i, int j) {
  const State& n = L.w;
  const NondimGroups& G = L.params.groups;
  const double a = L.params.alpha(), dt = L.params.dt, ih = 1.0 / L.grid.h;
  const CellField& co = L.old_s.c;
  double r;
  if (L.params.scheme == Scheme::primitive) {
    const CellField& R = L.rho_o;
    double fx = R(i + 1, j) * (co(i + 1, j) - co(i, j)) * ih * n.u(i, j) +
                R(i - 1, j) * (co(i, j) - co(i - 1, j)) * ih * n.u(i - 1, j);
    double fy = R(i, j + 1) * (co(i, j + 1) - co(i, j)) * ih * n.v(i, j) +
                R(i, j - 1) * (co(i, j) - co(i, j - 1)) * ih * n.v(i, j - 1);
    r = (1.0 / dt) * (rho(L, n.c(i, j)) * (n.c(i, j) - co(i, j))) + 0.5 * (fx + fy);
  } else {
    const CellField& c = n.c;
    double fx = rho(L, c(i + 1, j)) * (c(i + 1, j) - c(i, j)) * ih * n.u(i, j) +
                rho(L, c(i - 1, j)) * (c(i, j) - c(i - 1, j)) * ih * n.u(i - 1, j);
    double fy = rho(L, c(i, j + 1)) * (c(i, j + 1) - c(i, j)) * ih * n.v(i, j) +
                rho(L, c(i, j - 1)) * (c(i, j) - c(i, j - 1)) * ih * n.v(i, j - 1);
    r = (1.0 / dt) * (L.rho_o(i, j) * (c(i, j) - co(i, j))) + 0.5 * (fx + fy);
  }
  r -= (1.0 / G.Pe) * lapm(L, n.mu_bar, i, j) + (a / G.Pe) * lapm(L, n.p_bar, i, j);
  return r - L.rhs.phase(i, j);
}

inline double chem(const Level& L, int i, int j) {
  const State& n = L.w;
  const NondimGroups& G = L.params.groups;
  const FluidPair& fp = L.params.fluid;
  const double a = fp.alpha(), ih = 1.0 / L.grid.h;
  const CellField& c = n.c;
  const CellField& co = L.old_s.c;
  auto rh = [&](int ii, int jj) { return 0.5 * (rho(L, c(ii, jj)) + L.rho_o(ii, jj)); };
  auto ch = [&](int ii, int jj) { return 0.5 * (c(ii, jj) + co(ii, jj)); };

  double rs = rho(L, c(i, j)), ro = L.rho_o(i, j);
  double rhalf = 0.5 * (rs + ro);
  double Fhalf = 0.5 * (double_well_F(c(i, j)) + L.F_o(i, j));
  double gx1 = (c(i + 1, j) - c(i, j)) * ih, gx0 = (c(i, j) - c(i - 1, j)) * ih;
  double gy1 = (c(i, j + 1) - c(i, j)) * ih, gy0 = (c(i, j) - c(i, j - 1)) * ih;
  double gsq_n = 0.5 * (gx1 * gx1 + gx0 * gx0) + 0.5 * (gy1 * gy1 + gy0 * gy0);
  double gsq_half = 0.5 * (gsq_n + L.gsq_o(i, j));
  double ravg = -a * rs * ro;
  double gavg = g_avg(c(i, j), co(i, j));

  double c0 = ch(i, j), r0 = rh(i, j);
  double dx = 0.5 * (rh(i + 1, j) + r0) * (ch(i + 1, j) - c0) * ih - 0.5 * (r0 + rh(i - 1, j)) * (c0 - ch(i - 1, j)) * ih;
  double dy = 0.5 * (rh(i, j + 1) + r0) * (ch(i, j + 1) - c0) * ih - 0.5 * (r0 + rh(i, j - 1)) * (c0 - ch(i, j - 1)) * ih;
  double div = dx * ih + dy * ih;

  const double bulk = G.M * G.eta / (G.epsilon * G.We);
  const double grad = G.epsilon * G.eta * G.M / G.We;
  double w = L.params.scheme == Scheme::primitive ? rs : ro;
  double r = w * n.mu_bar(i, j);
  r -= bulk * (rhalf * gavg + Fhalf * ravg);
  r -= (0.5 * grad) * (gsq_half * ravg);
  r += grad * div;
  return r - L.rhs.chem(i, j);
}

}  // namespace kernel

/// Residual assembled from the pointwise kernels; must agree with residual() - rhs.
inline Residual pointwise_residual(Level& L) {
  L.refresh_density();
  const GridSpec& g = L.grid;
  const SchemeParams& p = L.params;
  Residual R(g);
  BcSet mb = p.scheme == Scheme::primitive ? p.bc : p.predictor_bc();
  for_ew_unknowns(g, mb, [&](int i, int j) { R.momx(i, j) = kernel::momx(L, i, j); });
  for_ns_unknowns(g, mb, [&](int i, int j) { R.momy(i, j) = kernel::momy(L, i, j); });
  if (p.scheme == Scheme::projection) {
    for_ew_unknowns(g, p.bc, [&](int i, int j) { R.projx(i, j) = kernel::projx(L, i, j); });
    for_ns_unknowns(g, p.bc, [&](int i, int j) { R.projy(i, j) = kernel::projy(L, i, j); });
  }
  for_cells(g, [&](int i, int j) {
    R.mass(i, j) = kernel::mass(L, i, j);
    R.phase(i, j) = kernel::phase(L, i, j);
    R.chem(i, j) = kernel::chem(L, i, j);
  });
  return R;
}

/// Reference residual of the level equations, residual() minus the FAS right-hand side.
inline Residual level_residual(const Level& L) {
  Residual R = residual(L.old_s, L.w, L.params);
  R.momx -= L.rhs.momx;
  R.momy -= L.rhs.momy;
  R.projx -= L.rhs.projx;
  R.projy -= L.rhs.projy;
  R.mass -= L.rhs.mass;
  R.phase -= L.rhs.phase;
  R.chem -= L.rhs.chem;
  return R;
}

// ---------------------------------------------------------------------------
// Small dense solves

namespace detail {

/// Gaussian elimination with partial pivoting; false when a pivot vanishes.
template <std::size_t N>
bool solve_dense(std::array<std::array<double, N>, N>& A, std::array<double, N>& b, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(A[r][k]) > std::abs(A[piv][k])) piv = r;
    if (!(std::abs(A[piv][k]) > 0.0) || !std::isfinite(A[piv][k])) return false;
    std::swap(A[k], A[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t r = k + 1; r < n; ++r) {
      double f = A[r][k] / A[k][k];
      for (std::size_t c = k; c < n; ++c) A[r][c] -= f * A[k][c];
      b[r] -= f * b[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t c = k + 1; c < n; ++c) s -= A[k][c] * b[c];
    b[k] = s / A[k][k];
  }
  return true;
}

/// Smallest allowed density denominator; keeps rho(c) within twice the heavier density.
inline double min_density_denominator(const FluidPair& fp) {
  return 0.5 * std::min(fp.rho1, fp.rho2);
}

inline bool density_admissible(const FluidPair& fp, double c) {
  return (fp.rho2 - fp.rho1) * c + fp.rho1 >= min_density_denominator(fp);
}

}  // namespace detail

struct SmootherStats {
  std::uint64_t ch_fallbacks = 0;
  std::uint64_t box_regularized = 0;
};

// ---------------------------------------------------------------------------
// Smoothers

/// Local Newton on the phase and chemical-potential equations at cell (i, j).
inline void smooth_ch_cell(Level& L, int i, int j, const MgConfig& cfg, SmootherStats* st = nullptr) {
  CellField& c = L.w.c;
  CellField& m = L.w.mu_bar;
  const std::size_t k = c.index(i, j);
  const FluidPair& fp = L.params.fluid;
  for (int it = 0; it < cfg.newton_iters; ++it) {
    double r1 = kernel::phase(L, i, j), r2 = kernel::chem(L, i, j);
    if (std::max(std::abs(r1), std::abs(r2)) <= cfg.newton_tol) return;
    const double c0 = c.data()[k], m0 = m.data()[k];

    // Both equations are affine in mu_bar.
    L.cim.set(m, k, m0 + 1.0);
    double J01 = kernel::phase(L, i, j) - r1, J11 = kernel::chem(L, i, j) - r2;
    L.cim.set(m, k, m0);

    double dc = 1e-7 * std::max(1.0, std::abs(c0));
    L.cim.set(c, k, c0 + dc);
    double J00 = (kernel::phase(L, i, j) - r1) / dc, J10 = (kernel::chem(L, i, j) - r2) / dc;
    L.cim.set(c, k, c0);

    double det = J00 * J11 - J01 * J10;
    double scale = std::abs(J00 * J11) + std::abs(J01 * J10);
    if (!std::isfinite(det) || std::abs(det) <= 1e-14 * scale || scale == 0.0) {
      if (st) ++st->ch_fallbacks;
      if (J11 != 0.0 && std::isfinite(J11)) L.cim.set(m, k, m0 - 0.5 * r2 / J11);
      return;
    }
    double step_c = (-r1 * J11 + r2 * J01) / det;
    double step_m = (-r2 * J00 + r1 * J10) / det;
    double lam = 1.0;
    for (int b = 0; b < 40 && !detail::density_admissible(fp, c0 + lam * step_c); ++b) lam *= 0.5;
    L.cim.set(c, k, c0 + lam * step_c);
    L.cim.set(m, k, m0 + lam * step_m);
  }
}

namespace detail {

enum class Var { u, v, ut, vt, p };

struct BoxUnknown {
  Var var;
  std::size_t k;  // storage index of the unknown
  int i, j;       // canonical location, where its equation is evaluated
};

struct BoxDelta {
  std::array<BoxUnknown, 5> unk;
  std::array<double, 5> d;
  std::size_t n = 0;
};

inline double& value_of(Level& L, const BoxUnknown& b) {
  switch (b.var) {
    case Var::u: return L.w.u.data()[b.k];
    case Var::v: return L.w.v.data()[b.k];
    case Var::ut: return L.w.u_tilde.data()[b.k];
    case Var::vt: return L.w.v_tilde.data()[b.k];
    case Var::p: break;
  }
  return L.w.p_bar.data()[b.k];
}

inline void set_value(Level& L, const BoxUnknown& b, double x) {
  switch (b.var) {
    case Var::u: L.uim.set(L.w.u, b.k, x); return;
    case Var::v: L.vim.set(L.w.v, b.k, x); return;
    case Var::ut: L.utim.set(L.w.u_tilde, b.k, x); return;
    case Var::vt: L.vtim.set(L.w.v_tilde, b.k, x); return;
    case Var::p: L.cim.set(L.w.p_bar, b.k, x); return;
  }
}

inline double equation_of(const Level& L, const BoxUnknown& b) {
  switch (b.var) {
    case Var::u:
    case Var::ut: return kernel::momx(L, b.i, b.j);
    case Var::v:
    case Var::vt: return kernel::momy(L, b.i, b.j);
    case Var::p: break;
  }
  return kernel::mass(L, b.i, b.j);
}

template <class Loc>
bool box_edge(const Field<Loc>& f, const ImageMap<Loc>& im, int i, int j, Var var, BoxUnknown& out) {
  long k = im.canonical(f.index(i, j));
  if (k < 0) return false;
  int ni = f.ni();
  out = BoxUnknown{var, static_cast<std::size_t>(k), static_cast<int>(k % ni) + Field<Loc>::ilo,
                   static_cast<int>(k / ni) + Field<Loc>::jlo};
  return true;
}

/// Unknowns of the box around cell (i, j); pressure only for the coupled box.
inline BoxDelta box_unknowns(const Level& L, int i, int j, bool tilde, bool with_pressure) {
  BoxDelta b;
  BoxUnknown x{};
  const EwEdgeField& u = tilde ? L.w.u_tilde : L.w.u;
  const NsEdgeField& v = tilde ? L.w.v_tilde : L.w.v;
  const ImageMap<EwEdge>& ui = tilde ? L.utim : L.uim;
  const ImageMap<NsEdge>& vi = tilde ? L.vtim : L.vim;
  Var vu = tilde ? Var::ut : Var::u, vv = tilde ? Var::vt : Var::v;
  if (box_edge(u, ui, i - 1, j, vu, x)) b.unk[b.n++] = x;
  if (box_edge(u, ui, i, j, vu, x)) b.unk[b.n++] = x;
  if (box_edge(v, vi, i, j - 1, vv, x)) b.unk[b.n++] = x;
  if (box_edge(v, vi, i, j, vv, x)) b.unk[b.n++] = x;
  if (with_pressure) b.unk[b.n++] = BoxUnknown{Var::p, L.w.p_bar.index(i, j), i, j};
  return b;
}

/// One linear equation written as coefficients on stored entries (ghosts included).
struct Row {
  struct Entry {
    Var var;
    std::size_t s;
    double a;
  };
  std::array<Entry, 24> e;
  int n = 0;
  void add(Var var, std::size_t s, double a) { e[n++] = Entry{var, s, a}; }
};

/// Canonical unknown behind a row entry and the entry's coefficient on it.
inline std::pair<long, double> resolve(const Level& L, const Row::Entry& x) {
  switch (x.var) {
    case Var::u: return {L.uim.canonical(x.s), L.uim.sign(x.s) * x.a};
    case Var::v: return {L.vim.canonical(x.s), L.vim.sign(x.s) * x.a};
    case Var::ut: return {L.utim.canonical(x.s), L.utim.sign(x.s) * x.a};
    case Var::vt: return {L.vtim.canonical(x.s), L.vtim.sign(x.s) * x.a};
    case Var::p: break;
  }
  return {L.cim.canonical(x.s), L.cim.sign(x.s) * x.a};
}

/// Linear part of the momentum equation on EW edge (i, j) in its velocity and pressure.
inline Row row_momx(const Level& L, int i, int j, bool tilde) {
  const SchemeParams& p = L.params;
  const double ih = 1.0 / L.grid.h, ih2 = ih * ih, dt = p.dt, Re = p.groups.Re;
  const Var U = tilde ? Var::ut : Var::u, V = tilde ? Var::vt : Var::v;
  const EwEdgeField& u = L.w.u;
  const NsEdgeField& v = L.w.v;
  const CellField& mu = L.mu_o;
  double ar = L.arx_o(i, j), arn = 0.5 * (L.rho_n(i + 1, j) + L.rho_n(i, j));
  double g = 1.0 / (3.0 * Re);
  Row r;
  r.add(U, u.index(i, j),
        ar / dt + 0.5 * (arn - ar) / dt + L.hx(i, j) + 0.5 * (L.px(i, j) - L.px(i + 1, j)) * ih +
            0.5 * (L.qx(i, j - 1) - L.qx(i, j)) * ih +
            (1.0 / Re) * (mu(i + 1, j) + mu(i, j) + L.mu_v(i, j) + L.mu_v(i, j - 1)) * ih2 +
            g * (mu(i + 1, j) + mu(i, j)) * ih2);
  r.add(U, u.index(i + 1, j), 0.5 * L.px(i + 1, j) * ih - (1.0 / Re + g) * mu(i + 1, j) * ih2);
  r.add(U, u.index(i - 1, j), -0.5 * L.px(i, j) * ih - (1.0 / Re + g) * mu(i, j) * ih2);
  r.add(U, u.index(i, j + 1), 0.5 * L.qx(i, j) * ih - (1.0 / Re) * L.mu_v(i, j) * ih2);
  r.add(U, u.index(i, j - 1), -0.5 * L.qx(i, j - 1) * ih - (1.0 / Re) * L.mu_v(i, j - 1) * ih2);
  r.add(V, v.index(i + 1, j), -g * mu(i + 1, j) * ih2);
  r.add(V, v.index(i + 1, j - 1), g * mu(i + 1, j) * ih2);
  r.add(V, v.index(i, j), g * mu(i, j) * ih2);
  r.add(V, v.index(i, j - 1), -g * mu(i, j) * ih2);
  if (!tilde) {
    const double iM = 1.0 / p.groups.M;
    r.add(Var::p, L.w.p_bar.index(i + 1, j), iM * ih);
    r.add(Var::p, L.w.p_bar.index(i, j), -iM * ih);
  }
  return r;
}

inline Row row_momy(const Level& L, int i, int j, bool tilde) {
  const SchemeParams& p = L.params;
  const double ih = 1.0 / L.grid.h, ih2 = ih * ih, dt = p.dt, Re = p.groups.Re;
  const Var U = tilde ? Var::ut : Var::u, V = tilde ? Var::vt : Var::v;
  const EwEdgeField& u = L.w.u;
  const NsEdgeField& v = L.w.v;
  const CellField& mu = L.mu_o;
  double ar = L.ary_o(i, j), arn = 0.5 * (L.rho_n(i, j + 1) + L.rho_n(i, j));
  double g = 1.0 / (3.0 * Re);
  Row r;
  r.add(V, v.index(i, j),
        ar / dt + 0.5 * (arn - ar) / dt + L.hy(i, j) + 0.5 * (L.qy(i - 1, j) - L.qy(i, j)) * ih +
            0.5 * (L.py(i, j) - L.py(i, j + 1)) * ih +
            (1.0 / Re) * (L.mu_v(i, j) + L.mu_v(i - 1, j) + mu(i, j + 1) + mu(i, j)) * ih2 +
            g * (mu(i, j + 1) + mu(i, j)) * ih2);
  r.add(V, v.index(i + 1, j), 0.5 * L.qy(i, j) * ih - (1.0 / Re) * L.mu_v(i, j) * ih2);
  r.add(V, v.index(i - 1, j), -0.5 * L.qy(i - 1, j) * ih - (1.0 / Re) * L.mu_v(i - 1, j) * ih2);
  r.add(V, v.index(i, j + 1), 0.5 * L.py(i, j + 1) * ih - (1.0 / Re + g) * mu(i, j + 1) * ih2);
  r.add(V, v.index(i, j - 1), -0.5 * L.py(i, j) * ih - (1.0 / Re + g) * mu(i, j) * ih2);
  r.add(U, u.index(i, j + 1), -g * mu(i, j + 1) * ih2);
  r.add(U, u.index(i - 1, j + 1), g * mu(i, j + 1) * ih2);
  r.add(U, u.index(i, j), g * mu(i, j) * ih2);
  r.add(U, u.index(i - 1, j), -g * mu(i, j) * ih2);
  if (!tilde) {
    const double iM = 1.0 / p.groups.M;
    r.add(Var::p, L.w.p_bar.index(i, j + 1), iM * ih);
    r.add(Var::p, L.w.p_bar.index(i, j), -iM * ih);
  }
  return r;
}

inline Row row_mass(const Level& L, int i, int j) {
  const double ih = 1.0 / L.grid.h, ih2 = ih * ih;
  const double a = L.params.alpha(), k = a * a / L.params.groups.Pe;
  const CellField& P = L.w.p_bar;
  Row r;
  r.add(Var::u, L.w.u.index(i, j), ih);
  r.add(Var::u, L.w.u.index(i - 1, j), -ih);
  r.add(Var::v, L.w.v.index(i, j), ih);
  r.add(Var::v, L.w.v.index(i, j - 1), -ih);
  double ae = L.amx(i, j), aw = L.amx(i - 1, j), an = L.amy(i, j), as = L.amy(i, j - 1);
  r.add(Var::p, P.index(i, j), k * (ae + aw + an + as) * ih2);
  r.add(Var::p, P.index(i + 1, j), -k * ae * ih2);
  r.add(Var::p, P.index(i - 1, j), -k * aw * ih2);
  r.add(Var::p, P.index(i, j + 1), -k * an * ih2);
  r.add(Var::p, P.index(i, j - 1), -k * as * ih2);
  return r;
}

inline Row row_of(const Level& L, const BoxUnknown& b) {
  switch (b.var) {
    case Var::u: return row_momx(L, b.i, b.j, false);
    case Var::ut: return row_momx(L, b.i, b.j, true);
    case Var::v: return row_momy(L, b.i, b.j, false);
    case Var::vt: return row_momy(L, b.i, b.j, true);
    case Var::p: break;
  }
  return row_mass(L, b.i, b.j);
}

using BoxMatrix = std::array<std::array<double, 5>, 5>;

/// Box Jacobian from the analytic rows.
inline BoxMatrix box_jacobian(const Level& L, const BoxDelta& b) {
  BoxMatrix J{};
  for (std::size_t e = 0; e < b.n; ++e) {
    Row r = row_of(L, b.unk[e]);
    for (int t = 0; t < r.n; ++t) {
      auto [k, a] = resolve(L, r.e[t]);
      if (k < 0) continue;
      for (std::size_t q = 0; q < b.n; ++q)
        if (b.unk[q].var == r.e[t].var && b.unk[q].k == static_cast<std::size_t>(k)) J[e][q] += a;
    }
  }
  return J;
}

/// Box Jacobian by unit perturbation of each unknown; exact for these affine equations.
inline BoxMatrix box_jacobian_fd(Level& L, const BoxDelta& b) {
  BoxMatrix J{};
  std::array<double, 5> r{};
  for (std::size_t e = 0; e < b.n; ++e) r[e] = equation_of(L, b.unk[e]);
  for (std::size_t q = 0; q < b.n; ++q) {
    double x0 = value_of(L, b.unk[q]);
    set_value(L, b.unk[q], x0 + 1.0);
    for (std::size_t e = 0; e < b.n; ++e) J[e][q] = equation_of(L, b.unk[e]) - r[e];
    set_value(L, b.unk[q], x0);
  }
  return J;
}

/// Solves the linear box system for the corrections; the iterate is left unchanged.
inline void box_solve(Level& L, BoxDelta& b, SmootherStats* st) {
  const std::size_t n = b.n;
  std::array<double, 5> rhs{};
  for (std::size_t e = 0; e < n; ++e) rhs[e] = -equation_of(L, b.unk[e]);
  BoxMatrix J = box_jacobian(L, b);
  BoxMatrix A = J;
  std::array<double, 5> sol = rhs;
  if (!solve_dense<5>(A, sol, n)) {
    if (st) ++st->box_regularized;
    double s = 0.0;
    for (std::size_t e = 0; e < n; ++e) s = std::max(s, std::abs(J[e][e]));
    A = J;
    for (std::size_t e = 0; e < n; ++e) A[e][e] += 1e-12 * (s > 0.0 ? s : 1.0);
    sol = rhs;
    if (!solve_dense<5>(A, sol, n)) sol.fill(0.0);
  }
  for (std::size_t e = 0; e < n; ++e) b.d[e] = sol[e];
}

inline void box_apply(Level& L, const BoxDelta& b) {
  for (std::size_t e = 0; e < b.n; ++e) set_value(L, b.unk[e], value_of(L, b.unk[e]) + b.d[e]);
}

/// Re-evaluates u, v on the non-wall edges of cell (i, j) from the correction equation.
inline void explicit_velocity(Level& L, int i, int j) {
  BoxDelta b = box_unknowns(L, i, j, false, false);
  const double dt = L.params.dt;
  for (std::size_t e = 0; e < b.n; ++e) {
    const BoxUnknown& x = b.unk[e];
    double coef;
    double r;
    if (x.var == Var::u) {
      coef = 0.5 * (L.rho_n(x.i + 1, x.j) + L.rho_n(x.i, x.j)) / dt;
      r = kernel::projx(L, x.i, x.j);
    } else {
      coef = 0.5 * (L.rho_n(x.i, x.j + 1) + L.rho_n(x.i, x.j)) / dt;
      r = kernel::projy(L, x.i, x.j);
    }
    set_value(L, x, value_of(L, x) - r / coef);
  }
}

/// Scalar update of p_bar(i, j) from the mass equation, velocities following explicitly.
inline void pressure_cell(Level& L, int i, int j) {
  const std::size_t k = L.w.p_bar.index(i, j);
  const double p0 = L.w.p_bar.data()[k];
  explicit_velocity(L, i, j);
  double r0 = kernel::mass(L, i, j);
  L.cim.set(L.w.p_bar, k, p0 + 1.0);
  explicit_velocity(L, i, j);
  double J = kernel::mass(L, i, j) - r0;
  double p1 = (J != 0.0 && std::isfinite(J)) ? p0 - r0 / J : p0;
  L.cim.set(L.w.p_bar, k, p1);
  explicit_velocity(L, i, j);
}

}  // namespace detail

/// Coupled box update of the four edge velocities and the cell pressure (primitive).
inline void smooth_vanka_box(Level& L, int i, int j, SmootherStats* st = nullptr) {
  L.refresh_density();
  detail::BoxDelta b = detail::box_unknowns(L, i, j, false, true);
  detail::box_solve(L, b, st);
  detail::box_apply(L, b);
}

/// Four-step projection update at cell (i, j).
inline void smooth_projection_cell(Level& L, int i, int j, const MgConfig& cfg, SmootherStats* st = nullptr) {
  smooth_ch_cell(L, i, j, cfg, st);
  L.refresh_density();
  detail::BoxDelta b = detail::box_unknowns(L, i, j, true, false);
  detail::box_solve(L, b, st);
  detail::box_apply(L, b);
  detail::pressure_cell(L, i, j);
}

/// One red-black sweep over the level.
inline void smooth_sweep(Level& L, const MgConfig& cfg, SmootherStats* st = nullptr) {
  const GridSpec& g = L.grid;
  const bool prim = L.params.scheme == Scheme::primitive;
  std::vector<detail::BoxDelta> boxes;
  boxes.reserve(static_cast<std::size_t>(g.m1) * g.m2 / 2 + 1);
  for (int color = 0; color < 2; ++color) {
    auto each = [&](auto&& fn) {
      for (int j = 1; j <= g.m2; ++j)
        for (int i = 1 + ((j + 1 + color) & 1); i <= g.m1; i += 2) fn(i, j);
    };
    each([&](int i, int j) { smooth_ch_cell(L, i, j, cfg, st); });
    L.refresh_density();
    boxes.clear();
    each([&](int i, int j) {
      boxes.push_back(detail::box_unknowns(L, i, j, !prim, prim));
      detail::box_solve(L, boxes.back(), st);
    });
    for (const auto& b : boxes) detail::box_apply(L, b);
    if (!prim) each([&](int i, int j) { detail::pressure_cell(L, i, j); });
  }
}

// ---------------------------------------------------------------------------
// Transfers between adjacent levels

inline CellField restrict_field(const CellField& f, const GridSpec& gc) {
  CellField r(gc);
  for_cells(gc, [&](int I, int J) {
    int i = 2 * I, j = 2 * J;
    r(I, J) = 0.25 * (f(i - 1, j - 1) + f(i, j - 1) + f(i - 1, j) + f(i, j));
  });
  return r;
}

inline EwEdgeField restrict_field(const EwEdgeField& f, const GridSpec& gc) {
  EwEdgeField r(gc);
  for (int J = 1; J <= gc.m2; ++J)
    for (int I = 0; I <= gc.m1; ++I) r(I, J) = 0.5 * (f(2 * I, 2 * J - 1) + f(2 * I, 2 * J));
  return r;
}

inline NsEdgeField restrict_field(const NsEdgeField& f, const GridSpec& gc) {
  NsEdgeField r(gc);
  for (int J = 0; J <= gc.m2; ++J)
    for (int I = 1; I <= gc.m1; ++I) r(I, J) = 0.5 * (f(2 * I - 1, 2 * J) + f(2 * I, 2 * J));
  return r;
}

/// Bilinear interpolation of a ghost-filled coarse cell field onto the fine interior.
inline CellField prolong_field(const CellField& c, const GridSpec& gf) {
  CellField r(gf);
  for_cells(gf, [&](int i, int j) {
    int I = (i + 1) / 2, J = (j + 1) / 2;
    int In = (i & 1) ? I - 1 : I + 1, Jn = (j & 1) ? J - 1 : J + 1;
    r(i, j) = 0.5625 * c(I, J) + 0.1875 * (c(In, J) + c(I, Jn)) + 0.0625 * c(In, Jn);
  });
  return r;
}

inline EwEdgeField prolong_field(const EwEdgeField& c, const GridSpec& gf) {
  EwEdgeField r(gf);
  auto col = [&](int I, int J, int Jn) { return 0.75 * c(I, J) + 0.25 * c(I, Jn); };
  for (int j = 1; j <= gf.m2; ++j) {
    int J = (j + 1) / 2, Jn = (j & 1) ? J - 1 : J + 1;
    for (int i = 0; i <= gf.m1; ++i) {
      if (i % 2 == 0)
        r(i, j) = col(i / 2, J, Jn);
      else
        r(i, j) = 0.5 * (col((i - 1) / 2, J, Jn) + col((i + 1) / 2, J, Jn));
    }
  }
  return r;
}

inline NsEdgeField prolong_field(const NsEdgeField& c, const GridSpec& gf) {
  NsEdgeField r(gf);
  auto row = [&](int I, int In, int J) { return 0.75 * c(I, J) + 0.25 * c(In, J); };
  for (int j = 0; j <= gf.m2; ++j)
    for (int i = 1; i <= gf.m1; ++i) {
      int I = (i + 1) / 2, In = (i & 1) ? I - 1 : I + 1;
      if (j % 2 == 0)
        r(i, j) = row(I, In, j / 2);
      else
        r(i, j) = 0.5 * (row(I, In, (j - 1) / 2) + row(I, In, (j + 1) / 2));
    }
  return r;
}

inline State restrict_state(const State& f, const GridSpec& gc) {
  State r(gc);
  r.c = restrict_field(f.c, gc);
  r.mu_bar = restrict_field(f.mu_bar, gc);
  r.p_bar = restrict_field(f.p_bar, gc);
  r.u = restrict_field(f.u, gc);
  r.v = restrict_field(f.v, gc);
  r.u_tilde = restrict_field(f.u_tilde, gc);
  r.v_tilde = restrict_field(f.v_tilde, gc);
  r.time = f.time;
  return r;
}

inline Residual restrict_residual(const Residual& f, const GridSpec& gc, const SchemeParams& p) {
  Residual r(gc);
  r.momx = restrict_field(f.momx, gc);
  r.momy = restrict_field(f.momy, gc);
  r.projx = restrict_field(f.projx, gc);
  r.projy = restrict_field(f.projy, gc);
  r.mass = restrict_field(f.mass, gc);
  r.phase = restrict_field(f.phase, gc);
  r.chem = restrict_field(f.chem, gc);
  BcSet mb = p.scheme == Scheme::primitive ? p.bc : p.predictor_bc();
  detail::zero_outside(r.momx, mb);
  detail::zero_outside(r.momy, mb);
  detail::zero_outside(r.projx, p.bc);
  detail::zero_outside(r.projy, p.bc);
  if (p.scheme == Scheme::primitive) {
    r.projx.fill(0.0);
    r.projy.fill(0.0);
  }
  return r;
}

namespace detail {
template <class Loc>
void add_unknowns(Field<Loc>& f, const Field<Loc>& e, const ImageMap<Loc>& im) {
  for (std::size_t s = 0; s < f.data().size(); ++s)
    if (im.canonical(s) == static_cast<long>(s)) f.data()[s] += e.data()[s];
}
}  // namespace detail

/// fine += P(coarse - base), with ghosts refreshed on the fine level.
inline void prolong_correction(Level& fine, const State& coarse, const State& base, const SchemeParams& p) {
  const GridSpec& gc = coarse.grid();
  State e(gc);
  e.c = coarse.c - base.c;
  e.mu_bar = coarse.mu_bar - base.mu_bar;
  e.p_bar = coarse.p_bar - base.p_bar;
  e.u = coarse.u - base.u;
  e.v = coarse.v - base.v;
  e.u_tilde = coarse.u_tilde - base.u_tilde;
  e.v_tilde = coarse.v_tilde - base.v_tilde;
  fill_state_ghosts(e, p);
  const GridSpec& gf = fine.grid;
  detail::add_unknowns(fine.w.c, prolong_field(e.c, gf), fine.cim);
  detail::add_unknowns(fine.w.mu_bar, prolong_field(e.mu_bar, gf), fine.cim);
  detail::add_unknowns(fine.w.p_bar, prolong_field(e.p_bar, gf), fine.cim);
  detail::add_unknowns(fine.w.u, prolong_field(e.u, gf), fine.uim);
  detail::add_unknowns(fine.w.v, prolong_field(e.v, gf), fine.vim);
  if (p.scheme == Scheme::projection) {
    detail::add_unknowns(fine.w.u_tilde, prolong_field(e.u_tilde, gf), fine.utim);
    detail::add_unknowns(fine.w.v_tilde, prolong_field(e.v_tilde, gf), fine.vtim);
  }
  fill_state_ghosts(fine.w, p);
}

inline double max_norm(const Residual& r) { return residual_norms(r).max(); }

/// Interior mean of a cell field.
inline double interior_mean(const CellField& f) {
  const GridSpec& g = f.grid();
  double s = 0.0;
  for_cells(g, [&](int i, int j) { s += f(i, j); });
  return s / (static_cast<double>(g.m1) * g.m2);
}

// ---------------------------------------------------------------------------
// FAS driver

struct SolveStats {
  int cycles = 0;
  std::vector<double> history;  ///< residual max norm before the first and after each cycle
  ResidualNorms final_norms;
  SmootherStats smoother;
};

class FasSolver {
 public:
  FasSolver(const GridSpec& g, const SchemeParams& p, const MgConfig& cfg) : params_(p), cfg_(cfg) {
    p.validate();
    cfg.validate();
    if (g.m1 < 4 || g.m2 < 4) throw ConfigError("multigrid needs m1, m2 >= 4");
    if ((p.bc.periodic_x() && g.m1 % 2) || (p.bc.periodic_y() && g.m2 % 2))
      throw ConfigError("red-black ordering needs an even cell count along periodic axes");
    int depth = max_levels(g);
    int n = cfg.n_levels == 0 ? depth : cfg.n_levels;
    if (n > depth) throw ConfigError("multigrid.n_levels exceeds the coarsenable depth of the grid");
    GridSpec gl = g;
    for (int l = 0; l < n; ++l) {
      levels_.emplace_back(gl, p);
      if (l + 1 < n) gl = gl.coarsened();
    }
  }

  int n_levels() const { return static_cast<int>(levels_.size()); }
  Level& level(int l) { return levels_[static_cast<std::size_t>(l)]; }
  const MgConfig& config() const { return cfg_; }
  SmootherStats& smoother_stats() { return stats_; }

  /// Freezes the old state on every level and starts the iterate from it.
  void begin_step(const State& old) {
    State o = old;
    for (std::size_t l = 0; l < levels_.size(); ++l) {
      if (l > 0) o = restrict_state(o, levels_[l].grid);
      levels_[l].set_old(o);
    }
    Level& f = levels_[0];
    f.w = f.old_s;
    f.w.time = old.time + params_.dt;
    f.w.u_tilde = f.w.u;
    f.w.v_tilde = f.w.v;
    fill_state_ghosts(f.w, params_);
    f.rhs = Residual(f.grid);
  }

  /// One V-cycle on the current fine iterate; returns the fine residual max norm.
  double vcycle() {
    cycle(0);
    Level& f = levels_[0];
    double mean = interior_mean(f.w.p_bar);
    f.w.p_bar += -mean;
    return max_norm(level_residual(f));
  }

  State solve(const State& old, SolveStats* out = nullptr) {
    begin_step(old);
    SolveStats s;
    stats_ = SmootherStats{};
    Residual r = level_residual(levels_[0]);
    double norm = max_norm(r);
    s.history.push_back(norm);
    while (!(norm <= cfg_.tol)) {
      if (!std::isfinite(norm)) throw DivergenceError("non-finite residual", s.cycles);
      if (s.cycles >= cfg_.max_cycles) {
        ResidualNorms n = residual_norms(r);
        throw ConvergenceError(nonconvergence_message(n));
      }
      cycle(0);
      ++s.cycles;
      Level& f = levels_[0];
      f.w.p_bar += -interior_mean(f.w.p_bar);
      r = level_residual(f);
      norm = max_norm(r);
      s.history.push_back(norm);
    }
    s.final_norms = residual_norms(r);
    s.smoother = stats_;
    if (out) *out = s;
    return levels_[0].w;
  }

 private:
  static std::string nonconvergence_message(const ResidualNorms& n) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "multigrid did not reach tolerance; residual max norms: momx=%.3e momy=%.3e projx=%.3e "
                  "projy=%.3e mass=%.3e phase=%.3e chem=%.3e",
                  n.momx, n.momy, n.projx, n.projy, n.mass, n.phase, n.chem);
    return buf;
  }

  void cycle(std::size_t l) {
    Level& L = levels_[l];
    if (l + 1 == levels_.size()) {
      for (int s = 0; s < cfg_.coarse_sweeps; ++s) smooth_sweep(L, cfg_, &stats_);
      return;
    }
    for (int s = 0; s < cfg_.pre_smooths; ++s) smooth_sweep(L, cfg_, &stats_);
    Level& C = levels_[l + 1];
    Residual r = level_residual(L);
    State base = restrict_state(L.w, C.grid);
    fill_state_ghosts(base, params_);
    C.w = base;
    C.rhs = Residual(C.grid);
    Residual nc = residual(C.old_s, C.w, params_);
    Residual rr = restrict_residual(r, C.grid, params_);
    C.rhs.momx = nc.momx - rr.momx;
    C.rhs.momy = nc.momy - rr.momy;
    C.rhs.projx = nc.projx - rr.projx;
    C.rhs.projy = nc.projy - rr.projy;
    C.rhs.mass = nc.mass - rr.mass;
    C.rhs.phase = nc.phase - rr.phase;
    C.rhs.chem = nc.chem - rr.chem;
    cycle(l + 1);
    prolong_correction(L, C.w, base, params_);
    for (int s = 0; s < cfg_.post_smooths; ++s) smooth_sweep(L, cfg_, &stats_);
  }

  SchemeParams params_;
  MgConfig cfg_;
  std::vector<Level> levels_;
  SmootherStats stats_;
};

/// Advances old by one time step; throws ConvergenceError after max_cycles.
inline State solve_timestep(const State& old, const SchemeParams& p, const MgConfig& cfg,
                            SolveStats* stats = nullptr) {
  FasSolver s(old.grid(), p, cfg);
  return s.solve(old, stats);
}

}  // namespace qnsch
