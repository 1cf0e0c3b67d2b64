#pragma once
/// @file operators.hpp
/// @brief Two-point averages/differences between staggered locations, inner products, norms.
///
/// The mapping is chosen by the source type and the axis:
///
///   source    avg_x / diff_x      avg_y / diff_y
///   EwEdge    a_x, d_x -> Cell    A_y, D_y (script) -> Vertex
///   NsEdge    A_x, D_x (script) -> Vertex    a_y, d_y -> Cell
///   Cell      A_x, D_x -> EwEdge  A_y, D_y -> NsEdge
///   Vertex    A_x, D_x (fraktur) -> NsEdge   A_y, D_y (fraktur) -> EwEdge
///
/// plus avg_xy(Cell) -> Vertex, the four-point mean. Results are written wherever the
/// stencil stays inside the source storage; entries it cannot reach are left zero.

#include <cmath>
#include <sstream>

#include "qnsch/grid.hpp"

namespace qnsch {

// ---------------------------------------------------------------------------
// Edge -> cell

inline CellField avg_x(const EwEdgeField& u) {
  CellField r(u.grid());
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= r.ihi(); ++i) r(i, j) = 0.5 * (u(i, j) + u(i - 1, j));
  return r;
}
inline CellField diff_x(const EwEdgeField& u) {
  CellField r(u.grid());
  const double ih = 1.0 / u.grid().h;
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= r.ihi(); ++i) r(i, j) = (u(i, j) - u(i - 1, j)) * ih;
  return r;
}
inline CellField avg_y(const NsEdgeField& v) {
  CellField r(v.grid());
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= r.ihi(); ++i) r(i, j) = 0.5 * (v(i, j) + v(i, j - 1));
  return r;
}
inline CellField diff_y(const NsEdgeField& v) {
  CellField r(v.grid());
  const double ih = 1.0 / v.grid().h;
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= r.ihi(); ++i) r(i, j) = (v(i, j) - v(i, j - 1)) * ih;
  return r;
}

// ---------------------------------------------------------------------------
// Cell -> edge

inline EwEdgeField avg_x(const CellField& p) {
  EwEdgeField r(p.grid());
  const int m1 = p.grid().m1;
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= m1; ++i) r(i, j) = 0.5 * (p(i + 1, j) + p(i, j));
  return r;
}
inline EwEdgeField diff_x(const CellField& p) {
  EwEdgeField r(p.grid());
  const int m1 = p.grid().m1;
  const double ih = 1.0 / p.grid().h;
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= m1; ++i) r(i, j) = (p(i + 1, j) - p(i, j)) * ih;
  return r;
}
inline NsEdgeField avg_y(const CellField& p) {
  NsEdgeField r(p.grid());
  const int m2 = p.grid().m2;
  for (int j = 0; j <= m2; ++j)
    for (int i = 0; i <= r.ihi(); ++i) r(i, j) = 0.5 * (p(i, j + 1) + p(i, j));
  return r;
}
inline NsEdgeField diff_y(const CellField& p) {
  NsEdgeField r(p.grid());
  const int m2 = p.grid().m2;
  const double ih = 1.0 / p.grid().h;
  for (int j = 0; j <= m2; ++j)
    for (int i = 0; i <= r.ihi(); ++i) r(i, j) = (p(i, j + 1) - p(i, j)) * ih;
  return r;
}

// ---------------------------------------------------------------------------
// Cell / edge -> vertex

inline VertexField avg_xy(const CellField& p) {
  VertexField r(p.grid());
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= r.ihi(); ++i)
      r(i, j) = 0.25 * (p(i, j) + p(i + 1, j) + p(i, j + 1) + p(i + 1, j + 1));
  return r;
}
inline VertexField avg_x(const NsEdgeField& v) {
  VertexField r(v.grid());
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= r.ihi(); ++i) r(i, j) = 0.5 * (v(i + 1, j) + v(i, j));
  return r;
}
inline VertexField diff_x(const NsEdgeField& v) {
  VertexField r(v.grid());
  const double ih = 1.0 / v.grid().h;
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= r.ihi(); ++i) r(i, j) = (v(i + 1, j) - v(i, j)) * ih;
  return r;
}
inline VertexField avg_y(const EwEdgeField& u) {
  VertexField r(u.grid());
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= r.ihi(); ++i) r(i, j) = 0.5 * (u(i, j + 1) + u(i, j));
  return r;
}
inline VertexField diff_y(const EwEdgeField& u) {
  VertexField r(u.grid());
  const double ih = 1.0 / u.grid().h;
  for (int j = 0; j <= r.jhi(); ++j)
    for (int i = 0; i <= r.ihi(); ++i) r(i, j) = (u(i, j + 1) - u(i, j)) * ih;
  return r;
}

// ---------------------------------------------------------------------------
// Vertex -> edge

inline NsEdgeField avg_x(const VertexField& f) {
  NsEdgeField r(f.grid());
  const GridSpec& g = f.grid();
  for (int j = 0; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i) r(i, j) = 0.5 * (f(i, j) + f(i - 1, j));
  return r;
}
inline NsEdgeField diff_x(const VertexField& f) {
  NsEdgeField r(f.grid());
  const GridSpec& g = f.grid();
  const double ih = 1.0 / g.h;
  for (int j = 0; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i) r(i, j) = (f(i, j) - f(i - 1, j)) * ih;
  return r;
}
inline EwEdgeField avg_y(const VertexField& f) {
  EwEdgeField r(f.grid());
  const GridSpec& g = f.grid();
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 0; i <= g.m1; ++i) r(i, j) = 0.5 * (f(i, j) + f(i, j - 1));
  return r;
}
inline EwEdgeField diff_y(const VertexField& f) {
  EwEdgeField r(f.grid());
  const GridSpec& g = f.grid();
  const double ih = 1.0 / g.h;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 0; i <= g.m1; ++i) r(i, j) = (f(i, j) - f(i, j - 1)) * ih;
  return r;
}

// ---------------------------------------------------------------------------
// Inner products. Sums run over interior cells in a fixed row-major order.

inline double inner(const CellField& a, const CellField& b) {
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i) s += a(i, j) * b(i, j);
  return s;
}

/// (w, a b)_2 over interior cells.
inline double inner(const CellField& a, const CellField& b, const CellField& w) {
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i) s += w(i, j) * a(i, j) * b(i, j);
  return s;
}

/// [u, g]_ew = (a_x(u g), 1)_2.
inline double inner(const EwEdgeField& a, const EwEdgeField& b) {
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i) s += 0.5 * (a(i, j) * b(i, j) + a(i - 1, j) * b(i - 1, j));
  return s;
}

/// [w u, g]_ew = (w, a_x(u g))_2.
inline double inner(const EwEdgeField& a, const EwEdgeField& b, const CellField& w) {
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i)
      s += w(i, j) * 0.5 * (a(i, j) * b(i, j) + a(i - 1, j) * b(i - 1, j));
  return s;
}

/// [v, w]_ns = (a_y(v w), 1)_2.
inline double inner(const NsEdgeField& a, const NsEdgeField& b) {
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i) s += 0.5 * (a(i, j) * b(i, j) + a(i, j - 1) * b(i, j - 1));
  return s;
}

inline double inner(const NsEdgeField& a, const NsEdgeField& b, const CellField& w) {
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i)
      s += w(i, j) * 0.5 * (a(i, j) * b(i, j) + a(i, j - 1) * b(i, j - 1));
  return s;
}

/// <f, g>_vc = (A(f g), 1)_2 with the four-point vertex-to-cell mean.
inline double inner(const VertexField& a, const VertexField& b) {
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i)
      s += 0.25 * (a(i, j) * b(i, j) + a(i - 1, j) * b(i - 1, j) + a(i, j - 1) * b(i, j - 1) +
                   a(i - 1, j - 1) * b(i - 1, j - 1));
  return s;
}

inline double inner(const VertexField& a, const VertexField& b, const CellField& w) {
  const GridSpec& g = a.grid();
  double s = 0.0;
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i)
      s += w(i, j) * 0.25 *
           (a(i, j) * b(i, j) + a(i - 1, j) * b(i - 1, j) + a(i, j - 1) * b(i, j - 1) +
            a(i - 1, j - 1) * b(i - 1, j - 1));
  return s;
}

// ---------------------------------------------------------------------------
// Norms

namespace detail {
inline void require_nonnegative(const CellField& w, const char* what) {
  const GridSpec& g = w.grid();
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i)
      if (!(w(i, j) >= 0.0)) {
        std::ostringstream os;
        os << what << ": negative weight " << w(i, j) << " at cell (" << i << ", " << j << ")";
        throw DomainError(os.str());
      }
}
}  // namespace detail

/// ||phi||_2 = sqrt(h^2 (phi, phi)_2).
inline double norm_l2(const CellField& p) {
  const double h = p.grid().h;
  return std::sqrt(h * h * inner(p, p));
}

/// ||sqrt(w) u||_2 for the velocity pair.
inline double norm_weighted_velocity(const CellField& w, const EwEdgeField& u,
                                     const NsEdgeField& v) {
  detail::require_nonnegative(w, "weighted velocity norm");
  const double h = w.grid().h;
  return std::sqrt(h * h * (inner(u, u, w) + inner(v, v, w)));
}

/// ||sqrt(w) grad_D phi||_2.
inline double norm_weighted_gradient(const CellField& w, const CellField& p) {
  detail::require_nonnegative(w, "weighted gradient norm");
  const double h = w.grid().h;
  EwEdgeField gx = diff_x(p);
  NsEdgeField gy = diff_y(p);
  return std::sqrt(h * h * (inner(gx, gx, w) + inner(gy, gy, w)));
}

/// ||sqrt(w) grad_d u||_2: cell terms d_x u, d_y v and vertex terms D_y u, D_x v.
inline double norm_weighted_velocity_gradient(const CellField& w, const EwEdgeField& u,
                                              const NsEdgeField& v) {
  detail::require_nonnegative(w, "weighted velocity-gradient norm");
  const double h = w.grid().h;
  CellField dxu = diff_x(u);
  CellField dyv = diff_y(v);
  VertexField dyu = diff_y(u);
  VertexField dxv = diff_x(v);
  double s = inner(dxu, dxu, w) + inner(dyu, dyu, w) + inner(dxv, dxv, w) + inner(dyv, dyv, w);
  return std::sqrt(h * h * s);
}

/// ||sqrt(w) div_d u||_2.
inline double norm_weighted_divergence(const CellField& w, const EwEdgeField& u,
                                       const NsEdgeField& v) {
  detail::require_nonnegative(w, "weighted divergence norm");
  const double h = w.grid().h;
  CellField dxu = diff_x(u);
  CellField dyv = diff_y(v);
  double s = inner(dxu, dxu, w) + 2.0 * inner(dxu, dyv, w) + inner(dyv, dyv, w);
  return std::sqrt(std::max(0.0, h * h * s));
}

}  // namespace qnsch
