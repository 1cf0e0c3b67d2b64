#pragma once
/// @file grid.hpp
/// @brief Staggered MAC grid, field containers and ghost-cell boundary logic.
///
/// Index map (zero-based storage, half-integer notation in comments):
///
///   Cell   (i, j)  -> centre (i-1/2, j-1/2)h,   i in 0..m1+1, j in 0..m2+1
///   EwEdge (i, j)  -> u_{i+1/2, j}  at (i h, (j-1/2)h),  i in -1..m1+1, j in 0..m2+1
///   NsEdge (i, j)  -> v_{i, j+1/2}  at ((i-1/2)h, j h),  i in 0..m1+1, j in -1..m2+1
///   Vertex (i, j)  -> f_{i+1/2, j+1/2} at (i h, j h),    i in 0..m1,   j in 0..m2
///
/// Interior cells are 1..m1 x 1..m2. Physical EW edges are i in 0..m1, j in 1..m2,
/// physical NS edges are i in 1..m1, j in 0..m2. Every other index is a ghost.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "qnsch/errors.hpp"

namespace qnsch {

enum class Axis { x, y };

struct GridSpec {
  int m1 = 0;
  int m2 = 0;
  double h = 0.0;
  double Lx = 0.0;
  double Ly = 0.0;

  /// h is derived from Lx/m1; Ly/m2 must agree with it.
  static GridSpec make(int m1, int m2, double Lx, double Ly) {
    if (m1 < 2 || m2 < 2) throw ConfigError("grid needs m1, m2 >= 2");
    if (!(Lx > 0.0) || !(Ly > 0.0)) throw ConfigError("grid extents must be positive");
    GridSpec g{m1, m2, Lx / m1, Lx, Ly};
    double hy = Ly / m2;
    if (std::abs(hy - g.h) > 8.0 * std::numeric_limits<double>::epsilon() * g.h)
      throw ConfigError("grid spacing differs between axes: Lx/m1 != Ly/m2");
    g.Ly = g.h * m2;
    return g;
  }

  bool can_coarsen() const { return m1 % 2 == 0 && m2 % 2 == 0; }
  GridSpec coarsened() const { return GridSpec{m1 / 2, m2 / 2, 2.0 * h, Lx, Ly}; }

  double xc(int i) const { return (i - 0.5) * h; }
  double yc(int j) const { return (j - 0.5) * h; }
  double xe(int i) const { return i * h; }
  double ye(int j) const { return j * h; }

  bool operator==(const GridSpec& o) const { return m1 == o.m1 && m2 == o.m2 && h == o.h; }
};

// ---------------------------------------------------------------------------
// Boundary conditions

enum class CellBc { neumann, periodic };
enum class VelBc { no_slip, normal_zero, periodic };

struct BcSet {
  CellBc cell_x = CellBc::periodic;
  CellBc cell_y = CellBc::neumann;
  VelBc vel_x = VelBc::periodic;
  VelBc vel_y = VelBc::no_slip;

  void validate() const {
    if ((cell_x == CellBc::periodic) != (vel_x == VelBc::periodic))
      throw ConfigError("x axis mixes periodic and wall boundary conditions");
    if ((cell_y == CellBc::periodic) != (vel_y == VelBc::periodic))
      throw ConfigError("y axis mixes periodic and wall boundary conditions");
  }

  bool periodic_x() const { return cell_x == CellBc::periodic; }
  bool periodic_y() const { return cell_y == CellBc::periodic; }

  /// Same set with wall axes switched to the given velocity condition.
  BcSet with_walls(VelBc wall) const {
    BcSet b = *this;
    if (b.vel_x != VelBc::periodic) b.vel_x = wall;
    if (b.vel_y != VelBc::periodic) b.vel_y = wall;
    return b;
  }

  static BcSet channel() { return BcSet{}; }
  static BcSet box() {
    return BcSet{CellBc::neumann, CellBc::neumann, VelBc::no_slip, VelBc::no_slip};
  }
  /// Neumann on every field: walls keep only the normal velocity at zero.
  static BcSet slip_box() {
    return BcSet{CellBc::neumann, CellBc::neumann, VelBc::normal_zero, VelBc::normal_zero};
  }
  static BcSet fully_periodic() {
    return BcSet{CellBc::periodic, CellBc::periodic, VelBc::periodic, VelBc::periodic};
  }
};

// ---------------------------------------------------------------------------
// Field containers

struct Cell {};
struct EwEdge {};
struct NsEdge {};
struct Vertex {};

template <class Loc>
struct LocExtent;

template <>
struct LocExtent<Cell> {
  static constexpr int ilo = 0, jlo = 0, iextra = 1, jextra = 1;
};
template <>
struct LocExtent<EwEdge> {
  static constexpr int ilo = -1, jlo = 0, iextra = 1, jextra = 1;
};
template <>
struct LocExtent<NsEdge> {
  static constexpr int ilo = 0, jlo = -1, iextra = 1, jextra = 1;
};
template <>
struct LocExtent<Vertex> {
  static constexpr int ilo = 0, jlo = 0, iextra = 0, jextra = 0;
};

/// Value-semantic 2D array over one staggered location class.
template <class Loc>
class Field {
 public:
  using location = Loc;
  static constexpr int ilo = LocExtent<Loc>::ilo;
  static constexpr int jlo = LocExtent<Loc>::jlo;

  Field() = default;
  explicit Field(const GridSpec& g, double value = 0.0)
      : grid_(g),
        ihi_(g.m1 + LocExtent<Loc>::iextra),
        jhi_(g.m2 + LocExtent<Loc>::jextra),
        ni_(ihi_ - ilo + 1),
        nj_(jhi_ - jlo + 1),
        data_(static_cast<std::size_t>(ni_) * nj_, value) {}

  const GridSpec& grid() const { return grid_; }
  int ihi() const { return ihi_; }
  int jhi() const { return jhi_; }
  int ni() const { return ni_; }
  int nj() const { return nj_; }

  double& operator()(int i, int j) { return data_[index(i, j)]; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j - jlo) * ni_ + static_cast<std::size_t>(i - ilo);
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  Field& operator+=(const Field& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Field& operator-=(const Field& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Field& operator*=(const Field& o) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] *= o.data_[k];
    return *this;
  }
  Field& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }
  Field& operator+=(double s) {
    for (double& x : data_) x += s;
    return *this;
  }

  bool operator==(const Field& o) const { return grid_ == o.grid_ && data_ == o.data_; }

 private:
  GridSpec grid_{};
  int ihi_ = 0, jhi_ = 0, ni_ = 0, nj_ = 0;
  std::vector<double> data_;
};

using CellField = Field<Cell>;
using EwEdgeField = Field<EwEdge>;
using NsEdgeField = Field<NsEdge>;
using VertexField = Field<Vertex>;

template <class Loc>
Field<Loc> operator+(Field<Loc> a, const Field<Loc>& b) { return a += b; }
template <class Loc>
Field<Loc> operator-(Field<Loc> a, const Field<Loc>& b) { return a -= b; }
template <class Loc>
Field<Loc> operator*(Field<Loc> a, const Field<Loc>& b) { return a *= b; }
template <class Loc>
Field<Loc> operator*(double s, Field<Loc> a) { return a *= s; }
template <class Loc>
Field<Loc> operator*(Field<Loc> a, double s) { return a *= s; }

/// Applies fn elementwise over every stored entry (ghosts included).
template <class Loc, class Fn>
Field<Loc> map(const Field<Loc>& a, Fn fn) {
  Field<Loc> r(a.grid());
  for (std::size_t k = 0; k < a.data().size(); ++k) r.data()[k] = fn(a.data()[k]);
  return r;
}

/// Calls fn(i, j) over the interior cells in row-major order.
template <class Fn>
void for_cells(const GridSpec& g, Fn fn) {
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= g.m1; ++i) fn(i, j);
}

// ---------------------------------------------------------------------------
// Unknown sets. Under walls the boundary-normal edges are fixed at zero; under
// periodicity the edge at index 0 is an image of index m1 (resp. m2).

inline int ew_last(const GridSpec& g, const BcSet& bc) {
  return bc.vel_x == VelBc::periodic ? g.m1 : g.m1 - 1;
}
inline int ns_last(const GridSpec& g, const BcSet& bc) {
  return bc.vel_y == VelBc::periodic ? g.m2 : g.m2 - 1;
}

/// Calls fn(i, j) over the EW edges that carry an unknown.
template <class Fn>
void for_ew_unknowns(const GridSpec& g, const BcSet& bc, Fn fn) {
  int last = ew_last(g, bc);
  for (int j = 1; j <= g.m2; ++j)
    for (int i = 1; i <= last; ++i) fn(i, j);
}

/// Calls fn(i, j) over the NS edges that carry an unknown.
template <class Fn>
void for_ns_unknowns(const GridSpec& g, const BcSet& bc, Fn fn) {
  int last = ns_last(g, bc);
  for (int j = 1; j <= last; ++j)
    for (int i = 1; i <= g.m1; ++i) fn(i, j);
}

// ---------------------------------------------------------------------------
// Ghost filling

inline void fill_ghost(CellField& f, const BcSet& bc) {
  bc.validate();
  const GridSpec& g = f.grid();
  const int m1 = g.m1, m2 = g.m2;
  for (int j = 1; j <= m2; ++j) {
    if (bc.cell_x == CellBc::periodic) {
      f(0, j) = f(m1, j);
      f(m1 + 1, j) = f(1, j);
    } else {
      f(0, j) = f(1, j);
      f(m1 + 1, j) = f(m1, j);
    }
  }
  for (int i = 0; i <= m1 + 1; ++i) {
    if (bc.cell_y == CellBc::periodic) {
      f(i, 0) = f(i, m2);
      f(i, m2 + 1) = f(i, 1);
    } else {
      f(i, 0) = f(i, 1);
      f(i, m2 + 1) = f(i, m2);
    }
  }
}

namespace detail {

// Normal direction of a staggered component: the wall value is zero and the ghost
// beyond it is the odd reflection; periodic wraps with period m.
template <class Get>
void fill_normal(Get&& at, int m, VelBc bc) {
  if (bc == VelBc::periodic) {
    at(0) = at(m);
    at(-1) = at(m - 1);
    at(m + 1) = at(1);
  } else {
    at(0) = 0.0;
    at(m) = 0.0;
    at(-1) = -at(1);
    at(m + 1) = -at(m - 1);
  }
}

// Tangential direction: no-slip makes the two-point average at the wall vanish.
template <class Get>
void fill_tangential(Get&& at, int m, VelBc bc) {
  switch (bc) {
    case VelBc::periodic:
      at(0) = at(m);
      at(m + 1) = at(1);
      break;
    case VelBc::no_slip:
      at(0) = -at(1);
      at(m + 1) = -at(m);
      break;
    case VelBc::normal_zero:
      at(0) = at(1);
      at(m + 1) = at(m);
      break;
  }
}

}  // namespace detail

inline void fill_ghost(EwEdgeField& u, const BcSet& bc) {
  bc.validate();
  const GridSpec& g = u.grid();
  for (int j = 1; j <= g.m2; ++j)
    detail::fill_normal([&](int i) -> double& { return u(i, j); }, g.m1, bc.vel_x);
  for (int i = -1; i <= g.m1 + 1; ++i)
    detail::fill_tangential([&](int j) -> double& { return u(i, j); }, g.m2, bc.vel_y);
}

inline void fill_ghost(NsEdgeField& v, const BcSet& bc) {
  bc.validate();
  const GridSpec& g = v.grid();
  for (int i = 1; i <= g.m1; ++i)
    detail::fill_normal([&](int j) -> double& { return v(i, j); }, g.m2, bc.vel_y);
  for (int j = -1; j <= g.m2 + 1; ++j)
    detail::fill_tangential([&](int i) -> double& { return v(i, j); }, g.m1, bc.vel_x);
}

/// Index of the stored unknown that an EW edge index i aliases (periodic x: 0 -> m1).
inline int ew_canonical_i(int i, const GridSpec& g, const BcSet& bc) {
  if (bc.vel_x == VelBc::periodic && i == 0) return g.m1;
  return i;
}
inline int ns_canonical_j(int j, const GridSpec& g, const BcSet& bc) {
  if (bc.vel_y == VelBc::periodic && j == 0) return g.m2;
  return j;
}

/// True when the EW edge index i is a fixed wall edge.
inline bool ew_is_wall(int i, const GridSpec& g, const BcSet& bc) {
  return bc.vel_x != VelBc::periodic && (i == 0 || i == g.m1);
}
inline bool ns_is_wall(int j, const GridSpec& g, const BcSet& bc) {
  return bc.vel_y != VelBc::periodic && (j == 0 || j == g.m2);
}

}  // namespace qnsch
