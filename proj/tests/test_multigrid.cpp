/// @file test_multigrid.cpp
/// @brief Pointwise kernels, local solves, smoothers, transfers and the FAS cycle.

#include <gtest/gtest.h>

#include "qnsch/diagnostics.hpp"
#include "support.hpp"

using namespace qnsch;
using namespace qnsch::testing;

namespace {

GridSpec unit(int m) { return GridSpec::make(m, m, 1.0, 1.0); }

const std::pair<const char*, BcSet> kBcs[] = {{"no-slip box", BcSet::box()},
                                               {"channel", BcSet::channel()},
                                               {"periodic", BcSet::fully_periodic()},
                                               {"slip box", BcSet::slip_box()}};
const Scheme kSchemes[] = {Scheme::primitive, Scheme::projection};

/// Level holding random old and new states.
Level random_level(const GridSpec& g, const SchemeParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Level L(g, p);
  L.set_old(random_state(g, p, rng, 0.0, 1.0));
  L.w = random_state(g, p, rng, 0.0, 1.0);
  L.rhs = Residual(g);
  L.refresh_density();
  return L;
}

/// Makes the current iterate an exact solution by moving its residual into the FAS rhs.
void make_exact(Level& L) {
  L.rhs = Residual(L.grid);
  L.rhs = level_residual(L);
}

double flow_norm(const Residual& r) {
  ResidualNorms n = residual_norms(r);
  return std::max({n.momx, n.momy, n.projx, n.projy, n.mass});
}

}  // namespace

TEST(Kernels, AgreeWithOperatorResiduals) {
  for (Scheme s : kSchemes)
    for (const auto& [name, bc] : kBcs) {
      GridSpec g = unit(8);
      Level L = random_level(g, capillary_params(s, bc), 11);
      Residual ref = level_residual(L);
      Residual pw = pointwise_residual(L);
      double scale = residual_norms(ref).max();
      EXPECT_LE(max_diff(ref, pw), 1e-13 * scale) << to_string(s) << " " << name;
    }
}

TEST(Kernels, BoxJacobianMatchesFiniteDifferences) {
  for (Scheme s : kSchemes)
    for (const auto& [name, bc] : kBcs) {
      GridSpec g = unit(8);
      Level L = random_level(g, capillary_params(s, bc), 12);
      const bool prim = s == Scheme::primitive;
      double worst = 0.0, scale = 0.0;
      for_cells(g, [&](int i, int j) {
        auto b = detail::box_unknowns(L, i, j, !prim, prim);
        auto A = detail::box_jacobian(L, b);
        auto B = detail::box_jacobian_fd(L, b);
        for (std::size_t e = 0; e < b.n; ++e)
          for (std::size_t q = 0; q < b.n; ++q) {
            worst = std::max(worst, std::abs(A[e][q] - B[e][q]));
            scale = std::max(scale, std::abs(B[e][q]));
          }
      });
      EXPECT_LE(worst, 1e-9 * scale) << to_string(s) << " " << name;
    }
}

TEST(Kernels, WallBoxesDropConstrainedEdges) {
  GridSpec g = unit(8);
  Level L = random_level(g, capillary_params(Scheme::primitive, BcSet::box()), 13);
  EXPECT_EQ(detail::box_unknowns(L, 1, 1, false, true).n, 3u);
  EXPECT_EQ(detail::box_unknowns(L, 4, 1, false, true).n, 4u);
  EXPECT_EQ(detail::box_unknowns(L, 4, 4, false, true).n, 5u);
  SmootherStats st;
  for_cells(g, [&](int i, int j) { smooth_vanka_box(L, i, j, &st); });
  EXPECT_EQ(st.box_regularized, 0u);
}

TEST(Smoothers, ExactStateIsAFixedPoint) {
  for (Scheme s : kSchemes)
    for (const auto& [name, bc] : kBcs) {
      GridSpec g = unit(8);
      Level L = random_level(g, capillary_params(s, bc), 14);
      make_exact(L);
      State before = L.w;
      MgConfig cfg;
      smooth_ch_cell(L, 3, 4, cfg);
      if (s == Scheme::primitive)
        smooth_vanka_box(L, 5, 2, nullptr);
      else
        smooth_projection_cell(L, 5, 2, cfg);
      smooth_sweep(L, cfg);
      EXPECT_LE(max_diff(before, L.w), 1e-13) << to_string(s) << " " << name;
    }
}

TEST(Smoothers, PurePhaseEquilibriumUnchanged) {
  GridSpec g = unit(8);
  SchemeParams p = capillary_params(Scheme::primitive, BcSet::box());
  p.fluid = FluidPair{2.0, 2.0, 1.0, 1.0};
  Level L(g, p);
  State s(g);
  for (int j = 0; j <= g.m2 + 1; ++j)
    for (int i = 0; i <= g.m1 + 1; ++i) {
      s.c(i, j) = 1.0;
      s.p_bar(i, j) = -p.groups.M / p.groups.Fr * 2.0 * g.yc(j);
    }
  fill_state_ghosts(s, p);
  L.set_old(s);
  L.w = s;
  L.refresh_density();
  MgConfig cfg;
  smooth_sweep(L, cfg);
  EXPECT_LE(max_diff(s, L.w), 1e-14);
}

TEST(Smoothers, ChCellSolvesItsLocalEquations) {
  GridSpec g = unit(8);
  SchemeParams p = capillary_params(Scheme::primitive, BcSet::channel());
  State s = wave_state(g, p);
  Level L(g, p);
  L.set_old(s);
  L.w = s;
  L.refresh_density();
  make_exact(L);
  L.w.c(4, 4) += 0.05;
  fill_state_ghosts(L.w, p);
  L.refresh_density();
  MgConfig cfg;
  cfg.newton_iters = 20;
  smooth_ch_cell(L, 4, 4, cfg);
  EXPECT_LE(std::abs(kernel::phase(L, 4, 4)), cfg.newton_tol);
  EXPECT_LE(std::abs(kernel::chem(L, 4, 4)), cfg.newton_tol);
}

TEST(Smoothers, StokesLikeSweepContracts) {
  GridSpec g = unit(8);
  SchemeParams p = capillary_params(Scheme::primitive, BcSet::box());
  p.fluid = FluidPair{1.0, 1.0, 1.0, 1.0};
  p.groups.Re = 1.0;
  std::mt19937_64 rng(15);
  State o(g);
  for (int j = 0; j <= g.m2 + 1; ++j)
    for (int i = 0; i <= g.m1 + 1; ++i) o.c(i, j) = 0.5;
  fill_state_ghosts(o, p);
  Level L(g, p);
  L.set_old(o);
  L.w = o;
  L.w.u = random_field<EwEdge>(g, p.velocity_bc(), rng);
  L.w.v = random_field<NsEdge>(g, p.velocity_bc(), rng);
  L.w.p_bar = random_field<Cell>(g, p.bc, rng);
  L.refresh_density();
  MgConfig cfg;
  double prev = flow_norm(level_residual(L));
  for (int k = 0; k < 3; ++k) {
    smooth_sweep(L, cfg);
    double now = flow_norm(level_residual(L));
    EXPECT_LT(now, prev) << "sweep " << k;
    prev = now;
  }
}

TEST(Smoothers, ProjectionStepFourIsExplicit) {
  GridSpec g = unit(8);
  Level L = random_level(g, capillary_params(Scheme::projection, BcSet::channel()), 16);
  MgConfig cfg;
  double scale = std::max(residual_norms(level_residual(L)).projx, residual_norms(level_residual(L)).projy);
  smooth_projection_cell(L, 4, 5, cfg);
  L.refresh_density();
  Residual r = pointwise_residual(L);
  EXPECT_LE(std::abs(r.projx(3, 5)), 1e-13 * scale);
  EXPECT_LE(std::abs(r.projx(4, 5)), 1e-13 * scale);
  EXPECT_LE(std::abs(r.projy(4, 4)), 1e-13 * scale);
  EXPECT_LE(std::abs(r.projy(4, 5)), 1e-13 * scale);
}

TEST(Smoothers, ProjectionSweepReducesResidual) {
  GridSpec g = unit(8);
  SchemeParams p = capillary_params(Scheme::projection, BcSet::channel());
  State s = wave_state(g, p, 0.05);
  Level L(g, p);
  L.set_old(s);
  L.w = s;
  L.w.u_tilde = L.w.u;
  L.w.v_tilde = L.w.v;
  L.refresh_density();
  MgConfig cfg;
  double r0 = max_norm(level_residual(L));
  for (int k = 0; k < 4; ++k) smooth_sweep(L, cfg);
  EXPECT_LT(max_norm(level_residual(L)), r0);
}

TEST(Smoothers, RedBlackSweepIndependentOfOrderWithinColour) {
  for (Scheme s : kSchemes) {
    GridSpec g = unit(8);
    SchemeParams p = capillary_params(s, BcSet::channel());
    State st = wave_state(g, p, 0.05);
    Level A(g, p);
    A.set_old(st);
    A.w = st;
    A.w.u_tilde = A.w.u;
    A.w.v_tilde = A.w.v;
    A.refresh_density();
    Level B = A;
    MgConfig cfg;
    smooth_sweep(A, cfg);

    // The same sweep with every colour traversed backwards.
    const bool prim = s == Scheme::primitive;
    for (int color = 0; color < 2; ++color) {
      std::vector<std::pair<int, int>> cells;
      for (int j = 1; j <= g.m2; ++j)
        for (int i = 1 + ((j + 1 + color) & 1); i <= g.m1; i += 2) cells.emplace_back(i, j);
      std::reverse(cells.begin(), cells.end());
      for (auto [i, j] : cells) smooth_ch_cell(B, i, j, cfg);
      B.refresh_density();
      std::vector<detail::BoxDelta> boxes;
      for (auto [i, j] : cells) {
        boxes.push_back(detail::box_unknowns(B, i, j, !prim, prim));
        detail::box_solve(B, boxes.back(), nullptr);
      }
      for (const auto& b : boxes) detail::box_apply(B, b);
      if (!prim)
        for (auto [i, j] : cells) detail::pressure_cell(B, i, j);
    }
    EXPECT_EQ(max_diff(A.w, B.w), 0.0) << to_string(s);
  }
}

TEST(Transfers, ConstantsArePreserved) {
  GridSpec gf = unit(16), gc = gf.coarsened();
  BcSet bc = BcSet::fully_periodic();
  CellField c(gc, 2.5);
  fill_ghost(c, bc);
  CellField f = prolong_field(c, gf);
  for_cells(gf, [&](int i, int j) { EXPECT_DOUBLE_EQ(f(i, j), 2.5); });
  CellField cf(gf, -1.5);
  CellField r = restrict_field(cf, gc);
  for_cells(gc, [&](int i, int j) { EXPECT_DOUBLE_EQ(r(i, j), -1.5); });

  EwEdgeField u(gc, 0.75);
  fill_ghost(u, bc);
  EwEdgeField uf = prolong_field(u, gf);
  for_ew_unknowns(gf, bc, [&](int i, int j) { EXPECT_DOUBLE_EQ(uf(i, j), 0.75); });
  NsEdgeField vf(gf, 0.25);
  NsEdgeField vr = restrict_field(vf, gc);
  for_ns_unknowns(gc, bc, [&](int i, int j) { EXPECT_DOUBLE_EQ(vr(i, j), 0.25); });
}

TEST(Transfers, RestrictionPreservesCellIntegral) {
  GridSpec gf = unit(16), gc = gf.coarsened();
  std::mt19937_64 rng(17);
  CellField f = random_field<Cell>(gf, BcSet::box(), rng);
  CellField c = restrict_field(f, gc);
  double a = 0.0, b = 0.0;
  for_cells(gf, [&](int i, int j) { a += f(i, j); });
  for_cells(gc, [&](int i, int j) { b += c(i, j); });
  EXPECT_NEAR(a * gf.h * gf.h, b * gc.h * gc.h, 1e-14 * 256);
}

TEST(Transfers, ProlongRestrictIsSecondOrder) {
  auto err = [](int m) {
    GridSpec gf = unit(m), gc = gf.coarsened();
    BcSet bc = BcSet::fully_periodic();
    CellField f(gf);
    for_cells(gf, [&](int i, int j) { f(i, j) = std::sin(2 * M_PI * gf.xc(i)) * std::cos(2 * M_PI * gf.yc(j)); });
    CellField c = restrict_field(f, gc);
    fill_ghost(c, bc);
    CellField p = prolong_field(c, gf);
    CellField d(gf);
    for_cells(gf, [&](int i, int j) { d(i, j) = p(i, j) - f(i, j); });
    return norm_l2(d);
  };
  double e1 = err(32), e2 = err(64);
  EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1);
}

TEST(Fas, MatchesCorrectionSchemeOnLinearProblem) {
  // Matched densities and c = 1 everywhere: the CH block is exactly satisfied and the
  // flow block is affine, so FAS and the correction scheme must agree.
  for (Scheme s : kSchemes) {
    GridSpec g = unit(16);
    SchemeParams p = capillary_params(s, BcSet::channel());
    p.fluid = FluidPair{1.0, 1.0, 1.0, 1.0};
    std::mt19937_64 rng(18);
    State o(g);
    for (int j = 0; j <= g.m2 + 1; ++j)
      for (int i = 0; i <= g.m1 + 1; ++i) o.c(i, j) = 1.0;
    o.u = random_field<EwEdge>(g, p.velocity_bc(), rng);
    o.v = random_field<NsEdge>(g, p.velocity_bc(), rng);
    fill_state_ghosts(o, p);
    MgConfig cfg;
    cfg.n_levels = 2;
    FasSolver fas(g, p, cfg);
    fas.begin_step(o);
    Level& F = fas.level(0);
    F.w.u = random_field<EwEdge>(g, p.velocity_bc(), rng);
    F.w.v = random_field<NsEdge>(g, p.velocity_bc(), rng);
    F.w.u_tilde = random_field<EwEdge>(g, p.predictor_bc(), rng);
    F.w.v_tilde = random_field<NsEdge>(g, p.predictor_bc(), rng);
    F.w.p_bar = random_field<Cell>(g, p.bc, rng);
    F.refresh_density();
    for (int k = 0; k < cfg.pre_smooths; ++k) smooth_sweep(F, cfg);
    Level F2 = F;
    Level C2 = fas.level(1);
    Level& C = fas.level(1);

    Residual r = level_residual(F);
    Residual rr = restrict_residual(r, C.grid, p);
    auto coarse_solve = [&](Level& Lc, const State& start) {
      Lc.w = start;
      Lc.rhs = Residual(Lc.grid);
      Residual nc = residual(Lc.old_s, Lc.w, p);
      Lc.rhs.momx = nc.momx - rr.momx;
      Lc.rhs.momy = nc.momy - rr.momy;
      Lc.rhs.projx = nc.projx - rr.projx;
      Lc.rhs.projy = nc.projy - rr.projy;
      Lc.rhs.mass = nc.mass - rr.mass;
      Lc.rhs.phase = nc.phase - rr.phase;
      Lc.rhs.chem = nc.chem - rr.chem;
      Lc.refresh_density();
      for (int k = 0; k < cfg.coarse_sweeps; ++k) smooth_sweep(Lc, cfg);
    };

    State base = restrict_state(F.w, C.grid);
    fill_state_ghosts(base, p);
    coarse_solve(C, base);
    prolong_correction(F, C.w, base, p);

    State zero = base;
    zero.u = EwEdgeField(C.grid);
    zero.v = NsEdgeField(C.grid);
    zero.u_tilde = EwEdgeField(C.grid);
    zero.v_tilde = NsEdgeField(C.grid);
    zero.p_bar = CellField(C.grid);
    fill_state_ghosts(zero, p);
    coarse_solve(C2, zero);
    prolong_correction(F2, C2.w, zero, p);

    double scale = std::max({max_abs(F.w.u), max_abs(F.w.v), max_abs(F.w.p_bar)});
    EXPECT_LE(max_diff(F.w, F2.w), 1e-12 * scale) << to_string(s);
  }
}

TEST(Fas, ExactSolutionIsAFixedPointOfTheCycle) {
  for (Scheme s : kSchemes) {
    GridSpec g = unit(16);
    SchemeParams p = capillary_params(s, BcSet::channel());
    std::mt19937_64 rng(19);
    State o = wave_state(g, p, 0.05);
    MgConfig cfg;
    FasSolver fas(g, p, cfg);
    fas.begin_step(o);
    Level& F = fas.level(0);
    F.w = random_state(g, p, rng, 0.2, 0.8);
    F.w.p_bar += -interior_mean(F.w.p_bar);
    fill_state_ghosts(F.w, p);
    F.refresh_density();
    make_exact(F);
    State before = F.w;
    double r = fas.vcycle();
    EXPECT_LE(r, cfg.tol);
    EXPECT_LE(max_diff(before, F.w), 1e-12) << to_string(s);
  }
}

TEST(Fas, QuiescentStateNeedsNoWork) {
  GridSpec g = unit(16);
  for (Scheme s : kSchemes) {
    for (const BcSet& bc : {BcSet::channel(), BcSet::slip_box()}) {
      SchemeParams p = capillary_params(s, bc);
      p.fluid = FluidPair{2.0, 2.0, 1.0, 1.0};
      State o(g);
      for (int j = 0; j <= g.m2 + 1; ++j)
        for (int i = 0; i <= g.m1 + 1; ++i) {
          o.c(i, j) = 1.0;
          o.p_bar(i, j) = -p.groups.M / p.groups.Fr * 2.0 * g.yc(j);
        }
      o.p_bar += -interior_mean(o.p_bar);
      fill_state_ghosts(o, p);
      SolveStats st;
      State n = solve_timestep(o, p, MgConfig{}, &st);
      // The projection step has to build the predictor profile, so it only returns
      // the old state to within the solver tolerance.
      const double tol = s == Scheme::primitive ? 1e-14 : 1e-8;
      EXPECT_LE(max_diff(n.c, o.c), tol);
      EXPECT_LE(max_diff(n.mu_bar, o.mu_bar), tol);
      EXPECT_LE(max_diff(n.u, o.u), tol);
      EXPECT_LE(max_diff(n.v, o.v), tol);
      if (s == Scheme::primitive) {
        EXPECT_EQ(st.cycles, 0);
        EXPECT_LE(max_diff(n.p_bar, o.p_bar), 1e-12);
      }
    }
  }
}

TEST(Fas, OneCapillaryStepConservesMassAndDissipatesEnergy) {
  for (Scheme s : kSchemes) {
    GridSpec g = unit(32);
    SchemeParams p = capillary_params(s);
    State o = wave_state(g, p);
    SolveStats st;
    State n = solve_timestep(o, p, MgConfig{}, &st);
    Masses m0 = total_masses(o, p.fluid), m1 = total_masses(n, p.fluid);
    EXPECT_LE(std::abs(m1.rho - m0.rho), 1e-10 * m0.rho) << to_string(s);
    EXPECT_LE(std::abs(m1.rhoc - m0.rhoc), 1e-10 * m0.rhoc) << to_string(s);
    EXPECT_LE(discrete_energy(n, p), discrete_energy(o, p)) << to_string(s);
    EXPECT_LE(st.final_norms.max(), 1e-7);
    EXPECT_EQ(st.smoother.ch_fallbacks, 0u);
    EXPECT_EQ(st.smoother.box_regularized, 0u);

    // Continuity of the converged step, to within the residuals it leaves.
    CellField ro = density_field(o.c, p.fluid), rn = density_field(n.c, p.fluid);
    const CellField& rs = s == Scheme::primitive ? ro : rn;
    CellField cont = (1.0 / p.dt) * (rn - ro) + diff_x(avg_x(rs) * n.u) + diff_y(avg_y(rs) * n.v);
    double worst = 0.0;
    for_cells(g, [&](int i, int j) { worst = std::max(worst, std::abs(cont(i, j))); });
    double bound = 10.0 * 1e-7 * (1.0 + std::abs(p.alpha())) * std::max(p.fluid.rho1, p.fluid.rho2);
    EXPECT_LE(worst, bound) << to_string(s);
  }
}

TEST(Fas, ReductionFactorAndMildMeshDependence) {
  for (Scheme s : kSchemes) {
    std::vector<int> cycles;
    for (int m : {32, 64, 128}) {
      GridSpec g = unit(m);
      SchemeParams p = capillary_params(s);
      SolveStats st;
      solve_timestep(wave_state(g, p), p, MgConfig{}, &st);
      cycles.push_back(st.cycles);
      for (std::size_t k = 3; k < st.history.size(); ++k)
        EXPECT_LE(st.history[k] / st.history[k - 1], 0.5) << to_string(s) << " m=" << m << " cycle " << k;
    }
    EXPECT_LE(cycles[2], 1.5 * cycles[0] + 0.5) << to_string(s);
  }
}

TEST(Fas, FailuresAreReported) {
  GridSpec g = unit(16);
  SchemeParams p = capillary_params(Scheme::primitive);
  State o = wave_state(g, p, 0.05);
  MgConfig tight;
  tight.tol = 1e-300;
  tight.max_cycles = 1;
  EXPECT_THROW(solve_timestep(o, p, tight), ConvergenceError);

  State bad = o;
  bad.u(3, 3) = std::numeric_limits<double>::quiet_NaN();
  fill_state_ghosts(bad, p);
  try {
    solve_timestep(bad, p, MgConfig{});
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.cycle, 0);
  }

  MgConfig deep;
  deep.n_levels = 5;
  EXPECT_THROW(FasSolver(g, p, deep), ConfigError);
  EXPECT_THROW(FasSolver(GridSpec::make(9, 9, 1.0, 1.0), p, MgConfig{}), ConfigError);
  MgConfig zero_sweeps;
  zero_sweeps.pre_smooths = 0;
  EXPECT_THROW(zero_sweeps.validate(), ConfigError);
}
