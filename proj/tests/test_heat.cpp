#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "hystherm/heat.hpp"
#include "hystherm/io.hpp"

using namespace hystherm;

namespace {

constexpr Scalar kPi = 3.14159265358979323846;

Vector sin_pix(const SpatialMesh& m) {
  Vector v(m.n_x);
  for (Index i = 0; i < m.n_x; ++i) v[i] = std::sin(kPi * m.pos(i));
  v[0] = v[m.n_x - 1] = 0.0;
  return v;
}

}  // namespace

TEST_CASE("tridiag_solve: identity limit, hand example, dense oracle") {
  SpatialMesh m(1.0, 5);
  BoundarySpec dd(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
  HeatOperator id(m, dd, 0.0);  // dt = 0 gives A = I
  Vector rhs = (Vector(5) << 1, -2, 3, 0.5, 0).finished();
  CHECK((tridiag_solve(id, rhs) - rhs).isZero(0.0));

  Vector lo = (Vector(3) << 0, -1, -1).finished();
  Vector di = (Vector(3) << 2, 2, 2).finished();
  Vector up = (Vector(3) << -1, -1, 0).finished();
  Vector x = thomas_solve(lo, di, up, (Vector(3) << 1, 0, 0).finished());
  CHECK(x[0] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(0.50).epsilon(1e-14));
  CHECK(x[2] == doctest::Approx(0.25).epsilon(1e-14));

  // random diagonally dominant systems against Eigen's dense elimination
  PortableRng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const Index n = 2 + static_cast<Index>(rng.uniform01() * 20);
    Vector l(n), d(n), u(n), b(n);
    for (Index i = 0; i < n; ++i) {
      l[i] = rng.uniform(-1.0, 0.0);
      u[i] = rng.uniform(-1.0, 0.0);
      d[i] = 2.5 + rng.uniform01();
      b[i] = rng.uniform(-1.0, 1.0);
    }
    l[0] = u[n - 1] = 0.0;
    Matrix dense = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      dense(i, i) = d[i];
      if (i > 0) dense(i, i - 1) = l[i];
      if (i + 1 < n) dense(i, i + 1) = u[i];
    }
    Vector x_dense = dense.fullPivLu().solve(b);
    Vector x_thomas = thomas_solve(l, d, u, b);
    CHECK((x_thomas - x_dense).lpNorm<Eigen::Infinity>() <= 1e-10);
  }
}

TEST_CASE("HeatOperator residual bound and M-matrix structure") {
  PortableRng rng(5);
  for (const auto bc : {BoundarySpec(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet),
                        BoundarySpec(BoundaryKind::Dirichlet, BoundaryKind::Neumann),
                        BoundarySpec(BoundaryKind::Neumann, BoundaryKind::Dirichlet)}) {
    SpatialMesh m(1.0, 33);
    HeatOperator op(m, bc, 0.01);
    for (Index i = 0; i < m.n_x; ++i) {
      CHECK(op.diag()[i] > 0);
      CHECK(op.lower()[i] <= 0);
      CHECK(op.upper()[i] <= 0);
      CHECK(op.diag()[i] + op.lower()[i] + op.upper()[i] >= 1.0 - 1e-14);
    }
    for (int rep = 0; rep < 20; ++rep) {
      Vector rhs(m.n_x);
      for (Index i = 0; i < m.n_x; ++i) rhs[i] = rng.uniform(-5.0, 5.0);
      Vector x = op.solve(rhs);
      const Scalar res = (op.apply(x) - rhs).lpNorm<Eigen::Infinity>();
      CHECK(res <= 1e-12 * (1 + rhs.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST_CASE("solve_state: zero data gives the zero solution") {
  SpatialMesh m(1.0, 17);
  TimeGrid g(1.0, 33);
  BoundarySpec dd(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
  StateSolution sol = solve_state(SpaceTimeField::zero(m, g), Vector::Zero(m.n_x),
                                  PlayConfig(0.4, 0.0), dd, SolverParams{});
  CHECK(sol.y.values.isZero(0.0));
  CHECK(sol.w.values.isZero(0.0));
}

TEST_CASE("solve_state: hysteresis-off analytic heat decay") {
  BoundarySpec dd(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
  const PlayConfig cfg(0.4, 0.0);
  const Scalar T = 0.1;

  auto sup_error = [&](Index n_x, Index n_t) {
    SpatialMesh m(1.0, n_x);
    TimeGrid g(T, n_t);
    StateSolution sol = solve_state(SpaceTimeField::zero(m, g), sin_pix(m), cfg, dd,
                                    SolverParams{}, ForcingMode::none);
    Scalar err = 0;
    for (Index k = 0; k < g.n_t; ++k)
      for (Index i = 0; i < m.n_x; ++i)
        err = std::max(err, std::abs(sol.y.values(i, k) -
                                     std::exp(-kPi * kPi * g.time(k)) *
                                         std::sin(kPi * m.pos(i))));
    return err;
  };

  const Scalar e1 = sup_error(129, 9);
  const Scalar e2 = sup_error(129, 17);
  const Scalar e3 = sup_error(129, 33);
  CHECK(e1 < 0.05);
  CHECK(e2 < e1);
  CHECK(e3 < e2);
}

TEST_CASE("solve_state: full problem agrees with a fine-grid self-oracle") {
  BoundarySpec dd(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
  const PlayConfig cfg(0.4, 0.0);

  auto run = [&](Index n_x, Index n_t) {
    SpatialMesh m(1.0, n_x);
    TimeGrid g(1.0, n_t);
    SpaceTimeField u = SpaceTimeField::sample(
        m, g, [](Scalar x, Scalar) { return 2.0 * std::sin(kPi * x); });
    Vector y0 = 2.0 * sin_pix(m);
    return solve_state(u, y0, cfg, dd, SolverParams{});
  };

  StateSolution fine = run(257, 1025);
  auto sup_diff_vs_fine = [&](const StateSolution& sol) {
    const Index fx = (257 - 1) / (sol.y.mesh.n_x - 1);
    const Index ft = (1025 - 1) / (sol.y.grid.n_t - 1);
    Scalar err = 0;
    for (Index k = 0; k < sol.y.grid.n_t; ++k)
      for (Index i = 0; i < sol.y.mesh.n_x; ++i)
        err = std::max(err,
                       std::abs(sol.y.values(i, k) - fine.y.values(i * fx, k * ft)));
    return err;
  };

  const Scalar e_coarse = sup_diff_vs_fine(run(33, 65));
  const Scalar e_mid = sup_diff_vs_fine(run(65, 129));
  CHECK(e_coarse < 0.05);                       // first-order-in-dt margin
  const Scalar rate = std::log2(e_coarse / e_mid);
  CHECK(rate > 0.7);  // roughly halves per dt refinement
}

TEST_CASE("solve_state: returned w is exactly apply_w(y)") {
  SpatialMesh m(1.0, 17);
  TimeGrid g(1.0, 33);
  BoundarySpec dn(BoundaryKind::Dirichlet, BoundaryKind::Neumann);
  const PlayConfig cfg(0.3, 0.1);
  SpaceTimeField u = SpaceTimeField::sample(
      m, g, [](Scalar x, Scalar t) { return 3.0 * std::sin(kPi * x) + t; });
  Vector y0 = Vector::Zero(m.n_x);
  StateSolution sol = solve_state(u, y0, cfg, dn, SolverParams{});
  CHECK((sol.w.values - apply_w(sol.y, cfg).values).isZero(0.0));
}

TEST_CASE("solve_state: preconditions and failure paths") {
  SpatialMesh m(1.0, 9);
  TimeGrid g(1.0, 17);
  BoundarySpec dd(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
  const PlayConfig cfg(0.4, 0.0);

  Vector bad_y0 = Vector::Constant(m.n_x, 1.0);  // nonzero at Dirichlet nodes
  CHECK_THROWS_AS(
      solve_state(SpaceTimeField::zero(m, g), bad_y0, cfg, dd, SolverParams{}),
      std::invalid_argument);

  // dt guard: n_t = 2 on T = 1 gives L*dt = 1 > 1/2
  TimeGrid coarse(1.0, 2);
  CHECK_THROWS_AS(solve_state(SpaceTimeField::zero(m, coarse), Vector::Zero(m.n_x), cfg,
                              dd, SolverParams{}),
                  std::invalid_argument);
  SolverParams no_guard;
  no_guard.dt_guard = false;
  CHECK_NOTHROW(solve_state(SpaceTimeField::zero(m, coarse), Vector::Zero(m.n_x), cfg, dd,
                            no_guard));

  // fixed-point failure carries the step index and last residual
  SolverParams strict;
  strict.fp_max_iter = 1;
  SpaceTimeField u = SpaceTimeField::sample(
      m, g, [](Scalar x, Scalar) { return 10.0 * std::sin(kPi * x); });
  try {
    solve_state(u, Vector::Zero(m.n_x), cfg, dd, strict);
    FAIL("expected StepError");
  } catch (const StepError& e) {
    CHECK(e.step == 1);
    CHECK(e.residual > strict.fp_tol);
  }
}

TEST_CASE("solve_state accepts degenerate grids") {
  SpatialMesh m(1.0, 3);
  TimeGrid g(0.25, 2);
  BoundarySpec dd(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
  SpaceTimeField u = SpaceTimeField::sample(m, g, [](Scalar, Scalar) { return 1.0; });
  StateSolution sol = solve_state(u, Vector::Zero(3), PlayConfig(0.4, 0.0), dd,
                                  SolverParams{});
  CHECK(sol.y.values.allFinite());
  CHECK(sol.y.values(1, 1) > 0);
}

TEST_CASE("solve_first_order: zero direction, frozen base, Newton linearity") {
  SpatialMesh m(1.0, 17);
  TimeGrid g(1.0, 33);
  BoundarySpec dd(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
  const PlayConfig cfg(0.4, 0.0);
  SpaceTimeField u = SpaceTimeField::sample(
      m, g, [](Scalar x, Scalar) { return 2.0 * std::sin(kPi * x); });
  Vector y0 = 2.0 * sin_pix(m);
  StateSolution base = solve_state(u, y0, cfg, dd, SolverParams{});

  FirstOrderSolution zero =
      solve_first_order(DerivativeMode::bouligand, base.y, SpaceTimeField::zero(m, g),
                        cfg, dd, SolverParams{});
  CHECK(zero.d.values.isZero(0.0));
  CHECK(zero.omega.values.isZero(0.0));

  // frozen base: omega = 0 and d equals the plain heat solve with source h
  const PlayConfig wide(1000.0, 0.0);
  StateSolution frozen = solve_state(u, y0, wide, dd, SolverParams{});
  SpaceTimeField h = SpaceTimeField::sample(
      m, g, [](Scalar x, Scalar t) { return std::sin(2 * kPi * x) * t; });
  FirstOrderSolution fo =
      solve_first_order(DerivativeMode::bouligand, frozen.y, h, wide, dd, SolverParams{});
  CHECK(fo.omega.values.isZero(0.0));
  FieldSource plain(h.values);
  SpaceTimeField d_heat =
      solve_inhomogeneous(plain, Vector::Zero(m.n_x), m, g, dd, SolverParams{});
  CHECK((fo.d.values - d_heat.values).isZero(0.0));

  // Newton mode is linear in h to solver tolerance
  SolverParams prm;
  SpaceTimeField h2 = SpaceTimeField::sample(
      m, g, [](Scalar x, Scalar t) { return std::cos(3 * kPi * x) * (1 - t); });
  const Scalar a = 2.75;
  FirstOrderSolution d1 = solve_first_order(DerivativeMode::newton, base.y, h, cfg, dd, prm);
  FirstOrderSolution d2 =
      solve_first_order(DerivativeMode::newton, base.y, h2, cfg, dd, prm);
  SpaceTimeField combo(m, g, a * h.values + h2.values);
  FirstOrderSolution dc = solve_first_order(DerivativeMode::newton, base.y, combo, cfg, dd, prm);
  const Scalar mismatch =
      (dc.d.values - a * d1.d.values - d2.d.values).lpNorm<Eigen::Infinity>();
  CHECK(mismatch <= 10 * prm.fp_tol);
}

TEST_CASE("solve_first_order matches the state difference quotient") {
  SpatialMesh m(1.0, 65);
  TimeGrid g(1.0, 129);
  BoundarySpec dd(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
  const PlayConfig cfg(0.4, 0.0);
  SpaceTimeField u = SpaceTimeField::sample(
      m, g, [](Scalar x, Scalar) { return 2.0 * std::sin(kPi * x); });
  Vector y0 = 2.0 * sin_pix(m);
  SpaceTimeField h = SpaceTimeField::sample(
      m, g, [](Scalar x, Scalar t) { return std::sin(2 * kPi * x) * t; });

  StateSolution base = solve_state(u, y0, cfg, dd, SolverParams{});
  FirstOrderSolution fo =
      solve_first_order(DerivativeMode::bouligand, base.y, h, cfg, dd, SolverParams{});

  const Scalar lambda = 1e-4;
  SpaceTimeField up(m, g, u.values + lambda * h.values);
  StateSolution pert = solve_state(up, y0, cfg, dd, SolverParams{});
  Matrix dq = (pert.y.values - base.y.values) / lambda;
  const Scalar sup_dq = dq.cwiseAbs().maxCoeff();
  const Scalar sup_diff = (fo.d.values - dq).cwiseAbs().maxCoeff();
  CHECK(sup_diff <= 0.05 * sup_dq);
}

TEST_CASE("solve_inhomogeneous: zero source, semigroup decay, manufactured solution") {
  SpatialMesh m(1.0, 33);
  TimeGrid g(1.0, 65);
  BoundarySpec dd(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
  SolverParams prm;

  FieldSource zero(Matrix::Zero(m.n_x, g.n_t));
  CHECK(solve_inhomogeneous(zero, Vector::Zero(m.n_x), m, g, dd, prm)
            .values.isZero(0.0));

  // g = 0 propagates the sup bound of the initial data
  PortableRng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    Vector z0(m.n_x);
    for (Index i = 0; i < m.n_x; ++i) z0[i] = rng.uniform(-1.0, 1.0);
    FieldSource zsrc(Matrix::Zero(m.n_x, g.n_t));
    SpaceTimeField z = solve_inhomogeneous(zsrc, z0, m, g, dd, prm);
    Scalar prev = z0.cwiseAbs().maxCoeff();
    for (Index k = 1; k < g.n_t; ++k) {
      const Scalar cur = z.values.col(k).cwiseAbs().maxCoeff();
      CHECK(cur <= prev);
      prev = cur;
    }
  }

  // manufactured z* = t sin(pi x): f = (1 + pi^2 t) sin(pi x), z0 = 0
  auto manufactured_error = [&](Index n_x, Index n_t) {
    SpatialMesh mm(1.0, n_x);
    TimeGrid gg(1.0, n_t);
    Matrix f(n_x, n_t);
    for (Index k = 0; k < n_t; ++k)
      for (Index i = 0; i < n_x; ++i)
        f(i, k) = (1 + kPi * kPi * gg.time(k)) * std::sin(kPi * mm.pos(i));
    FieldSource src(std::move(f));
    SpaceTimeField z = solve_inhomogeneous(src, Vector::Zero(n_x), mm, gg, dd, prm);
    Scalar err = 0;
    for (Index k = 0; k < n_t; ++k)
      for (Index i = 0; i < n_x; ++i)
        err = std::max(err, std::abs(z.values(i, k) -
                                     gg.time(k) * std::sin(kPi * mm.pos(i))));
    return err;
  };
  const Scalar e1 = manufactured_error(17, 33);
  const Scalar e2 = manufactured_error(33, 129);
  CHECK(e1 < 0.05);
  CHECK(e2 < 0.5 * e1);
}

TEST_CASE("per-step fixed point contracts at rate L*dt") {
  SpatialMesh m(1.0, 33);
  TimeGrid g(1.0, 65);
  BoundarySpec dd(BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
  const PlayConfig cfg(0.2, 0.0);
  SpaceTimeField u = SpaceTimeField::sample(
      m, g, [](Scalar x, Scalar) { return 5.0 * std::sin(kPi * x); });

  SolveStats stats;
  stats.record_residuals = true;
  solve_state(u, Vector::Zero(m.n_x), cfg, dd, SolverParams{}, ForcingMode::play, &stats);

  const Scalar factor = cfg.lipschitz * g.dt();
  for (const auto& trace : stats.fp_residuals)
    for (std::size_t i = 0; i + 1 < trace.size(); ++i)
      CHECK(trace[i + 1] <= factor * trace[i] + 1e-13);
}
