#include "hystherm/verify.hpp"

#include <cmath>

#include "hystherm/parallel.hpp"

namespace hystherm {

namespace {

Vector default_y0(const SpatialMesh& mesh, const std::optional<Vector>& y0) {
  if (!y0) return Vector::Zero(mesh.n_x);
  if (y0->size() != mesh.n_x)
    throw std::invalid_argument("initial state length does not match mesh");
  return *y0;
}

EstimateReport make_report(std::string label, Scalar lhs, Scalar rhs, const TimeGrid& grid,
                           const SpatialMesh& mesh) {
  EstimateReport rep;
  rep.label = std::move(label);
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.T = grid.T;
  rep.n_x = mesh.n_x;
  rep.n_t = grid.n_t;
  if (rhs > 0) {
    rep.empirical_constant = lhs / rhs;
  } else {
    rep.empirical_constant = 0;
    rep.consistent = lhs <= 1e-12;
  }
  return rep;
}

SpaceTimeField solve_estimate_problem(const EstimateProblem& p) {
  if (p.f.mesh.n_x != p.mesh.n_x || p.f.grid.n_t != p.grid.n_t)
    throw std::invalid_argument("EstimateProblem: f shape does not match mesh/grid");
  if (p.play_driven) {
    PlaySource rule(p.play, p.mesh.n_x, &p.f.values);
    return solve_inhomogeneous(rule, p.z0, p.mesh, p.grid, p.bc, p.prm);
  }
  FieldSource rule(p.f.values);
  return solve_inhomogeneous(rule, p.z0, p.mesh, p.grid, p.bc, p.prm);
}

}  // namespace

RemainderReport run_remainder_study(const SpaceTimeField& u, const SpaceTimeField& h,
                                    const std::vector<Scalar>& ladder,
                                    DerivativeMode mode, const PlayConfig& cfg,
                                    const BoundarySpec& bc, const SolverParams& prm,
                                    Scalar epsilon, const std::optional<Vector>& y0) {
  require_same_shape(u, h, "run_remainder_study");
  if (h.values.isZero(0.0))
    throw std::invalid_argument("run_remainder_study: direction h must be nonzero");
  if (ladder.empty()) throw std::invalid_argument("run_remainder_study: empty ladder");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0))
      throw std::invalid_argument("run_remainder_study: ladder values must be > 0");
    if (i > 0 && !(ladder[i] < ladder[i - 1]))
      throw std::invalid_argument("run_remainder_study: ladder must be strictly decreasing");
  }

  const Scalar dx = u.mesh.dx();
  const Scalar dt = u.grid.dt();
  const Vector start = default_y0(u.mesh, y0);
  const StateSolution base = solve_state(u, start, cfg, bc, prm);

  RemainderReport rep;
  rep.mode = mode;
  rep.epsilon = epsilon;
  rep.lambdas = ladder;
  const std::size_t n = ladder.size();
  rep.ratios.resize(n);
  rep.remainder_norms.resize(n);
  rep.direction_norms.resize(n);
  rep.y_norms.resize(n);
  rep.d_norms.resize(n);

  parallel_for(n, [&](std::size_t j) {
    const Scalar lambda = ladder[j];
    SpaceTimeField lh(u.mesh, u.grid, lambda * h.values);
    SpaceTimeField u_pert(u.mesh, u.grid, u.values + lh.values);
    StateSolution pert = [&] {
      try {
        return solve_state(u_pert, start, cfg, bc, prm);
      } catch (const StepError& e) {
        throw std::runtime_error("remainder study: state solve failed at lambda = " +
                                 std::to_string(lambda) + ": " + e.what());
      }
    }();
    const SpaceTimeField& fo_base = (mode == DerivativeMode::newton) ? pert.y : base.y;
    const FirstOrderSolution fo = [&] {
      try {
        return solve_first_order(mode, fo_base, lh, cfg, bc, prm);
      } catch (const StepError& e) {
        throw std::runtime_error("remainder study: first-order solve failed at lambda = " +
                                 std::to_string(lambda) + ": " + e.what());
      }
    }();

    const Matrix remainder = pert.y.values - base.y.values - fo.d.values;
    const Scalar rem_ys = norm_ys(remainder, dx, dt);
    const Scalar dir_xs = xs_norm(lh.values, dt, epsilon);
    if (!(dir_xs > 0))
      throw std::invalid_argument(
          "run_remainder_study: direction vanishes in the control norm");
    const Scalar d_ys = norm_ys(fo.d.values, dx, dt);
    const Scalar diff_ys = norm_ys(pert.y.values - base.y.values, dx, dt);
    // triangle-inequality sanity: ||y_l - y|| <= ||d|| + ||r||
    if (diff_ys > d_ys + rem_ys + 1e-9 * (1 + d_ys + rem_ys))
      throw std::logic_error("run_remainder_study: norm sandwich violated");

    rep.remainder_norms[j] = rem_ys;
    rep.direction_norms[j] = dir_xs;
    rep.ratios[j] = rem_ys / dir_xs;
    rep.y_norms[j] = norm_ys(pert.y.values, dx, dt);
    rep.d_norms[j] = d_ys;
  });
  return rep;
}

bool ratios_decay_to_floor(const std::vector<Scalar>& ratios, Scalar floor) {
  if (ratios.empty() || !(ratios.front() > floor)) return false;
  for (std::size_t i = 0; i + 1 < ratios.size(); ++i)
    if (!(ratios[i + 1] < ratios[i] || ratios[i + 1] <= floor)) return false;
  return true;
}

EstimateReport check_energy_estimate(const EstimateProblem& p) {
  const SpaceTimeField z = solve_estimate_problem(p);
  const Scalar dx = p.mesh.dx();
  const Scalar dt = p.grid.dt();

  const Scalar sup_sq = std::pow(lq_x_ct(z.values, dx, 2.0), 2);
  const Scalar grad_sq = std::pow(linft_v(z.values, dx), 2);
  const Scalar zt_sq = std::pow(h1t_l2x(z.values, dx, dt), 2);
  const Scalar lhs = sup_sq + grad_sq + zt_sq;

  const Scalar f_sq = std::pow(l2_qt(p.f.values, dx, dt), 2);
  const Scalar z0_sq = space_integral(p.z0.cwiseAbs2(), dx);
  const Vector gz0 = discrete_gradient(p.z0, dx);
  const Scalar gz0_sq = 0.5 * space_integral(gz0.cwiseAbs2(), dx);
  const Scalar rhs = f_sq + z0_sq + gz0_sq;

  return make_report("energy", lhs, rhs, p.grid, p.mesh);
}

EstimateReport check_linf_estimate(const EstimateProblem& p) {
  const SpaceTimeField z = solve_estimate_problem(p);
  const Scalar lhs = z.values.cwiseAbs().maxCoeff();
  const Scalar rhs = l1t_linfx(p.f.values, p.grid.dt()) + p.z0.cwiseAbs().maxCoeff();
  return make_report("linf", lhs, rhs, p.grid, p.mesh);
}

FirstOrderEstimates check_first_order_estimates(const SpaceTimeField& d,
                                                const SpaceTimeField& h, Scalar epsilon) {
  require_same_shape(d, h, "check_first_order_estimates");
  const Scalar dx = d.mesh.dx();
  const Scalar dt = d.grid.dt();

  FirstOrderEstimates out;
  const Scalar lhs_energy =
      std::pow(h1t_l2x(d.values, dx, dt), 2) + std::pow(linft_v(d.values, dx), 2);
  out.energy = make_report("first_order_energy", lhs_energy,
                           std::pow(l2_qt(h.values, dx, dt), 2), d.grid, d.mesh);

  out.linf = make_report("first_order_linf", d.values.cwiseAbs().maxCoeff(),
                         l1t_linfx(h.values, dt), d.grid, d.mesh);

  const Matrix dtd = time_diff(d.values, dt);
  const Scalar lhs_dt = std::pow(lq_qt_intervals(dtd, dx, dt, 2.0 + epsilon), 2);
  const Scalar rhs_dt = std::pow(xs_norm(h.values, dt, epsilon), 2);
  out.dt_bound = make_report("first_order_dt_l2eps", lhs_dt, rhs_dt, d.grid, d.mesh);
  return out;
}

MaxPrincipleReport check_max_principle(const Vector& z0, const SpatialMesh& mesh,
                                       const TimeGrid& grid, const BoundarySpec& bc,
                                       const SolverParams& prm) {
  FieldSource zero(Matrix::Zero(mesh.n_x, grid.n_t));
  const SpaceTimeField z = solve_inhomogeneous(zero, z0, mesh, grid, bc, prm);

  MaxPrincipleReport rep;
  rep.sup_initial = z0.cwiseAbs().maxCoeff();
  rep.sup_overall = z.values.cwiseAbs().maxCoeff();

  Scalar prev = rep.sup_initial;
  for (Index k = 1; k < grid.n_t; ++k) {
    const Scalar cur = z.values.col(k).cwiseAbs().maxCoeff();
    if (cur > prev) {
      rep.sup_ok = false;
      rep.offending_t = k;
      Index i;
      z.values.col(k).cwiseAbs().maxCoeff(&i);
      rep.offending_x = i;
      break;
    }
    prev = cur;
  }

  if ((z0.array() >= 0).all()) {
    for (Index k = 1; k < grid.n_t && rep.nonneg_ok; ++k)
      for (Index i = 0; i < mesh.n_x; ++i)
        if (z.values(i, k) < 0) {
          rep.nonneg_ok = false;
          rep.offending_x = i;
          rep.offending_t = k;
          break;
        }
  }
  return rep;
}

SpaceTimeField invert_first_order_newton(const SpaceTimeField& base,
                                         const SpaceTimeField& rho, const PlayConfig& cfg,
                                         const BoundarySpec& bc) {
  require_same_shape(base, rho, "invert_first_order_newton");
  const SpaceTimeField omega = apply_w_newton(base, rho, cfg);
  const HeatOperator op(base.mesh, bc, base.grid.dt());
  const Scalar dt = base.grid.dt();

  Matrix h = Matrix::Zero(base.mesh.n_x, base.grid.n_t);
  for (Index k = 1; k < base.grid.n_t; ++k)
    h.col(k) = (op.apply(rho.values.col(k)) - rho.values.col(k - 1)) / dt -
               omega.values.col(k);
  return {base.mesh, base.grid, std::move(h)};
}

NewtonRunReport semismooth_newton_solve(const SpaceTimeField& y_target,
                                        const SpaceTimeField& u0, const PlayConfig& cfg,
                                        const BoundarySpec& bc, const SolverParams& prm,
                                        Scalar tol, int max_iter, Scalar epsilon,
                                        const SpaceTimeField* u_star,
                                        const std::optional<Vector>& y0) {
  require_same_shape(y_target, u0, "semismooth_newton_solve");
  if (u_star) require_same_shape(y_target, *u_star, "semismooth_newton_solve");
  const Scalar dx = y_target.mesh.dx();
  const Scalar dt = y_target.grid.dt();
  const Vector start = default_y0(y_target.mesh, y0);

  NewtonRunReport rep;
  SpaceTimeField u = u0;
  for (int k = 0; k <= max_iter; ++k) {
    const StateSolution sol = solve_state(u, start, cfg, bc, prm);
    const Matrix rho = y_target.values - sol.y.values;
    const Scalar res = norm_ys(rho, dx, dt);
    rep.residual_norms.push_back(res);
    if (u_star) rep.errors.push_back(xs_norm(u.values - u_star->values, dt, epsilon));
    if (res <= tol) {
      rep.converged = true;
      rep.iterations = k;
      return rep;
    }
    if (k == max_iter) break;  // corrections exhausted
    const SpaceTimeField delta = invert_first_order_newton(
        sol.y, SpaceTimeField(y_target.mesh, y_target.grid, rho), cfg, bc);
    u.values += delta.values;
  }
  rep.converged = false;
  rep.iterations = max_iter;
  return rep;
}

}  // namespace hystherm
