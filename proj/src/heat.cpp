#include "hystherm/heat.hpp"

namespace hystherm {

HeatOperator::HeatOperator(const SpatialMesh& mesh, const BoundarySpec& bc, Scalar dt)
    : mesh_(mesh), bc_(bc), dt_(dt) {
  if (!(dt >= 0) || !std::isfinite(dt))
    throw std::invalid_argument("HeatOperator: dt must be finite and >= 0");
  const Index n = mesh_.n_x;
  const Scalar mu = dt_ / (mesh_.dx() * mesh_.dx());

  lower_ = Vector::Constant(n, -mu);
  diag_ = Vector::Constant(n, 1 + 2 * mu);
  upper_ = Vector::Constant(n, -mu);
  lower_[0] = upper_[n - 1] = 0.0;  // unused band entries

  if (bc_.dirichlet_left()) {
    diag_[0] = 1.0;
    upper_[0] = 0.0;
  } else {
    upper_[0] = -2 * mu;  // ghost reflection y_{-1} = y_1
  }
  if (bc_.dirichlet_right()) {
    diag_[n - 1] = 1.0;
    lower_[n - 1] = 0.0;
  } else {
    lower_[n - 1] = -2 * mu;
  }

  // Thomas elimination factors; pivots stay positive for an M-matrix.
  elim_sub_ = Vector::Zero(n);
  elim_diag_ = Vector::Zero(n);
  elim_diag_[0] = diag_[0];
  for (Index i = 1; i < n; ++i) {
    if (!(elim_diag_[i - 1] > 0))
      throw std::logic_error("HeatOperator: non-positive pivot in M-matrix elimination");
    elim_sub_[i] = lower_[i] / elim_diag_[i - 1];
    elim_diag_[i] = diag_[i] - elim_sub_[i] * upper_[i - 1];
  }
  if (!(elim_diag_[n - 1] > 0))
    throw std::logic_error("HeatOperator: non-positive pivot in M-matrix elimination");
}

Vector HeatOperator::solve(const Vector& rhs) const {
  const Index n = mesh_.n_x;
  if (rhs.size() != n) throw std::invalid_argument("HeatOperator::solve: rhs length");
  Vector x(n);
  x[0] = rhs[0];
  for (Index i = 1; i < n; ++i) x[i] = rhs[i] - elim_sub_[i] * x[i - 1];
  x[n - 1] /= elim_diag_[n - 1];
  for (Index i = n - 2; i >= 0; --i) x[i] = (x[i] - upper_[i] * x[i + 1]) / elim_diag_[i];
  return x;
}

Vector HeatOperator::apply(const Vector& v) const {
  const Index n = mesh_.n_x;
  if (v.size() != n) throw std::invalid_argument("HeatOperator::apply: vector length");
  Vector out(n);
  out[0] = diag_[0] * v[0] + upper_[0] * v[1];
  for (Index i = 1; i < n - 1; ++i)
    out[i] = lower_[i] * v[i - 1] + diag_[i] * v[i] + upper_[i] * v[i + 1];
  out[n - 1] = lower_[n - 1] * v[n - 2] + diag_[n - 1] * v[n - 1];
  return out;
}

void HeatOperator::zero_dirichlet(Vector& v) const {
  if (bc_.dirichlet_left()) v[0] = 0.0;
  if (bc_.dirichlet_right()) v[v.size() - 1] = 0.0;
}

Matrix run_parabolic(const HeatOperator& op, const Vector& z0, SourceRule& rule,
                     const TimeGrid& grid, const SolverParams& prm, SolveStats* stats) {
  prm.validate();
  if (z0.size() != op.mesh().n_x)
    throw std::invalid_argument("run_parabolic: z0 length does not match mesh");
  if (prm.dt_guard && rule.lipschitz() * grid.dt() > 0.5)
    throw std::invalid_argument("run_parabolic: dt guard violated (L*dt > 1/2)");

  const Index n_t = grid.n_t;
  const Scalar dt = grid.dt();
  Matrix z(op.mesh().n_x, n_t);
  z.col(0) = z0;
  rule.commit(0, z0);

  for (Index k = 1; k < n_t; ++k) {
    Vector iterate = z.col(k - 1);
    bool converged = false;
    Scalar res = 0.0;
    std::vector<Scalar>* trace = nullptr;
    if (stats && stats->record_residuals) {
      stats->fp_residuals.emplace_back();
      trace = &stats->fp_residuals.back();
    }
    for (int it = 1; it <= prm.fp_max_iter; ++it) {
      Vector rhs = z.col(k - 1) + dt * rule.evaluate(k, z, iterate);
      op.zero_dirichlet(rhs);
      Vector next = op.solve(rhs);
      res = (next - iterate).lpNorm<Eigen::Infinity>();
      if (trace) trace->push_back(res);
      iterate = std::move(next);
      if (stats && it > stats->max_fp_iterations) stats->max_fp_iterations = it;
      if (res <= prm.fp_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) throw StepError(k, res);
    z.col(k) = iterate;
    rule.commit(k, iterate);
  }
  return z;
}

namespace {

// g = u + W[y], recording the committed play output per node.
class StateSource final : public SourceRule {
 public:
  StateSource(const Matrix& u, const PlayConfig& cfg, ForcingMode forcing)
      : u_(u),
        cfg_(cfg),
        forcing_(forcing),
        mem_(Vector::Constant(u.rows(), cfg.w_init)),
        w_out_(Matrix::Zero(u.rows(), u.cols())) {}

  Vector evaluate(Index k, const Matrix&, const Vector& y_iter) override {
    Vector g = u_.col(k);
    if (forcing_ == ForcingMode::play)
      for (Index i = 0; i < y_iter.size(); ++i)
        g[i] += play_step(mem_[i], y_iter[i], cfg_.radius);
    return g;
  }

  void commit(Index k, const Vector& y) override {
    if (forcing_ != ForcingMode::play) return;
    for (Index i = 0; i < y.size(); ++i) {
      mem_[i] = play_step(mem_[i], y[i], cfg_.radius);
      w_out_(i, k) = mem_[i];
    }
  }

  Scalar lipschitz() const override {
    return forcing_ == ForcingMode::play ? cfg_.lipschitz : 0.0;
  }

  Matrix take_w() { return std::move(w_out_); }

 private:
  const Matrix& u_;
  PlayConfig cfg_;
  ForcingMode forcing_;
  Vector mem_;
  Matrix w_out_;
};

// g = h + derivative recursion at base, driven by the iterate of d.
class FirstOrderSource final : public SourceRule {
 public:
  FirstOrderSource(DerivativeMode mode, const Matrix& base, const Matrix& h,
                   const PlayConfig& cfg)
      : mode_(mode),
        base_(base),
        h_(h),
        cfg_(cfg),
        base_mem_(Vector::Constant(base.rows(), cfg.w_init)),
        dmem_(Vector::Zero(base.rows())),
        omega_out_(Matrix::Zero(base.rows(), base.cols())) {}

  Vector evaluate(Index k, const Matrix&, const Vector& d_iter) override {
    Vector g = h_.col(k);
    for (Index i = 0; i < d_iter.size(); ++i) g[i] += deriv_step(i, k, d_iter[i]);
    return g;
  }

  void commit(Index k, const Vector& d) override {
    for (Index i = 0; i < d.size(); ++i) {
      dmem_[i] = deriv_step(i, k, d[i]);
      omega_out_(i, k) = dmem_[i];
      base_mem_[i] = play_step(base_mem_[i], base_(i, k), cfg_.radius);
    }
  }

  Scalar lipschitz() const override { return cfg_.lipschitz; }

  Matrix take_omega() { return std::move(omega_out_); }

 private:
  Scalar deriv_step(Index i, Index k, Scalar dv) const {
    return mode_ == DerivativeMode::bouligand
               ? play_bouligand_step(base_mem_[i], dmem_[i], base_(i, k), dv, cfg_.radius)
               : play_newton_step(base_mem_[i], dmem_[i], base_(i, k), dv, cfg_.radius);
  }

  DerivativeMode mode_;
  const Matrix& base_;
  const Matrix& h_;
  PlayConfig cfg_;
  Vector base_mem_;
  Vector dmem_;
  Matrix omega_out_;
};

void require_dirichlet_zero(const Vector& v, const BoundarySpec& bc, const char* where) {
  if ((bc.dirichlet_left() && v[0] != 0.0) ||
      (bc.dirichlet_right() && v[v.size() - 1] != 0.0))
    throw std::invalid_argument(std::string(where) +
                                ": initial data must vanish at Dirichlet nodes");
}

}  // namespace

StateSolution solve_state(const SpaceTimeField& u, const Vector& y0, const PlayConfig& cfg,
                          const BoundarySpec& bc, const SolverParams& prm,
                          ForcingMode forcing, SolveStats* stats) {
  require_dirichlet_zero(y0, bc, "solve_state");
  HeatOperator op(u.mesh, bc, u.grid.dt());
  StateSource rule(u.values, cfg, forcing);
  Matrix y = run_parabolic(op, y0, rule, u.grid, prm, stats);
  return {SpaceTimeField(u.mesh, u.grid, std::move(y)),
          SpaceTimeField(u.mesh, u.grid, rule.take_w())};
}

FirstOrderSolution solve_first_order(DerivativeMode mode, const SpaceTimeField& base,
                                     const SpaceTimeField& h, const PlayConfig& cfg,
                                     const BoundarySpec& bc, const SolverParams& prm,
                                     SolveStats* stats) {
  require_same_shape(base, h, "solve_first_order");
  HeatOperator op(base.mesh, bc, base.grid.dt());
  FirstOrderSource rule(mode, base.values, h.values, cfg);
  Vector d0 = Vector::Zero(base.mesh.n_x);
  Matrix d = run_parabolic(op, d0, rule, base.grid, prm, stats);
  return {SpaceTimeField(base.mesh, base.grid, std::move(d)),
          SpaceTimeField(base.mesh, base.grid, rule.take_omega())};
}

Vector thomas_solve(const Vector& lower, const Vector& diag, const Vector& upper,
                    const Vector& rhs) {
  const Index n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n)
    throw std::invalid_argument("thomas_solve: band lengths do not match");
  Vector c(n), x(n);
  if (diag[0] == 0) throw std::logic_error("thomas_solve: zero pivot");
  c[0] = upper[0] / diag[0];
  x[0] = rhs[0] / diag[0];
  for (Index i = 1; i < n; ++i) {
    const Scalar m = diag[i] - lower[i] * c[i - 1];
    if (m == 0) throw std::logic_error("thomas_solve: zero pivot");
    c[i] = upper[i] / m;
    x[i] = (rhs[i] - lower[i] * x[i - 1]) / m;
  }
  for (Index i = n - 2; i >= 0; --i) x[i] -= c[i] * x[i + 1];
  return x;
}

SpaceTimeField solve_inhomogeneous(SourceRule& g_rule, const Vector& z0,
                                   const SpatialMesh& mesh, const TimeGrid& grid,
                                   const BoundarySpec& bc, const SolverParams& prm,
                                   SolveStats* stats) {
  HeatOperator op(mesh, bc, grid.dt());
  Matrix z = run_parabolic(op, z0, g_rule, grid, prm, stats);
  return {mesh, grid, std::move(z)};
}

}  // namespace hystherm
