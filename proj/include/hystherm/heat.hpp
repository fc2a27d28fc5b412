#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "hystherm/field_ops.hpp"
#include "hystherm/play.hpp"
#include "hystherm/types.hpp"

namespace hystherm {

/// Fixed-point (Picard) controls for the implicit hysteresis coupling.
/// dt_guard enforces L * dt <= 1/2 so the per-step map is a firm contraction.
struct SolverParams {
  Scalar fp_tol = 1e-10;
  int fp_max_iter = 100;
  bool dt_guard = true;

  void validate() const {
    if (!(fp_tol > 0)) throw std::invalid_argument("SolverParams: fp_tol must be > 0");
    if (fp_max_iter < 1)
      throw std::invalid_argument("SolverParams: fp_max_iter must be >= 1");
  }
};

/// Thrown when the per-step fixed point does not reach fp_tol.
struct StepError : std::runtime_error {
  Index step;
  Scalar residual;
  StepError(Index k, Scalar res)
      : std::runtime_error("fixed-point iteration failed at step " + std::to_string(k) +
                           " (last residual " + std::to_string(res) + ")"),
        step(k),
        residual(res) {}
};

/// Backward-Euler heat matrix A = I - dt * Laplacian_h, prefactored for
/// Thomas elimination. Dirichlet rows are identity rows; Neumann rows use the
/// second-order ghost-node reflection. A is an M-matrix (positive diagonal,
/// non-positive off-diagonals, row sums >= 1), which yields the discrete
/// maximum principle and ||A^{-1}||_inf <= 1.
class HeatOperator {
 public:
  HeatOperator(const SpatialMesh& mesh, const BoundarySpec& bc, Scalar dt);

  /// Solve A x = rhs; residual stays below 1e-12 * (1 + ||rhs||_inf).
  Vector solve(const Vector& rhs) const;

  /// Matrix-vector product A x.
  Vector apply(const Vector& x) const;

  const SpatialMesh& mesh() const { return mesh_; }
  const BoundarySpec& bc() const { return bc_; }
  Scalar dt() const { return dt_; }

  const Vector& lower() const { return lower_; }
  const Vector& diag() const { return diag_; }
  const Vector& upper() const { return upper_; }

  /// Zero out the entries of rhs at Dirichlet boundary nodes.
  void zero_dirichlet(Vector& v) const;

 private:
  SpatialMesh mesh_;
  BoundarySpec bc_;
  Scalar dt_;
  Vector lower_, diag_, upper_;    // original tridiagonal bands
  Vector elim_sub_, elim_diag_;    // precomputed elimination factors
};

/// Source g for the generic problem z_t - Laplacian z = g. evaluate() is
/// called inside the per-step fixed point with the current iterate of z at
/// node k and the trajectory committed so far (columns 0..k-1 of history);
/// commit() folds the accepted column into any internal memory. The solver
/// commits node 0 (the initial data) before stepping.
class SourceRule {
 public:
  virtual ~SourceRule() = default;
  virtual Vector evaluate(Index k, const Matrix& history, const Vector& z_iter) = 0;
  virtual void commit(Index /*k*/, const Vector& /*z_accepted*/) {}
  /// Lipschitz constant of z |-> g(z) in the prefix sup norm; 0 when the
  /// source does not depend on z. Used by the dt guard.
  virtual Scalar lipschitz() const { return 0.0; }
};

/// g = f(x, t), independent of z.
class FieldSource final : public SourceRule {
 public:
  explicit FieldSource(Matrix f) : f_(std::move(f)) {}
  Vector evaluate(Index k, const Matrix&, const Vector&) override { return f_.col(k); }

 private:
  Matrix f_;
};

/// g = f + W[z] with W the space-indexed play (memory committed per step).
class PlaySource final : public SourceRule {
 public:
  PlaySource(const PlayConfig& cfg, Index n_x, const Matrix* f = nullptr)
      : cfg_(cfg), f_(f), mem_(Vector::Constant(n_x, cfg.w_init)) {}

  Vector evaluate(Index k, const Matrix&, const Vector& z_iter) override {
    Vector g(z_iter.size());
    for (Index i = 0; i < z_iter.size(); ++i)
      g[i] = play_step(mem_[i], z_iter[i], cfg_.radius);
    if (f_) g += f_->col(k);
    return g;
  }

  void commit(Index, const Vector& z) override {
    for (Index i = 0; i < z.size(); ++i) mem_[i] = play_step(mem_[i], z[i], cfg_.radius);
  }

  Scalar lipschitz() const override { return cfg_.lipschitz; }

 private:
  PlayConfig cfg_;
  const Matrix* f_;
  Vector mem_;
};

/// Per-step residual traces of the Picard iteration, for diagnostics.
struct SolveStats {
  int max_fp_iterations = 0;
  bool record_residuals = false;
  std::vector<std::vector<Scalar>> fp_residuals;
};

/// Generic driver: implicit Euler in time, Picard fixed point per step over
/// the source rule. Returns the full n_x-by-n_t trajectory with column 0 = z0.
Matrix run_parabolic(const HeatOperator& op, const Vector& z0, SourceRule& rule,
                     const TimeGrid& grid, const SolverParams& prm,
                     SolveStats* stats = nullptr);

enum class ForcingMode { none, play };
enum class DerivativeMode { bouligand, newton };

struct StateSolution {
  SpaceTimeField y;
  SpaceTimeField w;
};

/// Solve y_t - Laplacian y = u + W[y], B[y] = 0, y(.,0) = y0. The hysteresis
/// value at each step is driven by the new iterate itself and resolved by the
/// fixed point; the returned w equals apply_w(y) exactly.
StateSolution solve_state(const SpaceTimeField& u, const Vector& y0, const PlayConfig& cfg,
                          const BoundarySpec& bc, const SolverParams& prm,
                          ForcingMode forcing = ForcingMode::play,
                          SolveStats* stats = nullptr);

struct FirstOrderSolution {
  SpaceTimeField d;
  SpaceTimeField omega;
};

/// Solve the first-order problem d_t - Laplacian d = h + omega, d(.,0) = 0,
/// with omega the Bouligand derivative recursion at base (mode bouligand) or
/// the Newton selection at base (mode newton, linear in h). For the Bouligand
/// derivative of the state map pass base = solve_state(u); for the Newton
/// selection of Theorem-style remainder checks pass base = solve_state(u + h).
FirstOrderSolution solve_first_order(DerivativeMode mode, const SpaceTimeField& base,
                                     const SpaceTimeField& h, const PlayConfig& cfg,
                                     const BoundarySpec& bc, const SolverParams& prm,
                                     SolveStats* stats = nullptr);

/// Solve z_t - Laplacian z = g with a caller-supplied source rule.
SpaceTimeField solve_inhomogeneous(SourceRule& g_rule, const Vector& z0,
                                   const SpatialMesh& mesh, const TimeGrid& grid,
                                   const BoundarySpec& bc, const SolverParams& prm,
                                   SolveStats* stats = nullptr);

/// Free-function form of the prefactored tridiagonal solve.
inline Vector tridiag_solve(const HeatOperator& op, const Vector& rhs) {
  return op.solve(rhs);
}

/// One-shot Thomas elimination for a general tridiagonal system; lower[0] and
/// upper[n-1] are ignored. No pivoting; meant for diagonally dominant systems.
Vector thomas_solve(const Vector& lower, const Vector& diag, const Vector& upper,
                    const Vector& rhs);

}  // namespace hystherm
