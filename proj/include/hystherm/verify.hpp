#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hystherm/heat.hpp"
#include "hystherm/norms.hpp"
#include "hystherm/types.hpp"

namespace hystherm {

/// Remainder quotients ||S(u + lh) - S(u) - d||_YS / ||lh||_XS along a ladder
/// of step sizes l; the empirical differentiability modulus.
struct RemainderReport {
  DerivativeMode mode;
  Scalar epsilon;
  std::vector<Scalar> lambdas;
  std::vector<Scalar> ratios;
  std::vector<Scalar> remainder_norms;  // ||y_l - y - d||_YS
  std::vector<Scalar> direction_norms;  // ||l h||_XS
  std::vector<Scalar> y_norms;          // ||y_l||_YS
  std::vector<Scalar> d_norms;          // ||d||_YS
};

/// For each ladder value l: y = S(u), y_l = S(u + l h), d the first-order
/// solution (base y for Bouligand, base y_l for the Newton selection), and
/// the quotient above. Ladder points run as independent parallel jobs.
RemainderReport run_remainder_study(const SpaceTimeField& u, const SpaceTimeField& h,
                                    const std::vector<Scalar>& ladder,
                                    DerivativeMode mode, const PlayConfig& cfg,
                                    const BoundarySpec& bc, const SolverParams& prm,
                                    Scalar epsilon,
                                    const std::optional<Vector>& y0 = std::nullopt);

/// Decay acceptance for a ratio ladder: the first entry is genuinely above
/// the solver floor, and the sequence strictly decreases until entries reach
/// the floor (at or below it they count as converged).
bool ratios_decay_to_floor(const std::vector<Scalar>& ratios, Scalar floor);

/// One evaluated a priori inequality: lhs <= C * rhs with C = lhs / rhs.
struct EstimateReport {
  std::string label;
  Scalar lhs = 0;
  Scalar rhs = 0;
  Scalar empirical_constant = 0;
  Scalar T = 0;
  Index n_x = 0;
  Index n_t = 0;
  bool consistent = true;  // false when rhs vanishes but lhs does not
};

/// Instance of z_t - Laplacian z = g, |g| <= L sup_{s<=t}|z| + f, built from a
/// plain source f plus (optionally) the play feedback g = f + W[z].
struct EstimateProblem {
  SpatialMesh mesh;
  TimeGrid grid;
  BoundarySpec bc;
  SolverParams prm;
  PlayConfig play;
  bool play_driven = true;
  SpaceTimeField f;
  Vector z0;
};

/// Energy estimate: int_O sup_t|z|^2 + sup_t int_O |grad z|^2 + int int z_t^2
/// against C1(T) (int int f^2 + int z0^2 + int |grad z0|^2 / 2).
EstimateReport check_energy_estimate(const EstimateProblem& problem);

/// Sup estimate: ||z||_{L^inf(Q_T)} against C2(T) (int_0^T ||f||_inf + ||z0||_inf).
EstimateReport check_linf_estimate(const EstimateProblem& problem);

struct FirstOrderEstimates {
  EstimateReport energy;    // int int d_t^2 + sup_t int |grad d|^2  vs  int int h^2
  EstimateReport linf;      // ||d||_inf  vs  int_0^T ||h||_inf dt
  EstimateReport dt_bound;  // ||d_t||^2_{L^{2+eps}(Q_T)}  vs  ||h||^2_XS
};

/// Evaluate the first-order a priori inequalities for a computed pair (d, h).
FirstOrderEstimates check_first_order_estimates(const SpaceTimeField& d,
                                                const SpaceTimeField& h, Scalar epsilon);

struct MaxPrincipleReport {
  bool sup_ok = true;      // per-step sup norm non-increasing
  bool nonneg_ok = true;   // z stays >= 0 when z0 >= 0 (vacuous otherwise)
  Index offending_x = -1;
  Index offending_t = -1;
  Scalar sup_initial = 0;
  Scalar sup_overall = 0;
};

/// Evolve z0 with g = 0 and check the discrete maximum principle.
MaxPrincipleReport check_max_principle(const Vector& z0, const SpatialMesh& mesh,
                                       const TimeGrid& grid, const BoundarySpec& bc,
                                       const SolverParams& prm);

struct NewtonRunReport {
  std::vector<Scalar> residual_norms;  // ||S(u_k) - y_target||_YS per iterate
  std::vector<Scalar> errors;          // ||u_k - u*||_XS when u* is known
  bool converged = false;
  int iterations = 0;  // corrections applied
};

/// Recover h from a desired first-order solution d = rho by applying the
/// discrete operator: h^k = (A rho^k - rho^{k-1}) / dt - (M^W rho)^k with the
/// Newton selection at base; column 0 is zero. Exact inverse of the Newton-mode
/// first-order solve at grid level.
SpaceTimeField invert_first_order_newton(const SpaceTimeField& base,
                                         const SpaceTimeField& rho, const PlayConfig& cfg,
                                         const BoundarySpec& bc);

/// Semismooth Newton iteration for S(u) = y_target: u_{k+1} = u_k + delta_k
/// with delta_k = (M^S)^{-1}(y_target - S(u_k)), the inverse taken in closed
/// form through invert_first_order_newton at the current trajectory.
NewtonRunReport semismooth_newton_solve(const SpaceTimeField& y_target,
                                        const SpaceTimeField& u0, const PlayConfig& cfg,
                                        const BoundarySpec& bc, const SolverParams& prm,
                                        Scalar tol, int max_iter, Scalar epsilon = 0.5,
                                        const SpaceTimeField* u_star = nullptr,
                                        const std::optional<Vector>& y0 = std::nullopt);

}  // namespace hystherm
