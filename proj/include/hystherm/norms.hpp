#pragma once

#include <cmath>
#include <stdexcept>

#include "hystherm/types.hpp"

namespace hystherm {

// Discrete Bochner-norm conventions, matched to the implicit-Euler semantics
// of the solver (value at node k represents the step (t_{k-1}, t_k]):
//   * time integrals: rectangle rule over the n_t - 1 steps, right endpoints;
//   * time suprema: exact maxima over all nodes;
//   * space integrals: trapezoid weights (dx/2 at the two boundary nodes);
//   * space suprema: exact maxima over all nodes;
//   * z_t: forward differences (z^{k+1} - z^k)/dt on the n_t - 1 intervals;
//   * gradient: central differences inside, one-sided at the boundary.

enum class NormKind { L2_QT, H1t_L2x, LinfT_V, XS, Lq_x_Ct, L1t_Linfx };

struct NormSpec {
  NormKind kind;
  Scalar p = 2.0;
  Scalar q = 2.0;
  Scalar epsilon = 0.5;
};

/// Trapezoid-weight integral of a node-value column over the mesh.
template <typename Derived>
Scalar space_integral(const Eigen::MatrixBase<Derived>& col, Scalar dx) {
  const Index n = col.size();
  return dx * (col.sum() - 0.5 * (col[0] + col[n - 1]));
}

template <typename Derived>
Scalar l2_qt(const Eigen::MatrixBase<Derived>& f, Scalar dx, Scalar dt) {
  Scalar acc = 0;
  for (Index k = 1; k < f.cols(); ++k)
    acc += dt * space_integral(f.derived().col(k).cwiseAbs2(), dx);
  return std::sqrt(acc);
}

/// Forward differences in time, divided by dt: n_x-by-(n_t - 1).
template <typename Derived>
Matrix time_diff(const Eigen::MatrixBase<Derived>& f, Scalar dt) {
  const Index m = f.cols() - 1;
  return (f.derived().rightCols(m) - f.derived().leftCols(m)) / dt;
}

template <typename Derived>
Scalar h1t_l2x(const Eigen::MatrixBase<Derived>& f, Scalar dx, Scalar dt) {
  Scalar acc = 0;
  for (Index k = 0; k + 1 < f.cols(); ++k) {
    Vector diff = (f.derived().col(k + 1) - f.derived().col(k)) / dt;
    acc += dt * space_integral(diff.cwiseAbs2(), dx);
  }
  return std::sqrt(acc);
}

/// Central-difference spatial gradient of one snapshot (one-sided at the ends).
template <typename Derived>
Vector discrete_gradient(const Eigen::MatrixBase<Derived>& col, Scalar dx) {
  const Index n = col.size();
  Vector g(n);
  g[0] = (col[1] - col[0]) / dx;
  for (Index i = 1; i < n - 1; ++i) g[i] = (col[i + 1] - col[i - 1]) / (2 * dx);
  g[n - 1] = (col[n - 1] - col[n - 2]) / dx;
  return g;
}

template <typename Derived>
Scalar linft_v(const Eigen::MatrixBase<Derived>& f, Scalar dx) {
  Scalar best = 0;
  for (Index k = 0; k < f.cols(); ++k) {
    Vector g = discrete_gradient(f.derived().col(k), dx);
    best = std::max(best, space_integral(g.cwiseAbs2(), dx));
  }
  return std::sqrt(best);
}

/// L^{2+eps}(0,T; L^inf(Omega)) norm; the control-space norm X_S.
template <typename Derived>
Scalar xs_norm(const Eigen::MatrixBase<Derived>& f, Scalar dt, Scalar epsilon) {
  if (!(epsilon > 0)) throw std::invalid_argument("xs_norm: epsilon must be > 0");
  const Scalar e = 2.0 + epsilon;
  Scalar acc = 0;
  for (Index k = 1; k < f.cols(); ++k)
    acc += dt * std::pow(f.derived().col(k).cwiseAbs().maxCoeff(), e);
  return std::pow(acc, 1.0 / e);
}

template <typename Derived>
Scalar lq_x_ct(const Eigen::MatrixBase<Derived>& f, Scalar dx, Scalar q) {
  if (!(q >= 1)) throw std::invalid_argument("lq_x_ct: q must be >= 1");
  Vector m = f.derived().cwiseAbs().rowwise().maxCoeff();
  Vector mq = m.array().pow(q).matrix();
  return std::pow(space_integral(mq, dx), 1.0 / q);
}

template <typename Derived>
Scalar l1t_linfx(const Eigen::MatrixBase<Derived>& f, Scalar dt) {
  Scalar acc = 0;
  for (Index k = 1; k < f.cols(); ++k)
    acc += dt * f.derived().col(k).cwiseAbs().maxCoeff();
  return acc;
}

/// L^q norm over the space-time cylinder of an interval field (all columns
/// weighted dt); used for forward-difference fields which have no node 0.
template <typename Derived>
Scalar lq_qt_intervals(const Eigen::MatrixBase<Derived>& g, Scalar dx, Scalar dt,
                       Scalar q) {
  if (!(q >= 1)) throw std::invalid_argument("lq_qt_intervals: q must be >= 1");
  Scalar acc = 0;
  for (Index k = 0; k < g.cols(); ++k)
    acc += dt * space_integral(g.derived().col(k).cwiseAbs().array().pow(q).matrix(), dx);
  return std::pow(acc, 1.0 / q);
}

/// Norm of the state space Y_S = H^1(0,T;L^2) cap L^inf(0,T;V), realized as
/// the sum of the two discrete seminorms.
template <typename Derived>
Scalar norm_ys(const Eigen::MatrixBase<Derived>& f, Scalar dx, Scalar dt) {
  return h1t_l2x(f, dx, dt) + linft_v(f, dx);
}

inline Scalar norm(const SpaceTimeField& field, const NormSpec& spec) {
  const Scalar dx = field.mesh.dx();
  const Scalar dt = field.grid.dt();
  switch (spec.kind) {
    case NormKind::L2_QT:
      return l2_qt(field.values, dx, dt);
    case NormKind::H1t_L2x:
      return h1t_l2x(field.values, dx, dt);
    case NormKind::LinfT_V:
      return linft_v(field.values, dx);
    case NormKind::XS:
      return xs_norm(field.values, dt, spec.epsilon);
    case NormKind::Lq_x_Ct:
      return lq_x_ct(field.values, dx, spec.q);
    case NormKind::L1t_Linfx:
      return l1t_linfx(field.values, dt);
  }
  throw std::invalid_argument("norm: unknown norm kind");
}

inline Scalar norm_ys(const SpaceTimeField& field) {
  return norm_ys(field.values, field.mesh.dx(), field.grid.dt());
}

}  // namespace hystherm
