#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace hystherm {

template <typename T>
using MatrixX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Scalar = double;
using Matrix = MatrixX<Scalar>;
using Vector = VectorX<Scalar>;
using Index = Eigen::Index;

/// Uniform grid on [0, T] with node k at t_k = k * dt, dt = T / (n_t - 1).
struct TimeGrid {
  Scalar T;
  Index n_t;

  TimeGrid(Scalar final_time, Index node_count) : T(final_time), n_t(node_count) {
    if (!(T > 0) || !std::isfinite(T))
      throw std::invalid_argument("TimeGrid: T must be finite and > 0");
    if (n_t < 2) throw std::invalid_argument("TimeGrid: n_t must be >= 2");
  }

  Scalar dt() const { return T / static_cast<Scalar>(n_t - 1); }
  Scalar time(Index k) const { return static_cast<Scalar>(k) * dt(); }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.T == b.T && a.n_t == b.n_t;
  }
};

/// Uniform mesh on [0, X] with n_x nodes (two boundary nodes included).
struct SpatialMesh {
  Scalar X;
  Index n_x;

  SpatialMesh(Scalar length, Index node_count) : X(length), n_x(node_count) {
    if (!(X > 0) || !std::isfinite(X))
      throw std::invalid_argument("SpatialMesh: X must be finite and > 0");
    if (n_x < 3) throw std::invalid_argument("SpatialMesh: n_x must be >= 3");
  }

  Scalar dx() const { return X / static_cast<Scalar>(n_x - 1); }
  Scalar pos(Index i) const { return static_cast<Scalar>(i) * dx(); }

  friend bool operator==(const SpatialMesh& a, const SpatialMesh& b) {
    return a.X == b.X && a.n_x == b.n_x;
  }
};

enum class BoundaryKind { Dirichlet, Neumann };

/// Homogeneous boundary assignment per side; at least one side must be Dirichlet.
struct BoundarySpec {
  BoundaryKind left;
  BoundaryKind right;

  BoundarySpec(BoundaryKind l, BoundaryKind r) : left(l), right(r) {
    if (left != BoundaryKind::Dirichlet && right != BoundaryKind::Dirichlet)
      throw std::invalid_argument("BoundarySpec: at least one side must be Dirichlet");
  }

  bool dirichlet_left() const { return left == BoundaryKind::Dirichlet; }
  bool dirichlet_right() const { return right == BoundaryKind::Dirichlet; }
};

/// Time series of node values on a TimeGrid, read as the piecewise-linear
/// interpolant of its nodes.
struct ScalarSignal {
  TimeGrid grid;
  Vector values;

  ScalarSignal(TimeGrid g, Vector v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.n_t)
      throw std::invalid_argument("ScalarSignal: value count does not match grid");
    if (!values.allFinite())
      throw std::invalid_argument("ScalarSignal: values must be finite");
  }

  static ScalarSignal zero(const TimeGrid& g) { return {g, Vector::Zero(g.n_t)}; }
};

/// Dense n_x-by-n_t field of node values; column k is the spatial snapshot at t_k.
struct SpaceTimeField {
  SpatialMesh mesh;
  TimeGrid grid;
  Matrix values;

  SpaceTimeField(SpatialMesh m, TimeGrid g, Matrix v)
      : mesh(m), grid(g), values(std::move(v)) {
    if (values.rows() != mesh.n_x || values.cols() != grid.n_t)
      throw std::invalid_argument("SpaceTimeField: value shape does not match mesh/grid");
    if (!values.allFinite())
      throw std::invalid_argument("SpaceTimeField: values must be finite");
  }

  static SpaceTimeField zero(const SpatialMesh& m, const TimeGrid& g) {
    return {m, g, Matrix::Zero(m.n_x, g.n_t)};
  }

  /// Sample f(x, t) at the grid nodes.
  static SpaceTimeField sample(const SpatialMesh& m, const TimeGrid& g,
                               const std::function<Scalar(Scalar, Scalar)>& f) {
    Matrix v(m.n_x, g.n_t);
    for (Index k = 0; k < g.n_t; ++k)
      for (Index i = 0; i < m.n_x; ++i) v(i, k) = f(m.pos(i), g.time(k));
    return {m, g, std::move(v)};
  }

  bool same_shape(const SpaceTimeField& other) const {
    return mesh == other.mesh && grid == other.grid;
  }
};

inline void require_same_shape(const SpaceTimeField& a, const SpaceTimeField& b,
                               const char* where) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(where) + ": field shapes do not match");
}

}  // namespace hystherm
