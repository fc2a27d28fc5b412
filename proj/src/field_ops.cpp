#include "hystherm/field_ops.hpp"

namespace hystherm {

// Sweeps time columns with a per-row memory vector; identical to an
// independent scalar fold per row.

SpaceTimeField apply_w(const SpaceTimeField& y, const PlayConfig& cfg) {
  const Index n_x = y.mesh.n_x;
  const Index n_t = y.grid.n_t;
  Matrix out(n_x, n_t);
  Vector mem = Vector::Constant(n_x, cfg.w_init);
  for (Index k = 0; k < n_t; ++k) {
    for (Index i = 0; i < n_x; ++i) mem[i] = play_step(mem[i], y.values(i, k), cfg.radius);
    out.col(k) = mem;
  }
  return {y.mesh, y.grid, std::move(out)};
}

SpaceTimeField apply_w_bouligand(const SpaceTimeField& y, const SpaceTimeField& d,
                                 const PlayConfig& cfg) {
  require_same_shape(y, d, "apply_w_bouligand");
  const Index n_x = y.mesh.n_x;
  const Index n_t = y.grid.n_t;
  Matrix out(n_x, n_t);
  Vector mem = Vector::Constant(n_x, cfg.w_init);
  Vector dmem = Vector::Zero(n_x);
  for (Index k = 0; k < n_t; ++k) {
    for (Index i = 0; i < n_x; ++i) {
      dmem[i] = play_bouligand_step(mem[i], dmem[i], y.values(i, k), d.values(i, k),
                                    cfg.radius);
      mem[i] = play_step(mem[i], y.values(i, k), cfg.radius);
    }
    out.col(k) = dmem;
  }
  return {y.mesh, y.grid, std::move(out)};
}

SpaceTimeField apply_w_newton(const SpaceTimeField& y_base, const SpaceTimeField& d,
                              const PlayConfig& cfg) {
  require_same_shape(y_base, d, "apply_w_newton");
  const Index n_x = y_base.mesh.n_x;
  const Index n_t = y_base.grid.n_t;
  Matrix out(n_x, n_t);
  Vector mem = Vector::Constant(n_x, cfg.w_init);
  Vector dmem = Vector::Zero(n_x);
  for (Index k = 0; k < n_t; ++k) {
    for (Index i = 0; i < n_x; ++i) {
      dmem[i] = play_newton_step(mem[i], dmem[i], y_base.values(i, k), d.values(i, k),
                                 cfg.radius);
      mem[i] = play_step(mem[i], y_base.values(i, k), cfg.radius);
    }
    out.col(k) = dmem;
  }
  return {y_base.mesh, y_base.grid, std::move(out)};
}

}  // namespace hystherm
