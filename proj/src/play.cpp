#include "hystherm/play.hpp"

namespace hystherm {

ScalarSignal play_evaluate(const ScalarSignal& v, const PlayConfig& cfg) {
  Vector out(v.grid.n_t);
  PlayState state{cfg.w_init};
  for (Index k = 0; k < v.grid.n_t; ++k) {
    state.w = play_step(state.w, v.values[k], cfg.radius);
    out[k] = state.w;
  }
  return {v.grid, std::move(out)};
}

ScalarSignal play_bouligand_evaluate(const ScalarSignal& v, const ScalarSignal& eta,
                                     const PlayConfig& cfg) {
  if (!(v.grid == eta.grid))
    throw std::invalid_argument("play_bouligand_evaluate: grid mismatch");
  Vector out(v.grid.n_t);
  Scalar w = cfg.w_init;
  Scalar dw = 0.0;
  for (Index k = 0; k < v.grid.n_t; ++k) {
    dw = play_bouligand_step(w, dw, v.values[k], eta.values[k], cfg.radius);
    w = play_step(w, v.values[k], cfg.radius);
    out[k] = dw;
  }
  return {v.grid, std::move(out)};
}

ScalarSignal play_newton_apply(const ScalarSignal& v_base, const ScalarSignal& eta,
                               const PlayConfig& cfg) {
  if (!(v_base.grid == eta.grid))
    throw std::invalid_argument("play_newton_apply: grid mismatch");
  Vector out(v_base.grid.n_t);
  Scalar w = cfg.w_init;
  Scalar dw = 0.0;
  for (Index k = 0; k < v_base.grid.n_t; ++k) {
    dw = play_newton_step(w, dw, v_base.values[k], eta.values[k], cfg.radius);
    w = play_step(w, v_base.values[k], cfg.radius);
    out[k] = dw;
  }
  return {v_base.grid, std::move(out)};
}

}  // namespace hystherm
