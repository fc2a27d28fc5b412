#pragma once

#include <cmath>
#include <stdexcept>

#include "hystherm/types.hpp"

namespace hystherm {

/// Parameters of the scalar play operator. The Lipschitz constant L and the
/// growth constant c0 of the operator are carried here for the estimate
/// checkers; for the play itself L = 1 and c0 = r + |w_init|.
struct PlayConfig {
  Scalar radius;
  Scalar w_init = 0.0;
  Scalar lipschitz = 1.0;

  PlayConfig(Scalar r, Scalar initial_memory = 0.0) : radius(r), w_init(initial_memory) {
    if (!(radius > 0) || !std::isfinite(radius))
      throw std::invalid_argument("PlayConfig: radius must be finite and > 0");
    if (!std::isfinite(w_init))
      throw std::invalid_argument("PlayConfig: w_init must be finite");
  }

  Scalar growth_c0() const { return radius + std::abs(w_init); }
};

/// Running memory of the play recursion. After an update driven by input v the
/// memory satisfies v - r <= w <= v + r.
struct PlayState {
  Scalar w;
};

/// One step of the time-discrete play: w = max(v - r, min(v + r, w_prev)).
/// Exact for piecewise-linear inputs sampled at their breakpoints.
template <typename S>
S play_step(S w_prev, S v, S r) {
  if (!std::isfinite(w_prev) || !std::isfinite(v) || !std::isfinite(r))
    throw std::invalid_argument("play_step: non-finite input");
  return std::max(v - r, std::min(v + r, w_prev));
}

/// Directional derivative of play_step at (w_prev, v) in direction (dw_prev, dv).
/// At exact contact w_prev == v -+ r the one-sided limit is max(dv, dw_prev)
/// resp. min(dv, dw_prev); strictly active clamps return dv, the interior
/// returns dw_prev.
template <typename S>
S play_bouligand_step(S w_prev, S dw_prev, S v, S dv, S r) {
  if (!std::isfinite(dw_prev) || !std::isfinite(dv))
    throw std::invalid_argument("play_bouligand_step: non-finite input");
  const S lo = v - r;
  const S hi = v + r;
  if (w_prev < lo || w_prev > hi) return dv;
  if (w_prev == lo) return std::max(dv, dw_prev);
  if (w_prev == hi) return std::min(dv, dw_prev);
  return dw_prev;
}

/// Newton-derivative step: as play_bouligand_step, but ties resolve to the
/// active branch (dw = dv), so the branch choice never depends on the
/// direction and the induced map stays linear.
template <typename S>
S play_newton_step(S w_prev, S dw_prev, S v, S dv, S r) {
  if (!std::isfinite(dw_prev) || !std::isfinite(dv))
    throw std::invalid_argument("play_newton_step: non-finite input");
  const S lo = v - r;
  const S hi = v + r;
  if (w_prev > lo && w_prev < hi) return dw_prev;
  return dv;
}

/// Play output signal: fold of play_step from w_init over the nodes of v.
/// Causal; node k of the output depends on v_0..v_k only.
ScalarSignal play_evaluate(const ScalarSignal& v, const PlayConfig& cfg);

/// Directional derivative of play_evaluate at v in direction eta, with the
/// initial-memory variation fixed to zero.
ScalarSignal play_bouligand_evaluate(const ScalarSignal& v, const ScalarSignal& eta,
                                     const PlayConfig& cfg);

/// Apply the Newton-derivative selection taken at the trajectory v_base to the
/// direction eta. Linear in eta.
ScalarSignal play_newton_apply(const ScalarSignal& v_base, const ScalarSignal& eta,
                               const PlayConfig& cfg);

}  // namespace hystherm
