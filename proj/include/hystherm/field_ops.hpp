#pragma once

#include "hystherm/play.hpp"
#include "hystherm/types.hpp"

namespace hystherm {

/// Space-indexed play: row x of the output is the play of row x of y.
/// One shared PlayConfig for all rows (space-independent operator).
SpaceTimeField apply_w(const SpaceTimeField& y, const PlayConfig& cfg);

/// Rowwise directional derivative of apply_w at y in direction d.
SpaceTimeField apply_w_bouligand(const SpaceTimeField& y, const SpaceTimeField& d,
                                 const PlayConfig& cfg);

/// Rowwise Newton-derivative selection at y_base applied to d; linear in d.
SpaceTimeField apply_w_newton(const SpaceTimeField& y_base, const SpaceTimeField& d,
                              const PlayConfig& cfg);

}  // namespace hystherm
