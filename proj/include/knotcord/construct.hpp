#pragma once
#include <vector>

#include "knotcord/diagram.hpp"

namespace knotcord {

enum class ClaspSign : int { Positive = +1, Negative = -1 };

struct DoubleSpec {
  PlanarDiagram companion;
  int twists = 0;  // signed count of full twists
  ClaspSign clasp = ClaspSign::Positive;
};

// Closure of a braid word on `strands` strands.  Letters are +-s for the
// generator at positions (s,s+1), 1 <= s < strands; a positive letter takes
// the strand at position s over the one at s+1.  Throws MultiComponentError
// when the closure is a link.
PlanarDiagram braid_closure(int strands, const std::vector<int>& word);

// Closure of (sigma_1 ... sigma_{p-1})^q: all-positive for q > 0, the mirror
// for q < 0.  Requires p >= 2 and gcd(p,q) = 1 (else NonCoprimeError).
PlanarDiagram torus_knot(int p, int q);

// Blackboard-framed antiparallel double of the companion: every companion
// crossing becomes a 4-crossing block, the framing is corrected by
// |t - writhe| full-twist boxes of 2 crossings each, and the band is closed
// by a 2-crossing clasp of the given sign.  Crossing count is
// 4c + 2|t - w| + 2; writhe is -2(t - w) + 2*clasp.
PlanarDiagram twisted_double(const DoubleSpec& spec);

}  // namespace knotcord
