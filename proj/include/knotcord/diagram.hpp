#pragma once
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace knotcord {

// One crossing of an oriented knot diagram.  p holds the four arc labels in
// counterclockwise order around the crossing, starting from the incoming
// under-strand: the under-strand runs p[0] -> p[2], the over-strand joins
// p[3] and p[1].  At a positive crossing the over-strand runs p[3] -> p[1],
// at a negative one p[1] -> p[3]; either way the outgoing over port carries
// the successor arc of the incoming one.
struct Crossing {
  std::array<uint32_t, 4> p{};
  int sign = 0;  // +1 or -1, derived from the labels

  uint32_t under_in() const { return p[0]; }
  uint32_t under_out() const { return p[2]; }
  uint32_t over_in() const { return sign > 0 ? p[3] : p[1]; }
  uint32_t over_out() const { return sign > 0 ? p[1] : p[3]; }
  bool operator==(const Crossing&) const = default;
};

// Arc labels run 1..n_arcs in strand order: arc a flows into arc a%n+1.
// The 0-crossing unknot is the empty crossing list with n_arcs = 1.
struct PlanarDiagram {
  std::vector<Crossing> crossings;
  uint32_t n_arcs = 1;

  bool operator==(const PlanarDiagram&) const = default;
};

inline uint32_t arc_succ(uint32_t a, uint32_t n) { return a % n + 1; }

// Validates raw 4-tuples (label range, multiplicity, strand succession) and
// derives crossing signs.  Throws MalformedSyntax, ArcMultiplicityError or
// MultiComponentError.
PlanarDiagram make_diagram(const std::vector<std::array<uint32_t, 4>>& tuples);

// Grammar (bit-exact): `PD[]` or `PD[X[a,b,c,d],...]`, positive integer
// labels, whitespace ignored.  serialize_pd emits crossings in stored order
// with no spaces; parse_pd(serialize_pd(d)) == d.
PlanarDiagram parse_pd(std::string_view text);
std::string serialize_pd(const PlanarDiagram& d);

int writhe(const PlanarDiagram& d);
int positive_crossings(const PlanarDiagram& d);
int negative_crossings(const PlanarDiagram& d);

// Over/under swapped at every crossing; signs negate; involution.
PlanarDiagram mirror(const PlanarDiagram& d);
// Strand orientation reversed (arc labels reversed); signs kept; involution.
PlanarDiagram reverse_orientation(const PlanarDiagram& d);
// Splice b into arc 1 of a; writhe adds, crossing counts add.
PlanarDiagram connected_sum(const PlanarDiagram& a, const PlanarDiagram& b);
// Circles of the all-orientation-respecting smoothing.
int seifert_circle_count(const PlanarDiagram& d);

// Deterministic representative under cyclic relabeling of arcs: the rotation
// and crossing order minimizing the serialized form.  Used for cache keys.
PlanarDiagram canonical(const PlanarDiagram& d);
std::string canonical_pd(const PlanarDiagram& d);

// True when every arc occurs exactly once flowing into a crossing and once
// flowing out, i.e. the labels trace an embedded strand.  Operations that
// splice into the strand (connected sum, doubling) require this.
bool traversal_coherent(const PlanarDiagram& d);

}  // namespace knotcord
