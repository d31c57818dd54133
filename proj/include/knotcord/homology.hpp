#pragma once
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "knotcord/diagram.hpp"
#include "knotcord/laurent.hpp"

namespace knotcord {

// Frobenius deformation of the rank-2 algebra: X^2 = x2_hx*hX + x2_h2*h^2
// with h the filtration variable (quantum degree -2).  (0,0) is the
// undeformed algebra used for homology; the default (0,1) is the separable
// deformation used for the s-invariant, valid in every characteristic.
struct FrobeniusParams {
  int x2_h2 = 0;
  int x2_hx = 1;
};

enum class FieldKind { Rational, Prime };

struct EngineConfig {
  FieldKind field = FieldKind::Rational;
  std::uint32_t prime = 2;  // modulus when field == Prime
  FrobeniusParams frobenius{};
  std::uint64_t max_terms = 5'000'000;  // budget on live differential terms
  double max_seconds = 0.0;             // 0 = no wall-clock budget
  int verbosity = 0;
  std::ostream* trace = nullptr;  // defaults to stderr when verbosity > 0
  std::vector<std::uint32_t> scan_order;  // empty = automatic
  bool check_differential = false;  // verify d∘d = 0 after every scan step
};

struct SResult {
  int s = 0;
  int s_min = 0;  // the two surviving quantum degrees: s -/+ 1
  int s_max = 0;
};

struct KhTable {
  // (homological degree, quantum degree) -> rank
  std::map<std::pair<int, int>, std::uint64_t> dim;

  Laurent graded_euler() const;
  std::string str() const;
  bool operator==(const KhTable& o) const { return dim == o.dim; }
};

// Rasmussen-type concordance invariant from the deformed complex.
SResult s_invariant(const PlanarDiagram& d, const EngineConfig& cfg = {});

// Bigraded homology ranks over the configured field.
KhTable kh_homology(const PlanarDiagram& d, const EngineConfig& cfg = {});

// Unreduced Jones polynomial via the state sum, in the same output
// convention as kh_homology (so it equals the graded Euler characteristic).
Laurent jones_polynomial(const PlanarDiagram& d);

}  // namespace knotcord
