#pragma once
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "knotcord/construct.hpp"
#include "knotcord/diagram.hpp"
#include "knotcord/homology.hpp"

namespace knotcord {

// ---------------------------------------------------------------------------
// Knot expressions
// ---------------------------------------------------------------------------

// Expression tree over knots: torus-knot leaves, named leaves resolved
// through a registry, mirror images, and connected sums.
struct KnotExpr;
using KnotExprPtr = std::shared_ptr<const KnotExpr>;

struct KnotExpr {
  enum class Kind { Torus, Named, Mirror, Sum };
  Kind kind = Kind::Torus;
  int p = 0;         // Kind::Torus
  int q = 0;         // Kind::Torus
  std::string name;  // Kind::Named
  KnotExprPtr a;     // Mirror operand / left summand
  KnotExprPtr b;     // right summand
};

KnotExprPtr torus_expr(int p, int q);
KnotExprPtr named_expr(std::string name);
KnotExprPtr mirror_expr(KnotExprPtr e);
KnotExprPtr sum_expr(KnotExprPtr a, KnotExprPtr b);

// Grammar (bit-exact): leaf `T(p,q)` (integers, q may be negative) or
// `knot:<name>` with name over [A-Za-z0-9_]; unary `m(<expr>)`; binary
// `<expr>#<expr>`, left associative; whitespace ignored between tokens.
// Throws MalformedSyntax.
KnotExprPtr parse_knot_expr(std::string_view text);

// Emits the expression with sums flattened left associatively (the only
// shape the grammar can express); parse(serialize(e)) rebuilds e for every
// parser-produced tree.
std::string serialize_expr(const KnotExprPtr& e);

// Mirrors pushed to the leaves (m distributes over #, cancels with itself,
// negates q on torus leaves) and sums reassociated to the left.
KnotExprPtr normalize_expr(const KnotExprPtr& e);

// serialize_expr(normalize_expr(e)): the key used by ledgers and caches.
std::string canonical_expr(const KnotExprPtr& e);

// ---------------------------------------------------------------------------
// Registry of named knots
// ---------------------------------------------------------------------------

struct KnotRegistry {
  struct Entry {
    PlanarDiagram diagram;
    std::optional<int> tau;  // registered value of the tau invariant
  };
  std::map<std::string, Entry> entries;

  void add(const std::string& name, PlanarDiagram d,
           std::optional<int> tau = std::nullopt);

  // unknot (tau 0), trefoil = closure of the 2-strand positive braid
  // (tau 1), fig8 (tau 0).
  static const KnotRegistry& builtin();
};

// Realize the expression as a diagram.  Names missing from the registry
// throw MissingLeafError.
PlanarDiagram expr_diagram(const KnotExprPtr& e,
                           const KnotRegistry& reg = KnotRegistry::builtin());

// ---------------------------------------------------------------------------
// Invariant evaluators
// ---------------------------------------------------------------------------

// A concordance invariant evaluated on diagrams; `name` keys ledgers,
// caches and logs.
struct NuEvaluator {
  std::string name;
  std::function<int(const PlanarDiagram&)> eval;
  bool additive = true;  // the underlying invariant adds under #
};

// -s(d)/2 from the homology engine.
int nu_s(const PlanarDiagram& d, const EngineConfig& cfg = {});
NuEvaluator make_nu_s_evaluator(const EngineConfig& cfg = {});

// tau from the torus-knot formula (p-1)(q-1)/2, mirror antisymmetry,
// additivity under #, and registered leaf values.  Throws UnknownTauError
// for a named leaf with no registered tau.
int tau_value(const KnotExprPtr& e,
              const KnotRegistry& reg = KnotRegistry::builtin());

// 2*tau(e) - 1: the twist threshold governed by tau.  Always odd.
int t_tau(const KnotExprPtr& e,
          const KnotRegistry& reg = KnotRegistry::builtin());

// ---------------------------------------------------------------------------
// Twist-threshold searches and profiles
// ---------------------------------------------------------------------------

// One evaluation of nu on a twisted double of the companion.
struct DoubleEval {
  int t = 0;
  ClaspSign clasp = ClaspSign::Positive;
  int value = 0;
};

// Optional externally supplied bracket for the threshold (contact-geometric
// style bounds).  Checked against the computed answer; disagreement is a
// warning, never an override.  lower <= upper required when both present.
struct TBHints {
  std::optional<int> lower;
  std::optional<int> upper;
};

struct TnuResult {
  KnotExprPtr knot;
  std::string invariant;
  int t_star = 0;
  DoubleEval cert_at;            // value 1 at t_star
  DoubleEval cert_above;         // value 0 at t_star + 1
  std::vector<DoubleEval> log;   // every evaluator call, in order
  std::vector<std::string> warnings;
};

// Largest t with nu(D_+(K,t)) = 1.  Seeds at 2*nu(K) - 1 (falling back to
// writhe - seifert_circle_count when nu(K) exhausts its budget), gallops
// outward with doubling steps until both a 1 and a 0 are witnessed, then
// binary-searches the flip.  Throws MonotonicityViolation when observed
// values leave {0,1} or a 0 appears below a 1.
TnuResult t_nu_search(const KnotExprPtr& e, const NuEvaluator& nu,
                      const TBHints& hints = {},
                      const KnotRegistry& reg = KnotRegistry::builtin());

// nu(D_+(K,t)) for t in [t_lo, t_hi]; empty when t_lo > t_hi.  Asserts the
// values lie in {0,1} and never increase with t.
std::vector<DoubleEval> step_profile(const KnotExprPtr& e,
                                     const NuEvaluator& nu, int t_lo, int t_hi,
                                     const KnotRegistry& reg = KnotRegistry::builtin());

// nu(D_-(K,t)) over the window; values in {-1,0}, never increasing.
std::vector<DoubleEval> negative_double_profile(
    const KnotExprPtr& e, const NuEvaluator& nu, int t_lo, int t_hi,
    const KnotRegistry& reg = KnotRegistry::builtin());

// ---------------------------------------------------------------------------
// Connected-sum sandwich
// ---------------------------------------------------------------------------

struct SandwichReport {
  TnuResult t1, t2, t12;  // K1, K2, K1#K2
  TnuResult tm1, tm2;     // m(K1), m(K2)
  long long lower = 0;    // t1 + t2
  long long upper = 0;    // min(t1 - tm2, t2 - tm1)
  bool holds = false;
};

// Certifies t(K1) + t(K2) <= t(K1#K2) <= min(t(K1) - t(mK2),
// t(K2) - t(mK1)) with five searches; throws InequalityViolation when the
// sandwich fails.
SandwichReport verify_additivity_sandwich(
    const KnotExprPtr& e1, const KnotExprPtr& e2, const NuEvaluator& nu,
    const KnotRegistry& reg = KnotRegistry::builtin());

// ---------------------------------------------------------------------------
// Bounds ledger
// ---------------------------------------------------------------------------

using Bound = long long;
inline constexpr Bound kNegInf = std::numeric_limits<long long>::min() / 4;
inline constexpr Bound kPosInf = std::numeric_limits<long long>::max() / 4;
std::string bound_str(Bound b);  // "-inf" / "inf" / decimal

struct Interval {
  Bound lo = kNegInf;
  Bound hi = kPosInf;
};

struct BoundsLedger {
  struct Row {
    Interval iv;
    std::string provenance;
  };
  // invariant name -> canonical expression -> row
  std::map<std::string, std::map<std::string, Row>> rows;

  // Keys by canonical_expr(e); lo <= hi enforced (MalformedSyntax).
  void set(const std::string& invariant, const KnotExprPtr& e, Interval iv,
           std::string provenance);
  std::optional<Interval> lookup(const std::string& invariant,
                                 const KnotExprPtr& e) const;
};

// Tightest interval for the invariant on e derivable from ledger rows and
// the sandwich rules  lo(a#b) >= lo(a) + lo(b)  and  hi(a#b) <=
// min(hi(a) - lo(m(b)), hi(b) - lo(m(a))), with mirror-side lookups
// defaulting to unbounded.  A leaf of e with no row throws
// MissingLeafError; a direct row for a composite is intersected with the
// derived interval (crossed bounds throw InequalityViolation).
Interval propagate_bounds(const BoundsLedger& ledger, const KnotExprPtr& e,
                          const std::string& invariant);

// ---------------------------------------------------------------------------
// Derived reports
// ---------------------------------------------------------------------------

// For the n-fold connected sum of T(2,5): the tau threshold is exactly
// 4n - 1 by formula, while ledger propagation bounds the s threshold from
// below; the gap between the two grows linearly.
struct GapReport {
  int n = 0;
  long long t_tau_value = 0;  // 4n - 1
  Bound t_s_lower = 0;        // propagated lower bound
  Bound gap_lower = 0;        // t_s_lower - t_tau_value
  bool exceeds_n = false;     // gap_lower > n
};
GapReport stacked_gap_report(int n, const BoundsLedger& ledger);

// Residual of the measured threshold against the linear guess 3*nu - 1.
// Report-only: callers decide what to make of a nonzero residual.
struct LinearGuessReport {
  int nu = 0;
  int t = 0;
  long long residual = 0;  // t - (3*nu - 1)
  bool matches = false;
};
LinearGuessReport linear_guess_residual(int nu_value, int t_value);

}  // namespace knotcord
