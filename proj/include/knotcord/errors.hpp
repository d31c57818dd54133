#pragma once
#include <stdexcept>
#include <string>

namespace knotcord {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input text does not match the PD / expression grammar, or describes an
// internally inconsistent diagram.
struct MalformedSyntax : Error { using Error::Error; };
// Some arc label does not appear exactly twice.
struct ArcMultiplicityError : Error { using Error::Error; };
// Arc labels do not describe a single closed strand (input is a link).
struct MultiComponentError : Error { using Error::Error; };
// torus_knot(p,q) with gcd(p,q) != 1 would be a link.
struct NonCoprimeError : Error { using Error::Error; };
// Entry-count or wall-clock budget exhausted during a homology run.
struct ResourceBudgetExceeded : Error { using Error::Error; };
// A self-check inside the engine failed; indicates a bug, not bad input.
struct InternalInvariantViolation : Error { using Error::Error; };
// A step function came out non-monotone during a t-search.
struct MonotonicityViolation : Error { using Error::Error; };
// A verified inequality between computed values failed.
struct InequalityViolation : Error { using Error::Error; };
// tau requested for a knot with no formula and no registered value.
struct UnknownTauError : Error { using Error::Error; };
// Bounds propagation hit an expression leaf with no ledger entry.
struct MissingLeafError : Error { using Error::Error; };
// A cache file failed its self-check; callers ignore it and recompute.
struct CorruptCacheEntry : Error { using Error::Error; };

}  // namespace knotcord
