#include "knotcord/concordance.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

#include "knotcord/errors.hpp"

namespace knotcord {

namespace {

KnotExprPtr make_node(KnotExpr e) {
  return std::make_shared<const KnotExpr>(std::move(e));
}

}  // namespace

KnotExprPtr torus_expr(int p, int q) {
  KnotExpr e;
  e.kind = KnotExpr::Kind::Torus;
  e.p = p;
  e.q = q;
  return make_node(std::move(e));
}

KnotExprPtr named_expr(std::string name) {
  KnotExpr e;
  e.kind = KnotExpr::Kind::Named;
  e.name = std::move(name);
  return make_node(std::move(e));
}

KnotExprPtr mirror_expr(KnotExprPtr sub) {
  KnotExpr e;
  e.kind = KnotExpr::Kind::Mirror;
  e.a = std::move(sub);
  return make_node(std::move(e));
}

KnotExprPtr sum_expr(KnotExprPtr a, KnotExprPtr b) {
  KnotExpr e;
  e.kind = KnotExpr::Kind::Sum;
  e.a = std::move(a);
  e.b = std::move(b);
  return make_node(std::move(e));
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : s_(text) {}

  KnotExprPtr parse() {
    KnotExprPtr e = expr();
    skip_ws();
    if (pos_ != s_.size())
      throw MalformedSyntax("trailing input after knot expression at offset " +
                            std::to_string(pos_));
    return e;
  }

 private:
  std::string_view s_;
  size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() &&
           std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw MalformedSyntax("knot expression: expected " + what + " at offset " +
                          std::to_string(pos_));
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!eat(c)) fail(std::string("'") + c + "'");
  }

  int integer() {
    skip_ws();
    size_t start = pos_;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
    size_t digits = pos_;
    while (pos_ < s_.size() &&
           std::isdigit(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    if (pos_ == digits) {
      pos_ = start;
      fail("integer");
    }
    long long v = 0;
    try {
      v = std::stoll(std::string(s_.substr(start, pos_ - start)));
    } catch (const std::out_of_range&) {
      fail("integer within range");
    }
    if (v > std::numeric_limits<int>::max() ||
        v < std::numeric_limits<int>::min())
      fail("integer within range");
    return static_cast<int>(v);
  }

  KnotExprPtr expr() {
    KnotExprPtr e = term();
    while (eat('#')) e = sum_expr(std::move(e), term());
    return e;
  }

  KnotExprPtr term() {
    skip_ws();
    if (pos_ >= s_.size()) fail("a knot term");
    // knot:<name>
    if (s_.compare(pos_, 4, "knot") == 0) {
      size_t after = pos_ + 4;
      size_t probe = after;
      while (probe < s_.size() &&
             std::isspace(static_cast<unsigned char>(s_[probe])))
        ++probe;
      if (probe < s_.size() && s_[probe] == ':') {
        pos_ = probe + 1;
        skip_ws();
        size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                s_[pos_] == '_'))
          ++pos_;
        if (pos_ == start) fail("knot name");
        return named_expr(std::string(s_.substr(start, pos_ - start)));
      }
    }
    char c = s_[pos_];
    if (c == 'T') {
      ++pos_;
      expect('(');
      int p = integer();
      expect(',');
      int q = integer();
      expect(')');
      return torus_expr(p, q);
    }
    if (c == 'm') {
      ++pos_;
      expect('(');
      KnotExprPtr inner = expr();
      expect(')');
      return mirror_expr(std::move(inner));
    }
    fail("'T(', 'm(' or 'knot:'");
  }
};

void serialize_into(const KnotExprPtr& e, std::string& out) {
  switch (e->kind) {
    case KnotExpr::Kind::Torus:
      out += "T(" + std::to_string(e->p) + "," + std::to_string(e->q) + ")";
      return;
    case KnotExpr::Kind::Named:
      out += "knot:" + e->name;
      return;
    case KnotExpr::Kind::Mirror:
      out += "m(";
      serialize_into(e->a, out);
      out += ")";
      return;
    case KnotExpr::Kind::Sum:
      serialize_into(e->a, out);
      out += "#";
      serialize_into(e->b, out);
      return;
  }
  throw InternalInvariantViolation("unhandled expression kind");
}

// Collects the summands of e in left-to-right order with mirrors resolved
// down to the leaves.
void normalized_summands(const KnotExprPtr& e, bool mirrored,
                         std::vector<KnotExprPtr>& out) {
  switch (e->kind) {
    case KnotExpr::Kind::Torus:
      out.push_back(mirrored ? torus_expr(e->p, -e->q) : e);
      return;
    case KnotExpr::Kind::Named:
      out.push_back(mirrored ? mirror_expr(e) : e);
      return;
    case KnotExpr::Kind::Mirror:
      normalized_summands(e->a, !mirrored, out);
      return;
    case KnotExpr::Kind::Sum:
      normalized_summands(e->a, mirrored, out);
      normalized_summands(e->b, mirrored, out);
      return;
  }
  throw InternalInvariantViolation("unhandled expression kind");
}

}  // namespace

KnotExprPtr parse_knot_expr(std::string_view text) {
  return ExprParser(text).parse();
}

std::string serialize_expr(const KnotExprPtr& e) {
  if (!e) throw MalformedSyntax("empty knot expression");
  std::string out;
  serialize_into(e, out);
  return out;
}

KnotExprPtr normalize_expr(const KnotExprPtr& e) {
  if (!e) throw MalformedSyntax("empty knot expression");
  std::vector<KnotExprPtr> parts;
  normalized_summands(e, false, parts);
  KnotExprPtr acc = parts.front();
  for (size_t i = 1; i < parts.size(); ++i)
    acc = sum_expr(std::move(acc), parts[i]);
  return acc;
}

std::string canonical_expr(const KnotExprPtr& e) {
  return serialize_expr(normalize_expr(e));
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

void KnotRegistry::add(const std::string& name, PlanarDiagram d,
                       std::optional<int> tau) {
  entries[name] = Entry{std::move(d), tau};
}

const KnotRegistry& KnotRegistry::builtin() {
  static const KnotRegistry reg = [] {
    KnotRegistry r;
    r.add("unknot", PlanarDiagram{}, 0);
    r.add("trefoil", torus_knot(2, 3), 1);
    r.add("fig8", parse_pd("PD[X[4,2,5,1],X[8,6,1,5],X[6,3,7,4],X[2,7,3,8]]"),
          0);
    return r;
  }();
  return reg;
}

PlanarDiagram expr_diagram(const KnotExprPtr& e, const KnotRegistry& reg) {
  if (!e) throw MalformedSyntax("empty knot expression");
  switch (e->kind) {
    case KnotExpr::Kind::Torus:
      return torus_knot(e->p, e->q);
    case KnotExpr::Kind::Named: {
      auto it = reg.entries.find(e->name);
      if (it == reg.entries.end())
        throw MissingLeafError("no registered diagram for knot:" + e->name);
      return it->second.diagram;
    }
    case KnotExpr::Kind::Mirror:
      return mirror(expr_diagram(e->a, reg));
    case KnotExpr::Kind::Sum:
      return connected_sum(expr_diagram(e->a, reg), expr_diagram(e->b, reg));
  }
  throw InternalInvariantViolation("unhandled expression kind");
}

// ---------------------------------------------------------------------------
// Evaluators
// ---------------------------------------------------------------------------

int nu_s(const PlanarDiagram& d, const EngineConfig& cfg) {
  SResult r = s_invariant(d, cfg);
  if (r.s % 2 != 0)
    throw InternalInvariantViolation("odd s-invariant " + std::to_string(r.s));
  return -r.s / 2;
}

NuEvaluator make_nu_s_evaluator(const EngineConfig& cfg) {
  NuEvaluator nu;
  nu.name = "s";
  nu.eval = [cfg](const PlanarDiagram& d) { return nu_s(d, cfg); };
  nu.additive = true;
  return nu;
}

int tau_value(const KnotExprPtr& e, const KnotRegistry& reg) {
  if (!e) throw MalformedSyntax("empty knot expression");
  switch (e->kind) {
    case KnotExpr::Kind::Torus: {
      int p = e->p, q = e->q;
      if (p < 2) throw MalformedSyntax("torus knot requires p >= 2");
      if (q == 0 || std::gcd(p, std::abs(q)) != 1)
        throw NonCoprimeError("T(" + std::to_string(p) + "," +
                              std::to_string(q) + ") is not a knot");
      int aq = std::abs(q);
      long long t = static_cast<long long>(p - 1) * (aq - 1) / 2;
      return static_cast<int>(q > 0 ? t : -t);
    }
    case KnotExpr::Kind::Named: {
      auto it = reg.entries.find(e->name);
      if (it == reg.entries.end() || !it->second.tau)
        throw UnknownTauError("no registered tau for knot:" + e->name);
      return *it->second.tau;
    }
    case KnotExpr::Kind::Mirror:
      return -tau_value(e->a, reg);
    case KnotExpr::Kind::Sum:
      return tau_value(e->a, reg) + tau_value(e->b, reg);
  }
  throw InternalInvariantViolation("unhandled expression kind");
}

int t_tau(const KnotExprPtr& e, const KnotRegistry& reg) {
  return 2 * tau_value(e, reg) - 1;
}

// ---------------------------------------------------------------------------
// Searches and profiles
// ---------------------------------------------------------------------------

namespace {

// Shared evaluation state for one search: memoizes per twist parameter,
// appends to the log, and rejects out-of-range or non-monotone values as
// soon as they become visible.
class DoubleProbe {
 public:
  DoubleProbe(PlanarDiagram companion, const NuEvaluator& nu, ClaspSign clasp,
              std::vector<DoubleEval>& log)
      : companion_(std::move(companion)), nu_(nu), clasp_(clasp), log_(log) {}

  int at(int t) {
    auto it = seen_.find(t);
    if (it != seen_.end()) return it->second;
    DoubleSpec spec;
    spec.companion = companion_;
    spec.twists = t;
    spec.clasp = clasp_;
    int v = nu_.eval(twisted_double(spec));
    log_.push_back(DoubleEval{t, clasp_, v});
    int lo_allowed = clasp_ == ClaspSign::Positive ? 0 : -1;
    int hi_allowed = clasp_ == ClaspSign::Positive ? 1 : 0;
    if (v < lo_allowed || v > hi_allowed)
      throw MonotonicityViolation(
          nu_.name + " on the twisted double at t=" + std::to_string(t) +
          " is " + std::to_string(v) + ", outside [" +
          std::to_string(lo_allowed) + "," + std::to_string(hi_allowed) + "]");
    seen_[t] = v;
    if (v == hi_allowed)
      max_high_ = std::max(max_high_, t);
    else
      min_low_ = std::min(min_low_, t);
    if (max_high_ >= min_low_)
      throw MonotonicityViolation(
          nu_.name + " step is not non-increasing: value " +
          std::to_string(hi_allowed) + " at t=" + std::to_string(max_high_) +
          " but " + std::to_string(lo_allowed) + " at t=" +
          std::to_string(min_low_));
    return v;
  }

 private:
  PlanarDiagram companion_;
  const NuEvaluator& nu_;
  ClaspSign clasp_;
  std::vector<DoubleEval>& log_;
  std::map<int, int> seen_;
  int max_high_ = std::numeric_limits<int>::min();  // largest t at high value
  int min_low_ = std::numeric_limits<int>::max();   // smallest t at low value
};

constexpr int kMaxGallopStep = 1 << 20;

}  // namespace

TnuResult t_nu_search(const KnotExprPtr& e, const NuEvaluator& nu,
                      const TBHints& hints, const KnotRegistry& reg) {
  if (hints.lower && hints.upper && *hints.lower > *hints.upper)
    throw MalformedSyntax("threshold hints out of order: lower " +
                          std::to_string(*hints.lower) + " > upper " +
                          std::to_string(*hints.upper));
  PlanarDiagram companion = expr_diagram(e, reg);

  TnuResult res;
  res.knot = e;
  res.invariant = nu.name;

  // Seed: the cheap closed-form style guess from nu of the companion, or a
  // diagram-combinatorial fallback when that evaluation blows its budget.
  int t0;
  try {
    t0 = 2 * nu.eval(companion) - 1;
  } catch (const ResourceBudgetExceeded&) {
    t0 = writhe(companion) - seifert_circle_count(companion);
    res.warnings.push_back(
        "seed fell back to writhe - seifert_circle_count = " +
        std::to_string(t0));
  }

  DoubleProbe probe(std::move(companion), nu, ClaspSign::Positive, res.log);

  // Gallop outward with doubling steps until a 1 and a 0 are both on
  // record, then binary-search the flip between the tightest witnesses.
  int lo = 0, hi = 0;  // lo: witnessed 1; hi: witnessed 0
  if (probe.at(t0) == 1) {
    lo = t0;
    int step = 1;
    for (;; step *= 2) {
      if (step > kMaxGallopStep)
        throw ResourceBudgetExceeded("no 0 value found up to t = " +
                                     std::to_string(t0 + step));
      int t = t0 + step;
      if (probe.at(t) == 0) {
        hi = t;
        break;
      }
      lo = t;
    }
  } else {
    hi = t0;
    int step = 1;
    for (;; step *= 2) {
      if (step > kMaxGallopStep)
        throw ResourceBudgetExceeded("no 1 value found down to t = " +
                                     std::to_string(t0 - step));
      int t = t0 - step;
      if (probe.at(t) == 1) {
        lo = t;
        break;
      }
      hi = t;
    }
  }
  while (hi - lo > 1) {
    int mid = lo + (hi - lo) / 2;
    if (probe.at(mid) == 1)
      lo = mid;
    else
      hi = mid;
  }

  res.t_star = lo;
  res.cert_at = DoubleEval{lo, ClaspSign::Positive, probe.at(lo)};
  res.cert_above = DoubleEval{lo + 1, ClaspSign::Positive, probe.at(lo + 1)};

  if (hints.lower && res.t_star < *hints.lower)
    res.warnings.push_back("hint lower bound " + std::to_string(*hints.lower) +
                           " exceeds computed threshold " +
                           std::to_string(res.t_star));
  if (hints.upper && res.t_star > *hints.upper)
    res.warnings.push_back("computed threshold " + std::to_string(res.t_star) +
                           " exceeds hint upper bound " +
                           std::to_string(*hints.upper));
  return res;
}

namespace {

std::vector<DoubleEval> profile(const KnotExprPtr& e, const NuEvaluator& nu,
                                int t_lo, int t_hi, ClaspSign clasp,
                                const KnotRegistry& reg) {
  std::vector<DoubleEval> out;
  if (t_lo > t_hi) return out;
  std::vector<DoubleEval> log;
  DoubleProbe probe(expr_diagram(e, reg), nu, clasp, log);
  for (int t = t_lo; t <= t_hi; ++t)
    out.push_back(DoubleEval{t, clasp, probe.at(t)});
  return out;
}

}  // namespace

std::vector<DoubleEval> step_profile(const KnotExprPtr& e,
                                     const NuEvaluator& nu, int t_lo, int t_hi,
                                     const KnotRegistry& reg) {
  return profile(e, nu, t_lo, t_hi, ClaspSign::Positive, reg);
}

std::vector<DoubleEval> negative_double_profile(const KnotExprPtr& e,
                                                const NuEvaluator& nu,
                                                int t_lo, int t_hi,
                                                const KnotRegistry& reg) {
  return profile(e, nu, t_lo, t_hi, ClaspSign::Negative, reg);
}

// ---------------------------------------------------------------------------
// Connected-sum sandwich
// ---------------------------------------------------------------------------

SandwichReport verify_additivity_sandwich(const KnotExprPtr& e1,
                                          const KnotExprPtr& e2,
                                          const NuEvaluator& nu,
                                          const KnotRegistry& reg) {
  SandwichReport r;
  r.t1 = t_nu_search(e1, nu, {}, reg);
  r.t2 = t_nu_search(e2, nu, {}, reg);
  r.t12 = t_nu_search(sum_expr(e1, e2), nu, {}, reg);
  r.tm1 = t_nu_search(mirror_expr(e1), nu, {}, reg);
  r.tm2 = t_nu_search(mirror_expr(e2), nu, {}, reg);
  r.lower = static_cast<long long>(r.t1.t_star) + r.t2.t_star;
  r.upper = std::min(static_cast<long long>(r.t1.t_star) - r.tm2.t_star,
                     static_cast<long long>(r.t2.t_star) - r.tm1.t_star);
  r.holds = r.lower <= r.t12.t_star && r.t12.t_star <= r.upper;
  if (!r.holds)
    throw InequalityViolation(
        "connected-sum sandwich failed: " + std::to_string(r.lower) +
        " <= " + std::to_string(r.t12.t_star) + " <= " +
        std::to_string(r.upper) + " does not hold (t1=" +
        std::to_string(r.t1.t_star) + ", t2=" + std::to_string(r.t2.t_star) +
        ", t(m1)=" + std::to_string(r.tm1.t_star) + ", t(m2)=" +
        std::to_string(r.tm2.t_star) + ")");
  return r;
}

// ---------------------------------------------------------------------------
// Bounds ledger
// ---------------------------------------------------------------------------

std::string bound_str(Bound b) {
  if (b <= kNegInf) return "-inf";
  if (b >= kPosInf) return "inf";
  return std::to_string(b);
}

namespace {

// Saturating arithmetic on extended integers; infinities win, and the
// checks are ordered so mixed cases resolve toward the looser bound.
Bound sat_add_lo(Bound x, Bound y) {
  if (x <= kNegInf || y <= kNegInf) return kNegInf;
  if (x >= kPosInf || y >= kPosInf) return kPosInf;
  return x + y;
}

Bound sat_sub_hi(Bound x, Bound y) {
  if (x >= kPosInf || y <= kNegInf) return kPosInf;
  if (x <= kNegInf || y >= kPosInf) return kNegInf;
  return x - y;
}

// Recursive interval derivation, memoized on the canonical form so deep
// sums (and their mirror-side lookups) stay linear.  In soft mode -- used
// for the auxiliary mirror lookups -- a missing leaf means "no
// information" instead of an error.
class Propagator {
 public:
  explicit Propagator(const std::map<std::string, BoundsLedger::Row>& rows)
      : rows_(rows) {}

  Interval run(const KnotExprPtr& e, bool soft) {
    KnotExprPtr n = normalize_expr(e);
    std::string key = serialize_expr(n);
    auto memo = memo_.find({key, soft});
    if (memo != memo_.end()) return memo->second;

    std::optional<Interval> direct;
    auto it = rows_.find(key);
    if (it != rows_.end()) direct = it->second.iv;

    std::optional<Interval> derived;
    if (n->kind == KnotExpr::Kind::Sum) {
      Interval a = run(n->a, soft);
      Interval b = run(n->b, soft);
      Interval ma = run(mirror_expr(n->a), true);
      Interval mb = run(mirror_expr(n->b), true);
      Interval d;
      d.lo = sat_add_lo(a.lo, b.lo);
      d.hi = std::min(sat_sub_hi(a.hi, mb.lo), sat_sub_hi(b.hi, ma.lo));
      derived = d;
    } else if (!direct) {
      if (!soft)
        throw MissingLeafError("no ledger entry for " + key);
      Interval unbounded{};
      memo_[{key, soft}] = unbounded;
      return unbounded;
    }

    Interval out = derived ? *derived : *direct;
    if (derived && direct) {
      out.lo = std::max(out.lo, direct->lo);
      out.hi = std::min(out.hi, direct->hi);
    }
    if (out.lo > out.hi)
      throw InequalityViolation("ledger bounds for " + key +
                                " are inconsistent: lo " + bound_str(out.lo) +
                                " > hi " + bound_str(out.hi));
    memo_[{key, soft}] = out;
    return out;
  }

 private:
  const std::map<std::string, BoundsLedger::Row>& rows_;
  std::map<std::pair<std::string, bool>, Interval> memo_;
};

}  // namespace

void BoundsLedger::set(const std::string& invariant, const KnotExprPtr& e,
                       Interval iv, std::string provenance) {
  if (iv.lo > iv.hi)
    throw MalformedSyntax("interval lo " + bound_str(iv.lo) + " > hi " +
                          bound_str(iv.hi));
  rows[invariant][canonical_expr(e)] = Row{iv, std::move(provenance)};
}

std::optional<Interval> BoundsLedger::lookup(const std::string& invariant,
                                             const KnotExprPtr& e) const {
  auto inv = rows.find(invariant);
  if (inv == rows.end()) return std::nullopt;
  auto it = inv->second.find(canonical_expr(e));
  if (it == inv->second.end()) return std::nullopt;
  return it->second.iv;
}

Interval propagate_bounds(const BoundsLedger& ledger, const KnotExprPtr& e,
                          const std::string& invariant) {
  auto inv = ledger.rows.find(invariant);
  static const std::map<std::string, BoundsLedger::Row> kEmpty;
  const auto& rows = inv == ledger.rows.end() ? kEmpty : inv->second;
  return Propagator(rows).run(e, false);
}

// ---------------------------------------------------------------------------
// Derived reports
// ---------------------------------------------------------------------------

GapReport stacked_gap_report(int n, const BoundsLedger& ledger) {
  if (n < 1)
    throw MalformedSyntax("stack size must be >= 1, got " + std::to_string(n));
  KnotExprPtr e = torus_expr(2, 5);
  for (int i = 1; i < n; ++i) e = sum_expr(std::move(e), torus_expr(2, 5));

  GapReport r;
  r.n = n;
  r.t_tau_value = t_tau(e);
  Interval iv = propagate_bounds(ledger, e, "s");
  r.t_s_lower = iv.lo;
  r.gap_lower = iv.lo <= kNegInf ? kNegInf : iv.lo - r.t_tau_value;
  r.exceeds_n = r.gap_lower > n;
  return r;
}

LinearGuessReport linear_guess_residual(int nu_value, int t_value) {
  LinearGuessReport r;
  r.nu = nu_value;
  r.t = t_value;
  r.residual = static_cast<long long>(t_value) -
               (3LL * nu_value - 1);
  r.matches = r.residual == 0;
  return r;
}

}  // namespace knotcord
