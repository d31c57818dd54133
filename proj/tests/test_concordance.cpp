#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "knotcord/concordance.hpp"
#include "knotcord/errors.hpp"

using namespace knotcord;

namespace {

// The s-backed evaluator shared by every engine-driven case.
const NuEvaluator& nus() {
  static const NuEvaluator nu = make_nu_s_evaluator();
  return nu;
}

KnotExprPtr parse(const std::string& s) { return parse_knot_expr(s); }

// Fresh evaluation of nu on D_clasp(companion-of-e, t), bypassing any state
// the search kept, so certificates are checked against the ground truth.
int fresh_double_value(const KnotExprPtr& e, int t, ClaspSign clasp) {
  DoubleSpec spec;
  spec.companion = expr_diagram(e);
  spec.twists = t;
  spec.clasp = clasp;
  return nu_s(twisted_double(spec));
}

void check_certificate(const TnuResult& r) {
  CHECK(r.cert_at.t == r.t_star);
  CHECK(r.cert_at.value == 1);
  CHECK(r.cert_above.t == r.t_star + 1);
  CHECK(r.cert_above.value == 0);
  CHECK(fresh_double_value(r.knot, r.t_star, ClaspSign::Positive) == 1);
  CHECK(fresh_double_value(r.knot, r.t_star + 1, ClaspSign::Positive) == 0);
  CHECK(!r.log.empty());
  for (const DoubleEval& ev : r.log) {
    CHECK(ev.clasp == ClaspSign::Positive);
    CHECK(ev.value >= 0);
    CHECK(ev.value <= 1);
  }
}

// An intentionally broken "invariant" whose induced threshold is
// writhe(K) + 2: strictly superadditive, so the sandwich must fail.
// Monotone in t for each companion (the double's writhe falls as t grows),
// so the searches themselves succeed.
NuEvaluator writhe_step_evaluator() {
  NuEvaluator nu;
  nu.name = "writhe-step";
  nu.eval = [](const PlanarDiagram& d) { return writhe(d) >= -2 ? 1 : 0; };
  nu.additive = false;
  return nu;
}

}  // namespace

TEST_CASE("expression parsing and serialization") {
  CHECK(serialize_expr(parse("T(2,3)")) == "T(2,3)");
  CHECK(serialize_expr(parse("T(2,-3)")) == "T(2,-3)");
  CHECK(serialize_expr(parse("knot:fig8")) == "knot:fig8");
  CHECK(serialize_expr(parse("m(T(2,3))")) == "m(T(2,3))");
  CHECK(serialize_expr(parse("T(2,3)#T(2,5)")) == "T(2,3)#T(2,5)");
  CHECK(serialize_expr(parse(" T( 2 , 3 ) # m( knot:fig8 ) ")) ==
        "T(2,3)#m(knot:fig8)");
  CHECK(serialize_expr(parse("m(T(2,3)#knot:unknot)")) ==
        "m(T(2,3)#knot:unknot)");

  // # is left associative.
  KnotExprPtr e = parse("T(2,3)#T(2,5)#T(2,7)");
  REQUIRE(e->kind == KnotExpr::Kind::Sum);
  CHECK(e->b->kind == KnotExpr::Kind::Torus);
  CHECK(e->b->q == 7);
  REQUIRE(e->a->kind == KnotExpr::Kind::Sum);
  CHECK(e->a->a->q == 3);
  CHECK(e->a->b->q == 5);

  // Round trip through the serializer for a batch of parser outputs.
  for (const char* s :
       {"T(2,3)", "m(m(T(3,4)))", "knot:unknot#knot:trefoil",
        "m(T(2,3)#T(2,5))#knot:fig8", "T(10,-3)", "m(knot:a_b_1)"}) {
    KnotExprPtr once = parse(s);
    CHECK(serialize_expr(parse(serialize_expr(once))) == serialize_expr(once));
    CHECK(serialize_expr(once) == s);
  }
}

TEST_CASE("expression parse errors") {
  for (const char* s :
       {"", "T", "T(2)", "T(2,)", "T(,3)", "T(a,b)", "T(2,3", "T(2,3))",
        "m()", "m(T(2,3)", "#T(2,3)", "T(2,3)#", "T(2,3)##T(2,5)", "knot:",
        "knot", "knot:#", "x", "T(2,3)T(2,5)", "T(2,3) junk",
        "knot:name!", "m", "T(99999999999,3)"}) {
    CHECK_THROWS_AS(parse(s), MalformedSyntax);
  }
}

TEST_CASE("expression normalization") {
  CHECK(canonical_expr(parse("T(2,3)")) == "T(2,3)");
  CHECK(canonical_expr(parse("m(T(2,3))")) == "T(2,-3)");
  CHECK(canonical_expr(parse("m(m(T(2,3)))")) == "T(2,3)");
  CHECK(canonical_expr(parse("m(T(2,3)#knot:fig8)")) ==
        "T(2,-3)#m(knot:fig8)");
  CHECK(canonical_expr(parse("m(m(knot:fig8))")) == "knot:fig8");
  CHECK(canonical_expr(parse("m(T(2,3)#m(T(2,5)))")) == "T(2,-3)#T(2,5)");

  // Right-nested sums built through the API flatten to the left.
  KnotExprPtr right =
      sum_expr(torus_expr(2, 3), sum_expr(torus_expr(2, 5), torus_expr(2, 7)));
  CHECK(canonical_expr(right) == "T(2,3)#T(2,5)#T(2,7)");
  CHECK(canonical_expr(parse("T(2,3)#T(2,5)#T(2,7)")) ==
        canonical_expr(right));
}

TEST_CASE("expression diagrams") {
  CHECK(expr_diagram(parse("T(2,3)")) == torus_knot(2, 3));
  CHECK(expr_diagram(parse("T(3,-4)")) == torus_knot(3, -4));
  CHECK(expr_diagram(parse("m(T(2,3))")) == mirror(torus_knot(2, 3)));
  CHECK(expr_diagram(parse("knot:unknot")) == PlanarDiagram{});
  CHECK(expr_diagram(parse("knot:trefoil")) == torus_knot(2, 3));
  CHECK(expr_diagram(parse("T(2,3)#T(2,5)")) ==
        connected_sum(torus_knot(2, 3), torus_knot(2, 5)));
  CHECK_THROWS_AS(expr_diagram(parse("knot:nonesuch")), MissingLeafError);
  CHECK_THROWS_AS(expr_diagram(parse("T(2,4)")), NonCoprimeError);
  CHECK_THROWS_AS(expr_diagram(parse("T(1,3)")), MalformedSyntax);

  // A user registry extends and shadows nothing in the builtin one.
  KnotRegistry reg = KnotRegistry::builtin();
  reg.add("cinq", torus_knot(2, 5), 2);
  CHECK(expr_diagram(parse("knot:cinq"), reg) == torus_knot(2, 5));
  CHECK(tau_value(parse("knot:cinq"), reg) == 2);
}

TEST_CASE("tau values") {
  CHECK(tau_value(parse("knot:unknot")) == 0);
  CHECK(tau_value(parse("knot:trefoil")) == 1);
  CHECK(tau_value(parse("knot:fig8")) == 0);
  CHECK(tau_value(parse("T(2,3)")) == 1);
  CHECK(tau_value(parse("T(2,5)")) == 2);
  CHECK(tau_value(parse("T(3,4)")) == 3);
  CHECK(tau_value(parse("T(3,5)")) == 4);
  CHECK(tau_value(parse("T(4,5)")) == 6);
  CHECK(tau_value(parse("m(T(2,3))")) == -1);
  CHECK(tau_value(parse("T(2,-3)")) == -1);
  CHECK(tau_value(parse("T(2,3)#T(2,5)")) == 3);
  CHECK(tau_value(parse("T(2,3)#m(T(2,3))")) == 0);
  CHECK(tau_value(parse("m(T(2,3)#T(2,5))")) == -3);
  CHECK_THROWS_AS(tau_value(parse("knot:nonesuch")), UnknownTauError);
  CHECK_THROWS_AS(tau_value(parse("T(2,4)")), NonCoprimeError);
  CHECK_THROWS_AS(tau_value(parse("T(2,0)")), NonCoprimeError);
  CHECK_THROWS_AS(tau_value(parse("T(0,3)")), MalformedSyntax);

  KnotRegistry bare;
  bare.add("mystery", torus_knot(2, 7));  // diagram but no tau
  CHECK_THROWS_AS(tau_value(parse("knot:mystery"), bare), UnknownTauError);
}

TEST_CASE("tau threshold formula") {
  CHECK(t_tau(parse("knot:unknot")) == -1);
  for (int n = 1; n <= 10; ++n) {
    KnotExprPtr e = torus_expr(2, 2 * n + 1);
    CHECK(t_tau(e) == 2 * n - 1);
  }
  // n-fold sums of T(2,5), up to 100 summands, all instant.
  KnotExprPtr acc = torus_expr(2, 5);
  for (int n = 1; n <= 100; ++n) {
    CHECK(t_tau(acc) == 4 * n - 1);
    acc = sum_expr(acc, torus_expr(2, 5));
  }

  // The threshold is odd on any expression with known tau.
  std::mt19937 rng(11);
  std::vector<KnotExprPtr> pool = {
      torus_expr(2, 3),  torus_expr(2, -5), torus_expr(3, 4),
      named_expr("fig8"), named_expr("trefoil"), named_expr("unknot")};
  for (int i = 0; i < 50; ++i) {
    KnotExprPtr e = pool[rng() % pool.size()];
    for (int step = 0; step < 4; ++step) {
      if (rng() % 2)
        e = mirror_expr(e);
      else
        e = sum_expr(e, pool[rng() % pool.size()]);
    }
    int t = t_tau(e);
    CHECK(((t % 2) + 2) % 2 == 1);
  }
}

TEST_CASE("nu_s of small torus knots and sums") {
  CHECK(nu_s(expr_diagram(parse("knot:unknot"))) == 0);
  CHECK(nu_s(expr_diagram(parse("T(2,3)"))) == 1);
  CHECK(nu_s(expr_diagram(parse("T(2,5)"))) == 2);
  CHECK(nu_s(expr_diagram(parse("T(2,7)"))) == 3);
  CHECK(nu_s(expr_diagram(parse("T(3,4)"))) == 3);
  CHECK(nu_s(expr_diagram(parse("T(3,5)"))) == 4);
  CHECK(nu_s(expr_diagram(parse("m(T(2,3))"))) == -1);
  CHECK(nu_s(expr_diagram(parse("knot:fig8"))) == 0);
  CHECK(nu_s(expr_diagram(parse("T(2,3)#m(T(2,3))"))) == 0);
}

TEST_CASE("threshold search: unknot") {
  TnuResult r = t_nu_search(parse("knot:unknot"), nus());
  CHECK(r.t_star == -1);
  CHECK(r.invariant == "s");
  check_certificate(r);
  // Seed 2*nu(U) - 1 = -1 is evaluated first.
  REQUIRE(!r.log.empty());
  CHECK(r.log.front().t == -1);
  CHECK(r.warnings.empty());
}

TEST_CASE("threshold search: trefoil") {
  TnuResult r = t_nu_search(parse("T(2,3)"), nus());
  CHECK(r.t_star == 2);
  check_certificate(r);
  CHECK(r.log.front().t == 1);  // seed 2*nu - 1
}

TEST_CASE("threshold search: T(2,5)") {
  TnuResult r = t_nu_search(parse("T(2,5)"), nus());
  CHECK(r.t_star == 5);
  check_certificate(r);
  CHECK(r.log.front().t == 3);
}

TEST_CASE("threshold search: hints are advisory") {
  TBHints ok;
  ok.lower = 1;
  ok.upper = 2;
  TnuResult r = t_nu_search(parse("T(2,3)"), nus(), ok);
  CHECK(r.t_star == 2);
  CHECK(r.warnings.empty());

  TBHints wrong;
  wrong.lower = 3;  // claims the threshold is at least 3
  r = t_nu_search(parse("T(2,3)"), nus(), wrong);
  CHECK(r.t_star == 2);  // unchanged by the hint
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("hint lower bound 3") != std::string::npos);

  TBHints tight;
  tight.upper = 1;
  r = t_nu_search(parse("T(2,3)"), nus(), tight);
  CHECK(r.t_star == 2);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("upper bound 1") != std::string::npos);

  TBHints crossed;
  crossed.lower = 2;
  crossed.upper = 1;
  CHECK_THROWS_AS(t_nu_search(parse("T(2,3)"), nus(), crossed),
                  MalformedSyntax);
}

TEST_CASE("threshold search rejects broken evaluators") {
  NuEvaluator rising;
  rising.name = "rising";
  rising.eval = [](const PlanarDiagram& d) {
    // Increasing in t: the double's writhe is -2(t - w) + 2, so small
    // writhe means large t.  For unknot doubles this is 1 iff t >= 1.
    return writhe(d) <= 0 ? 1 : 0;
  };
  // A profile scans every t, so it must witness the 0-below-1 pattern.
  CHECK_THROWS_AS(step_profile(parse("knot:unknot"), rising, 0, 2),
                  MonotonicityViolation);
  // The search gallops away from the seed without ever seeing both sides
  // of the rising flip, so it fails by exhausting its step budget.
  CHECK_THROWS_AS(t_nu_search(parse("knot:unknot"), rising),
                  ResourceBudgetExceeded);

  NuEvaluator big;
  big.name = "big";
  big.eval = [](const PlanarDiagram&) { return 2; };
  CHECK_THROWS_AS(t_nu_search(parse("knot:unknot"), big),
                  MonotonicityViolation);

  NuEvaluator negative;
  negative.name = "negative";
  negative.eval = [](const PlanarDiagram&) { return -1; };
  CHECK_THROWS_AS(t_nu_search(parse("knot:unknot"), negative),
                  MonotonicityViolation);

  NuEvaluator ones;
  ones.name = "ones";
  ones.eval = [](const PlanarDiagram&) { return 1; };
  CHECK_THROWS_AS(t_nu_search(parse("knot:unknot"), ones),
                  ResourceBudgetExceeded);

  NuEvaluator zeros;
  zeros.name = "zeros";
  zeros.eval = [](const PlanarDiagram&) { return 0; };
  CHECK_THROWS_AS(t_nu_search(parse("knot:unknot"), zeros),
                  ResourceBudgetExceeded);
}

TEST_CASE("step profiles") {
  CHECK(step_profile(parse("T(2,3)"), nus(), 3, 1).empty());

  std::vector<DoubleEval> p = step_profile(parse("T(2,3)"), nus(), 0, 4);
  REQUIRE(p.size() == 5);
  std::vector<int> vals;
  for (const DoubleEval& ev : p) vals.push_back(ev.value);
  CHECK(vals == std::vector<int>{1, 1, 1, 0, 0});
  for (size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i].t == static_cast<int>(i));
    CHECK(p[i].clasp == ClaspSign::Positive);
  }

  p = step_profile(parse("knot:unknot"), nus(), -3, 1);
  vals.clear();
  for (const DoubleEval& ev : p) vals.push_back(ev.value);
  CHECK(vals == std::vector<int>{1, 1, 1, 0, 0});
}

TEST_CASE("negative clasp profiles and the mirror identity") {
  std::vector<DoubleEval> p =
      negative_double_profile(parse("knot:unknot"), nus(), -2, 2);
  REQUIRE(p.size() == 5);
  std::vector<int> vals;
  for (const DoubleEval& ev : p) {
    CHECK(ev.clasp == ClaspSign::Negative);
    vals.push_back(ev.value);
  }
  CHECK(vals == std::vector<int>{0, 0, 0, -1, -1});

  // m(D_+(K,t)) = D_-(mK,-t): the negative profile of the mirror over the
  // reflected window is the reversed, negated positive profile.
  for (const char* knot : {"knot:unknot", "T(2,3)"}) {
    int lo = 0, hi = 3;
    std::vector<DoubleEval> pos = step_profile(parse(knot), nus(), lo, hi);
    std::vector<DoubleEval> neg = negative_double_profile(
        mirror_expr(parse(knot)), nus(), -hi, -lo);
    REQUIRE(pos.size() == neg.size());
    for (size_t i = 0; i < pos.size(); ++i) {
      CHECK(neg[i].t == -pos[pos.size() - 1 - i].t);
      CHECK(neg[i].value == -pos[pos.size() - 1 - i].value);
    }
  }
}

TEST_CASE("connected-sum sandwich holds for unknot and trefoil pairs") {
  SandwichReport r =
      verify_additivity_sandwich(parse("knot:unknot"), parse("knot:unknot"),
                                 nus());
  CHECK(r.holds);
  CHECK(r.t1.t_star == -1);
  CHECK(r.t2.t_star == -1);
  CHECK(r.t12.t_star == -1);
  CHECK(r.lower == -2);
  check_certificate(r.t12);

  r = verify_additivity_sandwich(parse("T(2,3)"), parse("knot:unknot"), nus());
  CHECK(r.holds);
  CHECK(r.t1.t_star == 2);
  CHECK(r.t2.t_star == -1);
  CHECK(r.t12.t_star == 2);  // K # U = K
  check_certificate(r.t1);
  check_certificate(r.tm1);

  r = verify_additivity_sandwich(parse("T(2,3)"), parse("T(2,3)"), nus());
  CHECK(r.holds);
  CHECK(r.lower == 4);
  CHECK(r.t12.t_star >= 4);
  check_certificate(r.t12);
  check_certificate(r.tm2);
}

TEST_CASE("connected-sum sandwich rejects a superadditive step function") {
  CHECK_THROWS_AS(
      verify_additivity_sandwich(parse("knot:unknot"), parse("knot:unknot"),
                                 writhe_step_evaluator()),
      InequalityViolation);
}

TEST_CASE("bounds ledger storage") {
  BoundsLedger led;
  led.set("s", parse("T(2,5)"), Interval{5, 5}, "search certificate");
  auto iv = led.lookup("s", parse("T(2,5)"));
  REQUIRE(iv.has_value());
  CHECK(iv->lo == 5);
  CHECK(iv->hi == 5);
  // Keyed canonically: m(m(e)) is the same row.
  iv = led.lookup("s", parse("m(m(T(2,5)))"));
  REQUIRE(iv.has_value());
  CHECK(iv->lo == 5);
  CHECK(!led.lookup("s", parse("T(2,7)")).has_value());
  CHECK(!led.lookup("tau", parse("T(2,5)")).has_value());
  CHECK_THROWS_AS(led.set("s", parse("T(2,7)"), Interval{3, 2}, "bad"),
                  MalformedSyntax);
}

TEST_CASE("bounds propagation over sums") {
  BoundsLedger led;
  led.set("s", parse("T(2,5)"), Interval{5, 5}, "search certificate");

  Interval iv = propagate_bounds(led, parse("T(2,5)"), "s");
  CHECK(iv.lo == 5);
  CHECK(iv.hi == 5);

  // Sum of two copies: lower adds; upper is open without mirror rows.
  iv = propagate_bounds(led, parse("T(2,5)#T(2,5)"), "s");
  CHECK(iv.lo == 10);
  CHECK(iv.hi == kPosInf);

  CHECK_THROWS_AS(propagate_bounds(led, parse("T(2,7)"), "s"),
                  MissingLeafError);
  CHECK_THROWS_AS(propagate_bounds(led, parse("T(2,5)#T(2,7)"), "s"),
                  MissingLeafError);
  CHECK_THROWS_AS(propagate_bounds(led, parse("T(2,5)"), "tau"),
                  MissingLeafError);

  // Adding a mirror row tightens the upper bound and never loosens
  // anything (monotone propagation).
  led.set("s", parse("m(T(2,5))"), Interval{-8, -8}, "hypothetical");
  Interval tighter = propagate_bounds(led, parse("T(2,5)#T(2,5)"), "s");
  CHECK(tighter.lo == 10);
  CHECK(tighter.hi == 13);  // 5 - (-8)
  CHECK(tighter.lo >= iv.lo);
  CHECK(tighter.hi <= iv.hi);

  // A direct row for the composite intersects with the derived interval.
  led.set("s", parse("T(2,5)#T(2,5)"), Interval{11, 12}, "direct");
  Interval mixed = propagate_bounds(led, parse("T(2,5)#T(2,5)"), "s");
  CHECK(mixed.lo == 11);
  CHECK(mixed.hi == 12);

  // Crossed direct and derived bounds are an inconsistency.
  led.set("s", parse("T(2,5)#T(2,5)"), Interval{0, 9}, "contradiction");
  CHECK_THROWS_AS(propagate_bounds(led, parse("T(2,5)#T(2,5)"), "s"),
                  InequalityViolation);
}

TEST_CASE("stacked gap exceeds the stack size") {
  BoundsLedger led;
  led.set("s", parse("T(2,5)"), Interval{5, 5}, "search certificate");
  for (int n = 1; n <= 100; ++n) {
    GapReport g = stacked_gap_report(n, led);
    CHECK(g.n == n);
    CHECK(g.t_tau_value == 4 * n - 1);
    CHECK(g.t_s_lower == 5LL * n);
    CHECK(g.gap_lower == n + 1);
    CHECK(g.exceeds_n);
  }
  CHECK_THROWS_AS(stacked_gap_report(0, led), MalformedSyntax);
  CHECK_THROWS_AS(stacked_gap_report(-3, led), MalformedSyntax);

  BoundsLedger empty;
  CHECK_THROWS_AS(stacked_gap_report(1, empty), MissingLeafError);
}

TEST_CASE("linear guess residuals") {
  LinearGuessReport r = linear_guess_residual(1, 2);  // trefoil
  CHECK(r.residual == 0);
  CHECK(r.matches);
  r = linear_guess_residual(2, 5);  // T(2,5)
  CHECK(r.residual == 0);
  CHECK(r.matches);
  r = linear_guess_residual(0, -1);  // unknot
  CHECK(r.residual == 0);
  CHECK(r.matches);
  r = linear_guess_residual(0, 2);
  CHECK(r.residual == 3);
  CHECK(!r.matches);

  // Report-only on a non-torus knot: whatever the measured threshold is,
  // the report stays internally consistent.
  TnuResult t = t_nu_search(parse("knot:fig8"), nus());
  check_certificate(t);
  int nu = nu_s(expr_diagram(parse("knot:fig8")));
  CHECK(nu == 0);
  LinearGuessReport fig = linear_guess_residual(nu, t.t_star);
  CHECK(fig.residual == t.t_star - (3 * nu - 1));
  CHECK(fig.matches == (fig.residual == 0));
}
