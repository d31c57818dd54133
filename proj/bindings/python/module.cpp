// Python bindings for the knot-concordance toolkit.  Diagrams travel as PD
// strings and expressions as their text grammar, so the module surface stays
// a thin, stable layer over the C++ core; structured results come back as
// plain dicts, lists, and tuples.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "knotcord/cache.hpp"
#include "knotcord/cli.hpp"
#include "knotcord/concordance.hpp"
#include "knotcord/errors.hpp"

namespace py = pybind11;
using namespace knotcord;

namespace {

EngineConfig engine_for(const std::string& field) {
  RunConfig rc;
  rc.field = field;
  rc.validate();
  return rc.engine();
}

py::dict eval_dict(const DoubleEval& e) {
  py::dict d;
  d["t"] = e.t;
  d["clasp"] = e.clasp == ClaspSign::Positive ? "+" : "-";
  d["value"] = e.value;
  return d;
}

py::dict result_dict(const TnuResult& r) {
  py::dict d;
  d["knot"] = serialize_expr(r.knot);
  d["invariant"] = r.invariant;
  d["t"] = r.t_star;
  d["cert_at"] = eval_dict(r.cert_at);
  d["cert_above"] = eval_dict(r.cert_above);
  py::list log;
  for (const DoubleEval& e : r.log) log.append(eval_dict(e));
  d["log"] = log;
  d["warnings"] = r.warnings;
  return d;
}

py::list profile_list(const std::vector<DoubleEval>& p) {
  py::list out;
  for (const DoubleEval& e : p) out.append(py::make_tuple(e.t, e.value));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "Knot concordance toolkit: PD-code diagrams, an exact homology engine "
      "for the s-invariant, and twisted-double threshold searches.";

  py::register_exception<MalformedSyntax>(m, "MalformedSyntax",
                                          PyExc_ValueError);
  py::register_exception<ArcMultiplicityError>(m, "ArcMultiplicityError",
                                               PyExc_ValueError);
  py::register_exception<MultiComponentError>(m, "MultiComponentError",
                                              PyExc_ValueError);
  py::register_exception<NonCoprimeError>(m, "NonCoprimeError",
                                          PyExc_ValueError);
  py::register_exception<ResourceBudgetExceeded>(m, "ResourceBudgetExceeded",
                                                 PyExc_RuntimeError);
  py::register_exception<MonotonicityViolation>(m, "MonotonicityViolation",
                                                PyExc_RuntimeError);
  py::register_exception<InequalityViolation>(m, "InequalityViolation",
                                              PyExc_RuntimeError);
  py::register_exception<UnknownTauError>(m, "UnknownTauError",
                                          PyExc_LookupError);
  py::register_exception<MissingLeafError>(m, "MissingLeafError",
                                           PyExc_LookupError);

  m.attr("ENGINE_VERSION") = kEngineVersion;

  // ---- diagrams (PD strings in, PD strings out) ----
  m.def(
      "pd_canonical",
      [](const std::string& pd) { return canonical_pd(parse_pd(pd)); },
      py::arg("pd"),
      "Canonical form of a PD string; equal strings mean equal rotations.");
  m.def(
      "pd_mirror",
      [](const std::string& pd) { return serialize_pd(mirror(parse_pd(pd))); },
      py::arg("pd"), "Mirror image, crossing by crossing.");
  m.def(
      "pd_reverse",
      [](const std::string& pd) {
        return serialize_pd(reverse_orientation(parse_pd(pd)));
      },
      py::arg("pd"), "Reverse the strand orientation.");
  m.def(
      "pd_connected_sum",
      [](const std::string& a, const std::string& b) {
        return serialize_pd(connected_sum(parse_pd(a), parse_pd(b)));
      },
      py::arg("a"), py::arg("b"), "Connected sum of two diagrams.");
  m.def(
      "writhe", [](const std::string& pd) { return writhe(parse_pd(pd)); },
      py::arg("pd"));
  m.def(
      "seifert_circle_count",
      [](const std::string& pd) {
        return seifert_circle_count(parse_pd(pd));
      },
      py::arg("pd"));
  m.def(
      "crossing_count",
      [](const std::string& pd) {
        return static_cast<int>(parse_pd(pd).crossings.size());
      },
      py::arg("pd"));
  m.def(
      "torus_knot",
      [](int p, int q) { return serialize_pd(torus_knot(p, q)); },
      py::arg("p"), py::arg("q"),
      "Standard braid-closure diagram of the (p,q) torus knot.");
  m.def(
      "twisted_double",
      [](const std::string& companion, int twists, bool positive_clasp) {
        DoubleSpec spec;
        spec.companion = parse_pd(companion);
        spec.twists = twists;
        spec.clasp =
            positive_clasp ? ClaspSign::Positive : ClaspSign::Negative;
        return serialize_pd(twisted_double(spec));
      },
      py::arg("companion"), py::arg("twists"),
      py::arg("positive_clasp") = true,
      "t-twisted double of the companion with the chosen clasp sign.");

  // ---- homology engine ----
  m.def(
      "s_invariant",
      [](const std::string& pd, const std::string& field) {
        return s_invariant(parse_pd(pd), engine_for(field)).s;
      },
      py::arg("pd"), py::arg("field") = "Q",
      py::call_guard<py::gil_scoped_release>(),
      "Concordance s-invariant over the field descriptor 'Q' or 'Fp:<p>'.");
  m.def(
      "nu_s",
      [](const std::string& pd, const std::string& field) {
        return nu_s(parse_pd(pd), engine_for(field));
      },
      py::arg("pd"), py::arg("field") = "Q",
      py::call_guard<py::gil_scoped_release>(), "-s/2, as an integer.");
  m.def(
      "kh_table",
      [](const std::string& pd, const std::string& field) {
        KhTable t = kh_homology(parse_pd(pd), engine_for(field));
        std::map<std::pair<int, int>, std::uint64_t> out(t.dim.begin(),
                                                         t.dim.end());
        return out;
      },
      py::arg("pd"), py::arg("field") = "Q",
      py::call_guard<py::gil_scoped_release>(),
      "Bigraded homology ranks as {(i, q): dim}.");
  m.def(
      "jones_polynomial",
      [](const std::string& pd) {
        return jones_polynomial(parse_pd(pd)).str();
      },
      py::arg("pd"), py::call_guard<py::gil_scoped_release>(),
      "Unreduced Jones polynomial, lowest exponent first.");

  // ---- expressions ----
  m.def(
      "canonical_expr",
      [](const std::string& text) {
        return canonical_expr(parse_knot_expr(text));
      },
      py::arg("expr"),
      "Normal form: mirrors pushed to the leaves, sums left-associated.");
  m.def(
      "expr_pd",
      [](const std::string& text) {
        return serialize_pd(expr_diagram(parse_knot_expr(text)));
      },
      py::arg("expr"), "Build the diagram an expression describes.");
  m.def(
      "tau",
      [](const std::string& text) {
        return tau_value(parse_knot_expr(text));
      },
      py::arg("expr"),
      "tau from the torus-knot formula, mirror negation, and additivity.");
  m.def(
      "t_tau",
      [](const std::string& text) { return t_tau(parse_knot_expr(text)); },
      py::arg("expr"), "The tau-derived threshold 2*tau - 1.");
  m.def(
      "t_nu_search",
      [](const std::string& text, const std::string& field,
         std::optional<int> lower, std::optional<int> upper) {
        TBHints hints;
        hints.lower = lower;
        hints.upper = upper;
        TnuResult r = t_nu_search(parse_knot_expr(text),
                                  make_nu_s_evaluator(engine_for(field)),
                                  hints);
        return result_dict(r);
      },
      py::arg("expr"), py::arg("field") = "Q",
      py::arg("lower") = std::nullopt, py::arg("upper") = std::nullopt,
      "Certified largest t with nu(D+(K,t)) = 1, with the evaluation log.");
  m.def(
      "step_profile",
      [](const std::string& text, int lo, int hi, const std::string& field) {
        return profile_list(step_profile(
            parse_knot_expr(text), make_nu_s_evaluator(engine_for(field)),
            lo, hi));
      },
      py::arg("expr"), py::arg("lo"), py::arg("hi"), py::arg("field") = "Q",
      "[(t, nu(D+(K,t)))] over the window.");
  m.def(
      "negative_double_profile",
      [](const std::string& text, int lo, int hi, const std::string& field) {
        return profile_list(negative_double_profile(
            parse_knot_expr(text), make_nu_s_evaluator(engine_for(field)),
            lo, hi));
      },
      py::arg("expr"), py::arg("lo"), py::arg("hi"), py::arg("field") = "Q",
      "[(t, nu(D-(K,t)))] over the window.");
  m.def(
      "verify_sandwich",
      [](const std::string& e1, const std::string& e2,
         const std::string& field) {
        SandwichReport r = verify_additivity_sandwich(
            parse_knot_expr(e1), parse_knot_expr(e2),
            make_nu_s_evaluator(engine_for(field)));
        py::dict d;
        d["t1"] = r.t1.t_star;
        d["t2"] = r.t2.t_star;
        d["t12"] = r.t12.t_star;
        d["tm1"] = r.tm1.t_star;
        d["tm2"] = r.tm2.t_star;
        d["lower"] = r.lower;
        d["upper"] = r.upper;
        d["holds"] = r.holds;
        return d;
      },
      py::arg("expr1"), py::arg("expr2"), py::arg("field") = "Q",
      "Five searches certifying the connected-sum threshold sandwich.");
  m.def(
      "stacked_gap",
      [](int n, int t25) {
        BoundsLedger led;
        led.set("s", torus_expr(2, 5), Interval{t25, t25},
                "caller-supplied threshold");
        GapReport g = stacked_gap_report(n, led);
        py::dict d;
        d["n"] = g.n;
        d["t_tau"] = g.t_tau_value;
        d["t_s_lower"] = g.t_s_lower;
        d["gap_lower"] = g.gap_lower;
        d["exceeds_n"] = g.exceeds_n;
        return d;
      },
      py::arg("n"), py::arg("t25"),
      "Gap between the s-side and tau-side thresholds of the n-fold "
      "T(2,5) connected sum, from the single threshold t25.");
  m.def(
      "linear_guess_residual",
      [](int nu, int t) { return linear_guess_residual(nu, t).residual; },
      py::arg("nu"), py::arg("t"), "t - (3*nu - 1).");

  // ---- command-line interface, callable in process ----
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"),
      "Run a CLI invocation; returns (exit_code, stdout, stderr).");
}
