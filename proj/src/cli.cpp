#include "knotcord/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>

#include "knotcord/cache.hpp"
#include "knotcord/concordance.hpp"
#include "knotcord/errors.hpp"

namespace knotcord {

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

std::string RunConfig::field_descriptor() const {
  if (field == "Q") return "Q";
  if (field.rfind("Fp:", 0) == 0) {
    const std::string digits = field.substr(3);
    if (!digits.empty() &&
        digits.find_first_not_of("0123456789") == std::string::npos)
      return "Fp:" + std::to_string(std::stoull(digits));
  }
  throw MalformedSyntax("--field must be Q or Fp:<prime>, got '" + field +
                        "'");
}

void RunConfig::validate() const {
  if (budget_entries == 0)
    throw MalformedSyntax("--budget-entries must be positive");
  if (budget_secs < 0)
    throw MalformedSyntax("--budget-secs must be positive");
  if (jobs < 1) throw MalformedSyntax("--jobs must be >= 1");
  field_descriptor();
}

EngineConfig RunConfig::engine() const {
  EngineConfig e;
  const std::string desc = field_descriptor();
  if (desc == "Q") {
    e.field = FieldKind::Rational;
  } else {
    e.field = FieldKind::Prime;
    unsigned long long p = std::stoull(desc.substr(3));
    if (p > 0x7fffffffULL)
      throw MalformedSyntax("prime modulus " + desc.substr(3) +
                            " out of range");
    e.prime = static_cast<std::uint32_t>(p);
  }
  e.max_terms = budget_entries;
  e.max_seconds = budget_secs;
  e.verbosity = verbose ? 1 : 0;
  return e;
}

namespace {

// ---------------------------------------------------------------------------
// Shared command context and helpers
// ---------------------------------------------------------------------------

struct Ctx {
  RunConfig cfg;
  CacheStore cache;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

class Timer {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ =
      std::chrono::steady_clock::now();
};

PlanarDiagram input_diagram(const std::string& text) {
  size_t i = text.find_first_not_of(" \t\r\n");
  if (i != std::string::npos && text.compare(i, 3, "PD[") == 0)
    return parse_pd(text);
  return expr_diagram(parse_knot_expr(text));
}

// s of a diagram through the cache; the unit every search and subcommand
// shares, so a threshold search warms the same entries `s` reads.
int cached_s(Ctx& c, const PlanarDiagram& d) {
  const std::string key =
      cache_key("s", c.cfg.field_descriptor(), canonical_pd(d));
  if (auto hit = c.cache.get(key, c.err)) {
    try {
      size_t used = 0;
      int v = std::stoi(hit->value, &used);
      if (used == hit->value.size()) return v;
    } catch (const std::exception&) {
    }
    *c.err << "warning: unreadable cached value for " << key
           << "; recomputing\n";
  }
  Timer t;
  SResult r = s_invariant(d, c.cfg.engine());
  c.cache.put(key, std::to_string(r.s), t.ms());
  return r.s;
}

NuEvaluator cached_nu_s(Ctx& c) {
  NuEvaluator nu;
  nu.name = "s";
  nu.eval = [&c](const PlanarDiagram& d) {
    int s = cached_s(c, d);
    if (s % 2 != 0)
      throw InternalInvariantViolation("odd s-invariant " +
                                       std::to_string(s));
    return -s / 2;
  };
  nu.additive = true;
  return nu;
}

std::string clasp_char(ClaspSign c) {
  return c == ClaspSign::Positive ? "+" : "-";
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_s(Ctx& c, const std::string& input) {
  Timer t;
  PlanarDiagram d = input_diagram(input);
  int s = cached_s(c, d);
  if (s % 2 != 0)
    throw InternalInvariantViolation("odd s-invariant " + std::to_string(s));
  *c.out << "s = " << s << "\n";
  *c.out << "nu_s = " << -s / 2 << "\n";
  *c.err << "wall_ms " << t.ms() << "\n";
  return 0;
}

std::string kh_cache_value(const KhTable& t) {
  std::ostringstream os;
  for (const auto& [k, v] : t.dim)
    os << k.first << " " << k.second << " " << v << "\n";
  return os.str();
}

std::optional<KhTable> kh_from_cache_value(const std::string& v) {
  KhTable t;
  std::istringstream in(v);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    int i = 0, q = 0;
    std::uint64_t dim = 0;
    if (!(row >> i >> q >> dim)) return std::nullopt;
    std::string rest;
    if (row >> rest) return std::nullopt;
    t.dim[{i, q}] += dim;
  }
  return t;
}

int cmd_kh(Ctx& c, const std::string& input, bool with_jones) {
  Timer t;
  PlanarDiagram d = input_diagram(input);
  const std::string key =
      cache_key("kh", c.cfg.field_descriptor(), canonical_pd(d));
  std::optional<KhTable> table;
  if (auto hit = c.cache.get(key, c.err)) {
    table = kh_from_cache_value(hit->value);
    if (!table)
      *c.err << "warning: unreadable cached value for " << key
             << "; recomputing\n";
  }
  if (!table) {
    Timer tc;
    table = kh_homology(d, c.cfg.engine());
    c.cache.put(key, kh_cache_value(*table), tc.ms());
  }
  *c.out << table->str();
  *c.out << "euler = " << table->graded_euler().str() << "\n";
  if (with_jones) *c.out << "jones = " << jones_polynomial(d).str() << "\n";
  *c.err << "wall_ms " << t.ms() << "\n";
  return 0;
}

int cmd_tnu(Ctx& c, const std::string& input, const std::string& inv,
            const TBHints& hints) {
  Timer t;
  KnotExprPtr e = parse_knot_expr(input);
  *c.out << "knot = " << serialize_expr(e) << "\n";
  *c.out << "invariant = " << inv << "\n";
  if (inv == "tau") {
    *c.out << "t = " << t_tau(e) << "\n";
    *c.err << "wall_ms " << t.ms() << "\n";
    return 0;
  }
  NuEvaluator nu = cached_nu_s(c);
  TnuResult r = t_nu_search(e, nu, hints);
  *c.out << "t = " << r.t_star << "\n";
  *c.out << "certificate: nu(D+(K," << r.t_star << ")) = 1, nu(D+(K,"
         << r.t_star + 1 << ")) = 0\n";
  *c.out << "log:\n";
  for (const DoubleEval& ev : r.log)
    *c.out << "  t=" << ev.t << " clasp=" << clasp_char(ev.clasp)
           << " value=" << ev.value << "\n";
  for (const std::string& w : r.warnings) *c.err << "warning: " << w << "\n";
  *c.err << "wall_ms " << t.ms() << "\n";
  return 0;
}

int cmd_profile(Ctx& c, const std::string& input, int lo, int hi,
                bool negative) {
  Timer t;
  KnotExprPtr e = parse_knot_expr(input);
  NuEvaluator nu = cached_nu_s(c);
  std::vector<DoubleEval> rows = negative
                                     ? negative_double_profile(e, nu, lo, hi)
                                     : step_profile(e, nu, lo, hi);
  *c.out << "knot = " << serialize_expr(e) << "\n";
  *c.out << "invariant = s\n";
  *c.out << "clasp = " << (negative ? "-" : "+") << "\n";
  *c.out << "profile:\n";
  for (const DoubleEval& ev : rows)
    *c.out << "  t=" << ev.t << " value=" << ev.value << "\n";
  *c.err << "wall_ms " << t.ms() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// verify: structured reports with a machine-readable RESULT footer
// ---------------------------------------------------------------------------

void emit_report(Ctx& c, const std::string& text,
                 const std::string& out_file) {
  *c.out << text;
  if (!out_file.empty()) {
    std::ofstream f(out_file, std::ios::trunc);
    f << text;
    if (!f)
      *c.err << "warning: could not write report file " << out_file << "\n";
  }
}

int verify_thm12(Ctx& c, const std::vector<std::string>& exprs,
                 const std::string& out_file) {
  if (exprs.size() != 2)
    throw MalformedSyntax("verify thm12 takes exactly two knot expressions");
  KnotExprPtr e1 = parse_knot_expr(exprs[0]);
  KnotExprPtr e2 = parse_knot_expr(exprs[1]);
  NuEvaluator nu = cached_nu_s(c);
  std::ostringstream rep;
  rep << "verify thm12\n";
  rep << "K1 = " << serialize_expr(e1) << "\n";
  rep << "K2 = " << serialize_expr(e2) << "\n";
  try {
    SandwichReport r = verify_additivity_sandwich(e1, e2, nu);
    rep << "t(K1) = " << r.t1.t_star << "\n";
    rep << "t(K2) = " << r.t2.t_star << "\n";
    rep << "t(K1#K2) = " << r.t12.t_star << "\n";
    rep << "t(m(K1)) = " << r.tm1.t_star << "\n";
    rep << "t(m(K2)) = " << r.tm2.t_star << "\n";
    rep << "lower = t(K1) + t(K2) = " << r.lower << "\n";
    rep << "upper = min(t(K1) - t(m(K2)), t(K2) - t(m(K1))) = " << r.upper
        << "\n";
    rep << "check: " << r.lower << " <= " << r.t12.t_star << " <= " << r.upper
        << " holds\n";
    rep << "RESULT item=thm12 status=pass t1=" << r.t1.t_star
        << " t2=" << r.t2.t_star << " t12=" << r.t12.t_star
        << " tm1=" << r.tm1.t_star << " tm2=" << r.tm2.t_star
        << " lower=" << r.lower << " upper=" << r.upper << "\n";
    emit_report(c, rep.str(), out_file);
    return 0;
  } catch (const InequalityViolation& ex) {
    rep << "check failed: " << ex.what() << "\n";
    rep << "RESULT item=thm12 status=fail\n";
    emit_report(c, rep.str(), out_file);
    return 1;
  }
}

int verify_cor13(Ctx& c, int n, const std::string& out_file) {
  if (n < 1) throw MalformedSyntax("--n must be >= 1");
  NuEvaluator nu = cached_nu_s(c);
  KnotExprPtr e25 = torus_expr(2, 5);
  TnuResult t25 = t_nu_search(e25, nu);
  BoundsLedger led;
  led.set("s", e25, Interval{t25.t_star, t25.t_star},
          "threshold search certificate");
  std::ostringstream rep;
  rep << "verify cor13\n";
  rep << "t_s(T(2,5)) = " << t25.t_star << " (searched; certificate nu=1 at t="
      << t25.t_star << ", nu=0 at t=" << t25.t_star + 1 << ")\n";
  bool all = true;
  long long min_gap = kPosInf;
  for (int i = 1; i <= n; ++i) {
    GapReport g = stacked_gap_report(i, led);
    all = all && g.exceeds_n;
    min_gap = std::min(min_gap, g.gap_lower - i);
    rep << "n=" << i << ": t_tau=" << g.t_tau_value
        << " t_s_lower=" << bound_str(g.t_s_lower) << " gap>=" << g.gap_lower
        << (g.exceeds_n ? " > n" : " NOT > n") << "\n";
  }
  rep << "RESULT item=cor13 status=" << (all ? "pass" : "fail") << " n=" << n
      << " t25=" << t25.t_star << " min_gap_minus_n=" << min_gap << "\n";
  emit_report(c, rep.str(), out_file);
  return all ? 0 : 1;
}

int verify_remark14(Ctx& c, const std::vector<std::string>& exprs,
                    const std::string& out_file) {
  if (exprs.size() != 1)
    throw MalformedSyntax("verify remark14 takes exactly one knot expression");
  KnotExprPtr e = parse_knot_expr(exprs[0]);
  NuEvaluator nu = cached_nu_s(c);
  int nu_k = nu.eval(expr_diagram(e));
  TnuResult r = t_nu_search(e, nu);
  LinearGuessReport g = linear_guess_residual(nu_k, r.t_star);
  std::ostringstream rep;
  rep << "verify remark14\n";
  rep << "knot = " << serialize_expr(e) << "\n";
  rep << "nu_s = " << g.nu << "\n";
  rep << "t_s = " << g.t << "\n";
  rep << "linear guess 3*nu_s - 1 = " << 3 * g.nu - 1 << "\n";
  rep << "residual = " << g.residual << "\n";
  rep << "note: the guess is reported, never asserted\n";
  rep << "RESULT item=remark14 status=pass nu=" << g.nu << " t=" << g.t
      << " residual=" << g.residual << "\n";
  emit_report(c, rep.str(), out_file);
  return 0;
}

int verify_step21(Ctx& c, const std::vector<std::string>& exprs, int window,
                  const std::string& out_file) {
  if (exprs.size() != 1)
    throw MalformedSyntax("verify step21 takes exactly one knot expression");
  if (window < 1) throw MalformedSyntax("--window must be >= 1");
  KnotExprPtr e = parse_knot_expr(exprs[0]);
  NuEvaluator nu = cached_nu_s(c);
  TnuResult r = t_nu_search(e, nu);
  int lo = r.t_star - window / 2;
  int hi = lo + window - 1;
  std::vector<DoubleEval> prof = step_profile(e, nu, lo, hi);
  bool ok = true;
  std::string got, want;
  for (const DoubleEval& ev : prof) {
    int expect = ev.t <= r.t_star ? 1 : 0;
    ok = ok && ev.value == expect;
    if (!got.empty()) {
      got += ",";
      want += ",";
    }
    got += std::to_string(ev.value);
    want += std::to_string(expect);
  }
  std::ostringstream rep;
  rep << "verify step21\n";
  rep << "knot = " << serialize_expr(e) << "\n";
  rep << "t_s = " << r.t_star << "\n";
  rep << "window = [" << lo << "," << hi << "]\n";
  rep << "profile:  " << got << "\n";
  rep << "expected: " << want << "\n";
  rep << "RESULT item=step21 status=" << (ok ? "pass" : "fail")
      << " t=" << r.t_star << " window=" << window << " profile=" << got
      << "\n";
  emit_report(c, rep.str(), out_file);
  return ok ? 0 : 1;
}

int cmd_cache(Ctx& c, const std::string& action) {
  if (!c.cache.enabled())
    throw MalformedSyntax(
        "cache subcommand requires --cache DIR (or KNOTCORD_CACHE)");
  if (action == "stats") {
    CacheStore::Stats s = c.cache.stats();
    *c.out << "entries = " << s.entries << "\n";
    *c.out << "bytes = " << s.bytes << "\n";
  } else if (action == "clear") {
    *c.out << "removed = " << c.cache.clear() << "\n";
  } else {  // dir
    *c.out << c.cache.dir().string() << "\n";
  }
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// run_cli
// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  Ctx c;
  c.out = &out;
  c.err = &err;

  CLI::App app{
      "knot concordance toolkit: s-invariants, homology tables and "
      "twisted-double twist thresholds"};
  app.require_subcommand(1);

  app.add_option("--field", c.cfg.field, "coefficient field: Q or Fp:<prime>")
      ->envname("KNOTCORD_FIELD");
  app.add_option("--budget-entries", c.cfg.budget_entries,
                 "cap on live differential terms in the engine")
      ->check(CLI::PositiveNumber)
      ->envname("KNOTCORD_BUDGET_ENTRIES");
  app.add_option("--budget-secs", c.cfg.budget_secs,
                 "wall-clock budget per homology run, in seconds")
      ->check(CLI::PositiveNumber)
      ->envname("KNOTCORD_BUDGET_SECS");
  app.add_option("--cache", c.cfg.cache_dir,
                 "directory for the persistent result cache")
      ->envname("KNOTCORD_CACHE");
  app.add_option("--jobs", c.cfg.jobs,
                 "parallel evaluation slots (current scheduler is serial)")
      ->check(CLI::PositiveNumber)
      ->envname("KNOTCORD_JOBS");
  app.add_flag("--verbose", c.cfg.verbose, "engine trace lines on stderr")
      ->envname("KNOTCORD_VERBOSE");

  std::string in_s;
  CLI::App* sub_s =
      app.add_subcommand("s", "concordance s-invariant of a knot");
  sub_s->fallthrough();
  sub_s->add_option("input", in_s, "PD[...] diagram or knot expression")
      ->required();

  std::string in_kh;
  bool with_jones = false;
  CLI::App* sub_kh =
      app.add_subcommand("kh", "bigraded homology table of a knot");
  sub_kh->fallthrough();
  sub_kh->add_option("input", in_kh, "PD[...] diagram or knot expression")
      ->required();
  sub_kh->add_flag("--with-jones", with_jones,
                   "also print the Jones polynomial from the state sum")
      ->envname("KNOTCORD_WITH_JONES");

  std::string in_tnu, inv = "s";
  int tb_lower = 0, tb_upper = 0;
  CLI::App* sub_tnu = app.add_subcommand(
      "tnu", "largest t with nu(D+(K,t)) = 1, searched or by formula");
  sub_tnu->fallthrough();
  sub_tnu->add_option("input", in_tnu, "knot expression")->required();
  sub_tnu->add_option("--inv", inv, "which invariant: s (search) or tau")
      ->check(CLI::IsMember({"s", "tau"}))
      ->envname("KNOTCORD_INV");
  CLI::Option* tb_lower_opt =
      sub_tnu->add_option("--tb-lower", tb_lower,
                          "externally known lower bound for the threshold")
          ->envname("KNOTCORD_TB_LOWER");
  CLI::Option* tb_upper_opt =
      sub_tnu->add_option("--tb-upper", tb_upper,
                          "externally known upper bound for the threshold")
          ->envname("KNOTCORD_TB_UPPER");

  std::string in_prof;
  int prof_lo = 0, prof_hi = 0;
  bool prof_neg = false;
  CLI::App* sub_prof = app.add_subcommand(
      "profile", "nu of twisted doubles over a window of twist parameters");
  sub_prof->fallthrough();
  sub_prof->add_option("input", in_prof, "knot expression")->required();
  sub_prof->add_option("--lo", prof_lo, "first twist parameter")
      ->required()
      ->envname("KNOTCORD_LO");
  sub_prof->add_option("--hi", prof_hi, "last twist parameter")
      ->required()
      ->envname("KNOTCORD_HI");
  sub_prof->add_flag("--negative", prof_neg, "use the negative clasp")
      ->envname("KNOTCORD_NEGATIVE");

  std::string verify_item, verify_out;
  std::vector<std::string> verify_args;
  int verify_n = 100, verify_window = 5;
  CLI::App* sub_verify = app.add_subcommand(
      "verify", "re-derive a toolkit identity and emit a structured report");
  sub_verify->fallthrough();
  sub_verify
      ->add_option("item", verify_item,
                   "one of: thm12, cor13, remark14, step21")
      ->required()
      ->check(CLI::IsMember({"thm12", "cor13", "remark14", "step21"}));
  sub_verify->add_option("exprs", verify_args, "knot expressions")
      ->expected(0, 2);
  sub_verify->add_option("--n", verify_n, "largest stack size for cor13")
      ->envname("KNOTCORD_N");
  sub_verify
      ->add_option("--window", verify_window, "profile width for step21")
      ->envname("KNOTCORD_WINDOW");
  sub_verify
      ->add_option("--out", verify_out, "also write the report to this file")
      ->envname("KNOTCORD_OUT");

  std::string cache_action;
  CLI::App* sub_cache =
      app.add_subcommand("cache", "inspect or clear the result cache");
  sub_cache->fallthrough();
  sub_cache->add_option("action", cache_action, "stats, clear or dir")
      ->required()
      ->check(CLI::IsMember({"stats", "clear", "dir"}));

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("knotcord");
  for (const std::string& a : args) argv_store.push_back(a);
  std::vector<const char*> argv;
  argv.reserve(argv_store.size());
  for (const std::string& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 2;
  }

  try {
    c.cfg.validate();
    if (!c.cfg.cache_dir.empty()) c.cache = CacheStore(c.cfg.cache_dir);

    if (sub_s->parsed()) return cmd_s(c, in_s);
    if (sub_kh->parsed()) return cmd_kh(c, in_kh, with_jones);
    if (sub_tnu->parsed()) {
      TBHints hints;
      if (!tb_lower_opt->empty()) hints.lower = tb_lower;
      if (!tb_upper_opt->empty()) hints.upper = tb_upper;
      return cmd_tnu(c, in_tnu, inv, hints);
    }
    if (sub_prof->parsed())
      return cmd_profile(c, in_prof, prof_lo, prof_hi, prof_neg);
    if (sub_verify->parsed()) {
      if (verify_item == "thm12")
        return verify_thm12(c, verify_args, verify_out);
      if (verify_item == "cor13") return verify_cor13(c, verify_n, verify_out);
      if (verify_item == "remark14")
        return verify_remark14(c, verify_args, verify_out);
      return verify_step21(c, verify_args, verify_window, verify_out);
    }
    if (sub_cache->parsed()) return cmd_cache(c, cache_action);
    throw InternalInvariantViolation("no subcommand dispatched");
  } catch (const ResourceBudgetExceeded& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  } catch (const UnknownTauError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const MissingLeafError& e) {
    err << "error: " << e.what() << "\n";
    return 4;
  } catch (const MalformedSyntax& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ArcMultiplicityError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const MultiComponentError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NonCoprimeError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace knotcord
