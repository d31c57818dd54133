#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "knotcord/cache.hpp"
#include "knotcord/cli.hpp"

using namespace knotcord;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  RunResult r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

// Scoped temporary directory for cache tests.
struct TmpDir {
  fs::path path;
  TmpDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("knotcord-cli-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TmpDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

struct ScopedEnv {
  std::string name;
  ScopedEnv(const std::string& n, const std::string& v) : name(n) {
    ::setenv(n.c_str(), v.c_str(), 1);
  }
  ~ScopedEnv() { ::unsetenv(name.c_str()); }
};

}  // namespace

TEST_CASE("cache store round trip") {
  TmpDir dir;
  CacheStore store(dir.path);
  CHECK(store.enabled());
  std::string key = cache_key("s", "Q", "PD[]");
  CHECK(key == std::string("v") + kEngineVersion + "|s|Q|PD[]");
  CHECK(!store.get(key).has_value());

  store.put(key, "0", 1.5);
  auto hit = store.get(key);
  REQUIRE(hit.has_value());
  CHECK(hit->value == "0");
  CHECK(hit->wall_ms == doctest::Approx(1.5));

  // Multiline values survive.
  std::string key2 = cache_key("kh", "Fp:2", "PD[]");
  store.put(key2, "0 -1 1\n0 1 1", 2.0);
  hit = store.get(key2);
  REQUIRE(hit.has_value());
  CHECK(hit->value == "0 -1 1\n0 1 1");

  CacheStore::Stats s = store.stats();
  CHECK(s.entries == 2);
  CHECK(s.bytes > 0);

  // A colliding filename whose stored key differs is a miss with a warning.
  fs::rename(dir.path / (CacheStore::hash_name(key2) + ".ent"),
             dir.path / (CacheStore::hash_name("other") + ".ent"));
  std::ostringstream warn;
  CHECK(!store.get("other", &warn).has_value());
  CHECK(contains(warn.str(), "key mismatch"));

  // Corrupt file: miss plus warning, never an exception.
  {
    std::ofstream f(dir.path / (CacheStore::hash_name(key) + ".ent"),
                    std::ios::trunc);
    f << "not a cache entry\n";
  }
  warn.str("");
  CHECK(!store.get(key, &warn).has_value());
  CHECK(contains(warn.str(), "ignoring cache entry"));

  CHECK(store.clear() == 2);
  CHECK(store.stats().entries == 0);
}

TEST_CASE("cli s subcommand") {
  RunResult r = run({"s", "T(2,3)"});
  CHECK(r.code == 0);
  CHECK(r.out == "s = -2\nnu_s = 1\n");
  CHECK(contains(r.err, "wall_ms"));

  r = run({"s", "PD[]"});
  CHECK(r.code == 0);
  CHECK(r.out == "s = 0\nnu_s = 0\n");

  r = run({"s", "T(2,3)#m(T(2,3))"});
  CHECK(r.code == 0);
  CHECK(r.out == "s = 0\nnu_s = 0\n");

  r = run({"s", "PD[X[1,1,2,2]]"});
  CHECK(r.code == 0);
  CHECK(r.out == "s = 0\nnu_s = 0\n");

  r = run({"s", "knot:fig8", "--field", "Fp:3"});
  CHECK(r.code == 0);
  CHECK(r.out == "s = 0\nnu_s = 0\n");
}

TEST_CASE("cli exit codes") {
  CHECK(run({"s", "garbage("}).code == 2);
  CHECK(run({"s", "T(2,4)"}).code == 2);
  CHECK(run({"s", "PD[X[1,2,3,4]]"}).code == 2);
  CHECK(run({"s", "T(2,3)", "--field", "Fp:4"}).code == 2);
  CHECK(run({"s", "T(2,3)", "--field", "R"}).code == 2);
  CHECK(run({"s", "T(2,7)", "--budget-entries", "1"}).code == 3);
  CHECK(run({"tnu", "knot:nonesuch", "--inv", "tau"}).code == 4);
  CHECK(run({"s", "knot:nonesuch"}).code == 4);
  CHECK(run({"nope"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"s"}).code == 2);
  CHECK(run({"s", "T(2,3)", "--jobs", "0"}).code == 2);
  CHECK(run({"s", "T(2,3)", "--budget-entries", "0"}).code == 2);
  CHECK(run({"tnu", "T(2,3)", "--inv", "sigma"}).code == 2);
  CHECK(run({"verify", "bogus"}).code == 2);
  CHECK(run({"verify", "thm12", "T(2,3)"}).code == 2);  // needs two exprs
  CHECK(run({"verify", "cor13", "--n", "0"}).code == 2);
  CHECK(run({"cache", "stats"}).code == 2);  // no --cache dir
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"s", "--help"}).code == 0);
}

TEST_CASE("cli kh subcommand") {
  RunResult r = run({"kh", "T(2,3)"});
  CHECK(r.code == 0);
  CHECK(r.out ==
        "i=-3 q=-9 dim=1\n"
        "i=-2 q=-5 dim=1\n"
        "i=0 q=-3 dim=1\n"
        "i=0 q=-1 dim=1\n"
        "euler = -q^-9 + q^-5 + q^-3 + q^-1\n");

  r = run({"kh", "PD[]", "--with-jones"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "i=0 q=-1 dim=1\ni=0 q=1 dim=1\n"));
  CHECK(contains(r.out, "euler = q^-1 + q\n"));
  CHECK(contains(r.out, "jones = q^-1 + q\n"));

  // Jones line always equals the Euler line.
  r = run({"kh", "knot:fig8", "--with-jones"});
  CHECK(r.code == 0);
  std::string euler, jones;
  std::istringstream lines(r.out);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.rfind("euler = ", 0) == 0) euler = line.substr(8);
    if (line.rfind("jones = ", 0) == 0) jones = line.substr(8);
  }
  CHECK(!euler.empty());
  CHECK(euler == jones);
}

TEST_CASE("cli tnu subcommand") {
  RunResult r = run({"tnu", "T(2,5)", "--inv", "tau"});
  CHECK(r.code == 0);
  CHECK(r.out == "knot = T(2,5)\ninvariant = tau\nt = 3\n");

  r = run({"tnu", "knot:unknot", "--inv", "tau"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "t = -1\n"));

  r = run({"tnu", "T(2,3)", "--inv", "s"});
  CHECK(r.code == 0);
  CHECK(r.out ==
        "knot = T(2,3)\n"
        "invariant = s\n"
        "t = 2\n"
        "certificate: nu(D+(K,2)) = 1, nu(D+(K,3)) = 0\n"
        "log:\n"
        "  t=1 clasp=+ value=1\n"
        "  t=2 clasp=+ value=1\n"
        "  t=3 clasp=+ value=0\n");

  // Hints never change the answer, only add diagnostics.
  r = run({"tnu", "T(2,3)", "--inv", "s", "--tb-lower", "3"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "t = 2\n"));
  CHECK(contains(r.err, "hint lower bound 3"));
  r = run({"tnu", "T(2,3)", "--inv", "s", "--tb-lower", "1", "--tb-upper",
           "2"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "t = 2\n"));
  CHECK(!contains(r.err, "warning"));
  CHECK(run({"tnu", "T(2,3)", "--inv", "s", "--tb-lower", "2", "--tb-upper",
             "1"})
            .code == 2);
}

TEST_CASE("cli profile subcommand") {
  RunResult r = run({"profile", "T(2,3)", "--lo", "0", "--hi", "4"});
  CHECK(r.code == 0);
  CHECK(r.out ==
        "knot = T(2,3)\n"
        "invariant = s\n"
        "clasp = +\n"
        "profile:\n"
        "  t=0 value=1\n"
        "  t=1 value=1\n"
        "  t=2 value=1\n"
        "  t=3 value=0\n"
        "  t=4 value=0\n");

  r = run({"profile", "knot:unknot", "--lo=-2", "--hi", "2", "--negative"});
  CHECK(r.code == 0);
  CHECK(r.out ==
        "knot = knot:unknot\n"
        "invariant = s\n"
        "clasp = -\n"
        "profile:\n"
        "  t=-2 value=0\n"
        "  t=-1 value=0\n"
        "  t=0 value=0\n"
        "  t=1 value=-1\n"
        "  t=2 value=-1\n");

  // Empty window prints an empty profile.
  r = run({"profile", "T(2,3)", "--lo", "3", "--hi", "1"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "profile:\n"));
}

TEST_CASE("cli verify step21 and remark14") {
  RunResult r = run({"verify", "step21", "T(2,3)", "--window", "5"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "profile:  1,1,1,0,0\n"));
  CHECK(contains(r.out,
                 "RESULT item=step21 status=pass t=2 window=5 "
                 "profile=1,1,1,0,0\n"));

  r = run({"verify", "remark14", "T(2,3)"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "residual = 0\n"));
  CHECK(contains(r.out,
                 "RESULT item=remark14 status=pass nu=1 t=2 residual=0\n"));
}

TEST_CASE("cli verify cor13") {
  RunResult r = run({"verify", "cor13", "--n", "5"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "t_s(T(2,5)) = 5"));
  CHECK(contains(r.out, "n=5: t_tau=19 t_s_lower=25 gap>=6 > n\n"));
  CHECK(contains(
      r.out, "RESULT item=cor13 status=pass n=5 t25=5 min_gap_minus_n=1\n"));
}

TEST_CASE("cli verify thm12") {
  RunResult r = run({"verify", "thm12", "T(2,3)", "knot:unknot"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "t(K1) = 2\n"));
  CHECK(contains(r.out, "t(K2) = -1\n"));
  CHECK(contains(r.out, "t(K1#K2) = 2\n"));
  CHECK(contains(r.out, "RESULT item=thm12 status=pass t1=2 t2=-1 t12=2 tm1="));
  CHECK(contains(r.out, "tm2=-1"));
}

TEST_CASE("cli verify report file") {
  TmpDir dir;
  std::string out_file = (dir.path / "report.txt").string();
  RunResult r = run({"verify", "remark14", "knot:unknot", "--out", out_file});
  CHECK(r.code == 0);
  std::ifstream f(out_file);
  std::stringstream body;
  body << f.rdbuf();
  CHECK(body.str() == r.out);
  CHECK(contains(body.str(), "RESULT item=remark14 status=pass nu=0 t=-1 "
                             "residual=0\n"));
}

TEST_CASE("cli cache behavior and transparency") {
  TmpDir dir;
  RunResult plain = run({"s", "T(2,7)"});
  RunResult cold = run({"s", "T(2,7)", "--cache", dir.str()});
  RunResult warm = run({"s", "T(2,7)", "--cache", dir.str()});
  CHECK(plain.code == 0);
  CHECK(cold.code == 0);
  CHECK(warm.code == 0);
  // Primary output is byte-identical with and without the cache.
  CHECK(plain.out == cold.out);
  CHECK(plain.out == warm.out);
  CHECK(plain.out == "s = -6\nnu_s = 3\n");

  RunResult st = run({"cache", "stats", "--cache", dir.str()});
  CHECK(st.code == 0);
  CHECK(contains(st.out, "entries = 1\n"));

  RunResult d = run({"cache", "dir", "--cache", dir.str()});
  CHECK(d.code == 0);
  CHECK(contains(d.out, dir.str()));

  // A search warms the same key space the s subcommand reads.
  RunResult search = run({"tnu", "T(2,3)", "--inv", "s", "--cache", dir.str()});
  CHECK(search.code == 0);
  RunResult s_warm = run({"s", "T(2,3)", "--cache", dir.str()});
  CHECK(s_warm.out == "s = -2\nnu_s = 1\n");
  st = run({"cache", "stats", "--cache", dir.str()});
  // T(2,7), the T(2,3) companion, and its three probed doubles.
  CHECK(contains(st.out, "entries = 5\n"));

  // kh caching round-trips the table.
  RunResult kh_cold = run({"kh", "T(2,3)", "--cache", dir.str()});
  RunResult kh_warm = run({"kh", "T(2,3)", "--cache", dir.str()});
  CHECK(kh_cold.code == 0);
  CHECK(kh_cold.out == kh_warm.out);

  // Corrupting every entry forces recomputation with a warning, same bytes.
  for (const auto& entry : fs::directory_iterator(dir.path)) {
    std::ofstream f(entry.path(), std::ios::trunc);
    f << "scrambled\n";
  }
  RunResult again = run({"s", "T(2,7)", "--cache", dir.str()});
  CHECK(again.code == 0);
  CHECK(again.out == plain.out);
  CHECK(contains(again.err, "ignoring cache entry"));

  RunResult cleared = run({"cache", "clear", "--cache", dir.str()});
  CHECK(cleared.code == 0);
  st = run({"cache", "stats", "--cache", dir.str()});
  CHECK(contains(st.out, "entries = 0\n"));
}

TEST_CASE("cli environment overrides") {
  {
    ScopedEnv env("KNOTCORD_BUDGET_ENTRIES", "1");
    CHECK(run({"s", "T(2,7)"}).code == 3);
  }
  CHECK(run({"s", "T(2,7)"}).code == 0);

  {
    ScopedEnv env("KNOTCORD_INV", "tau");
    RunResult r = run({"tnu", "T(2,5)"});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "invariant = tau\nt = 3\n"));
  }

  {
    ScopedEnv env("KNOTCORD_FIELD", "nonsense");
    CHECK(run({"s", "T(2,3)"}).code == 2);
  }

  {
    TmpDir dir;
    ScopedEnv env("KNOTCORD_CACHE", dir.str());
    CHECK(run({"s", "T(2,3)"}).code == 0);
    RunResult st = run({"cache", "stats"});
    CHECK(st.code == 0);
    CHECK(contains(st.out, "entries = 1\n"));
  }
}

TEST_CASE("cli determinism") {
  for (const std::vector<std::string>& args :
       {std::vector<std::string>{"s", "T(3,4)"},
        std::vector<std::string>{"kh", "T(2,5)"},
        std::vector<std::string>{"tnu", "T(2,3)", "--inv", "s"},
        std::vector<std::string>{"profile", "knot:unknot", "--lo=-2", "--hi",
                                 "0"}}) {
    RunResult a = run(args);
    RunResult b = run(args);
    CHECK(a.code == 0);
    CHECK(a.code == b.code);
    CHECK(a.out == b.out);
  }
}
