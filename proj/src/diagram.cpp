#include "knotcord/diagram.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "knotcord/errors.hpp"

namespace knotcord {

namespace {

int derive_sign(const std::array<uint32_t, 4>& t, uint32_t n) {
  const bool p1_is_succ = (t[1] == arc_succ(t[3], n));
  const bool p3_is_succ = (t[3] == arc_succ(t[1], n));
  if (p1_is_succ && p3_is_succ) {
    // n == 2 (single kink): both over ports are successors of each other.
    // The port repeating the under-in arc is the over-out port, since in a
    // one-crossing diagram the over strand exits straight into the under-in.
    if (t[1] == t[0]) return +1;
    if (t[3] == t[0]) return -1;
    throw InternalInvariantViolation("kink sign tiebreak failed");
  }
  if (p1_is_succ) return +1;
  if (p3_is_succ) return -1;
  std::ostringstream os;
  os << "over-strand arcs " << t[1] << "," << t[3]
     << " are not consecutive in strand order; "
        "input is a link or is not labeled along the strand";
  throw MultiComponentError(os.str());
}

}  // namespace

PlanarDiagram make_diagram(const std::vector<std::array<uint32_t, 4>>& tuples) {
  PlanarDiagram d;
  if (tuples.empty()) return d;  // 0-crossing unknot, n_arcs = 1
  const uint32_t n = static_cast<uint32_t>(tuples.size()) * 2;
  d.n_arcs = n;

  std::vector<int> count(n + 1, 0);
  for (const auto& t : tuples)
    for (uint32_t a : t) {
      if (a < 1) throw MalformedSyntax("arc label 0 is not allowed");
      if (a > n) {
        std::ostringstream os;
        os << "arc label " << a << " out of range 1.." << n;
        throw ArcMultiplicityError(os.str());
      }
      ++count[a];
    }
  for (uint32_t a = 1; a <= n; ++a)
    if (count[a] != 2) {
      std::ostringstream os;
      os << "arc label " << a << " appears " << count[a]
         << " times, expected 2";
      throw ArcMultiplicityError(os.str());
    }

  d.crossings.reserve(tuples.size());
  for (const auto& t : tuples) {
    if (t[2] != arc_succ(t[0], n)) {
      std::ostringstream os;
      os << "under-strand runs " << t[0] << "->" << t[2] << ", expected "
         << t[0] << "->" << arc_succ(t[0], n)
         << "; input is a link or is not labeled along the strand";
      throw MultiComponentError(os.str());
    }
    d.crossings.push_back(Crossing{t, derive_sign(t, n)});
  }
  return d;
}

namespace {

struct Parser {
  std::string_view s;
  size_t i = 0;

  void skip_ws() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool eat(char c) {
    skip_ws();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) {
      std::ostringstream os;
      os << "expected '" << c << "' at offset " << i;
      throw MalformedSyntax(os.str());
    }
  }
  uint32_t integer() {
    skip_ws();
    if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
      throw MalformedSyntax("expected arc label at offset " +
                            std::to_string(i));
    uint64_t v = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      v = v * 10 + static_cast<uint64_t>(s[i] - '0');
      if (v > 0xffffffffull) throw MalformedSyntax("arc label too large");
      ++i;
    }
    return static_cast<uint32_t>(v);
  }
  void done() {
    skip_ws();
    if (i != s.size())
      throw MalformedSyntax("trailing input at offset " + std::to_string(i));
  }
};

}  // namespace

PlanarDiagram parse_pd(std::string_view text) {
  Parser p{text};
  if (!p.eat('P') || !p.eat('D'))
    throw MalformedSyntax("PD code must start with 'PD['");
  p.expect('[');
  std::vector<std::array<uint32_t, 4>> tuples;
  if (!p.eat(']')) {
    do {
      p.expect('X');
      p.expect('[');
      std::array<uint32_t, 4> t{};
      t[0] = p.integer();
      for (int k = 1; k < 4; ++k) {
        p.expect(',');
        t[k] = p.integer();
      }
      p.expect(']');
      tuples.push_back(t);
    } while (p.eat(','));
    p.expect(']');
  }
  p.done();
  return make_diagram(tuples);
}

std::string serialize_pd(const PlanarDiagram& d) {
  std::string out = "PD[";
  for (size_t c = 0; c < d.crossings.size(); ++c) {
    if (c) out += ',';
    const auto& t = d.crossings[c].p;
    out += "X[";
    for (int k = 0; k < 4; ++k) {
      if (k) out += ',';
      out += std::to_string(t[k]);
    }
    out += ']';
  }
  out += ']';
  return out;
}

int writhe(const PlanarDiagram& d) {
  int w = 0;
  for (const auto& c : d.crossings) w += c.sign;
  return w;
}

int positive_crossings(const PlanarDiagram& d) {
  int k = 0;
  for (const auto& c : d.crossings) k += c.sign > 0;
  return k;
}

int negative_crossings(const PlanarDiagram& d) {
  int k = 0;
  for (const auto& c : d.crossings) k += c.sign < 0;
  return k;
}

namespace {

PlanarDiagram rebuild_checked(std::vector<std::array<uint32_t, 4>> tuples,
                              const std::vector<int>& expected_signs) {
  PlanarDiagram d = make_diagram(tuples);
  for (size_t i = 0; i < d.crossings.size(); ++i)
    if (d.crossings[i].sign != expected_signs[i])
      throw InternalInvariantViolation(
          "derived crossing sign disagrees with transformed sign");
  return d;
}

}  // namespace

PlanarDiagram mirror(const PlanarDiagram& d) {
  std::vector<std::array<uint32_t, 4>> tuples;
  std::vector<int> signs;
  tuples.reserve(d.crossings.size());
  for (const auto& c : d.crossings) {
    const auto& p = c.p;
    if (c.sign > 0)
      tuples.push_back({p[3], p[0], p[1], p[2]});
    else
      tuples.push_back({p[1], p[2], p[3], p[0]});
    signs.push_back(-c.sign);
  }
  return rebuild_checked(std::move(tuples), signs);
}

PlanarDiagram reverse_orientation(const PlanarDiagram& d) {
  const uint32_t n = d.n_arcs;
  auto r = [n](uint32_t a) { return n + 1 - a; };
  std::vector<std::array<uint32_t, 4>> tuples;
  std::vector<int> signs;
  tuples.reserve(d.crossings.size());
  for (const auto& c : d.crossings) {
    const auto& p = c.p;
    tuples.push_back({r(p[2]), r(p[3]), r(p[0]), r(p[1])});
    signs.push_back(c.sign);
  }
  return rebuild_checked(std::move(tuples), signs);
}

namespace {

// Positions of the two occurrences of `arc`, classified as flowing out of /
// into its crossing.  Throws unless the arc has exactly one of each.
struct ArcEnds {
  size_t tail_crossing, tail_port;  // arc leaves this port
  size_t head_crossing, head_port;  // arc enters this port
};

ArcEnds find_ends(const PlanarDiagram& d, uint32_t arc) {
  bool have_tail = false, have_head = false;
  ArcEnds e{};
  for (size_t ci = 0; ci < d.crossings.size(); ++ci) {
    const Crossing& c = d.crossings[ci];
    for (size_t k = 0; k < 4; ++k) {
      if (c.p[k] != arc) continue;
      const bool is_out = (k == 2) || (c.sign > 0 ? k == 1 : k == 3);
      if (is_out) {
        if (have_tail)
          throw MalformedSyntax(
              "diagram is not traversal-coherent; connected sum undefined");
        e.tail_crossing = ci;
        e.tail_port = k;
        have_tail = true;
      } else {
        if (have_head)
          throw MalformedSyntax(
              "diagram is not traversal-coherent; connected sum undefined");
        e.head_crossing = ci;
        e.head_port = k;
        have_head = true;
      }
    }
  }
  if (!have_tail || !have_head)
    throw MalformedSyntax(
        "diagram is not traversal-coherent; connected sum undefined");
  return e;
}

}  // namespace

PlanarDiagram connected_sum(const PlanarDiagram& a, const PlanarDiagram& b) {
  if (a.crossings.empty()) return b;
  if (b.crossings.empty()) return a;
  const uint32_t n = b.n_arcs;
  const ArcEnds ea = find_ends(a, 1), eb = find_ends(b, 1);

  // Cut arc 1 of each diagram and splice: a's tail half joins b's head half
  // (the splice becomes new arc 1), b's tail half joins a's head half (new
  // arc n+1).  b keeps labels 2..n; a's arcs 2..m shift to n+2..n+m.
  std::vector<std::array<uint32_t, 4>> tuples;
  std::vector<int> signs;
  tuples.reserve(a.crossings.size() + b.crossings.size());
  for (size_t ci = 0; ci < a.crossings.size(); ++ci) {
    std::array<uint32_t, 4> t{};
    for (size_t k = 0; k < 4; ++k) {
      const uint32_t v = a.crossings[ci].p[k];
      if (v == 1)
        t[k] = (ci == ea.tail_crossing && k == ea.tail_port) ? 1 : n + 1;
      else
        t[k] = n + v;
    }
    tuples.push_back(t);
    signs.push_back(a.crossings[ci].sign);
  }
  for (size_t ci = 0; ci < b.crossings.size(); ++ci) {
    std::array<uint32_t, 4> t{};
    for (size_t k = 0; k < 4; ++k) {
      const uint32_t v = b.crossings[ci].p[k];
      if (v == 1)
        t[k] = (ci == eb.head_crossing && k == eb.head_port) ? 1 : n + 1;
      else
        t[k] = v;
    }
    tuples.push_back(t);
    signs.push_back(b.crossings[ci].sign);
  }
  return rebuild_checked(std::move(tuples), signs);
}

namespace {

struct UnionFind {
  std::vector<uint32_t> parent;
  explicit UnionFind(size_t n) : parent(n) {
    for (size_t i = 0; i < n; ++i) parent[i] = static_cast<uint32_t>(i);
  }
  uint32_t find(uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(uint32_t a, uint32_t b) { parent[find(a)] = find(b); }
};

}  // namespace

int seifert_circle_count(const PlanarDiagram& d) {
  if (d.crossings.empty()) return 1;
  const size_t nc = d.crossings.size();
  UnionFind uf(nc * 4);
  auto port = [](size_t ci, size_t k) { return static_cast<uint32_t>(ci * 4 + k); };
  // Orientation-respecting smoothing: at a positive crossing join p0-p1 and
  // p2-p3, at a negative one p0-p3 and p1-p2.
  for (size_t ci = 0; ci < nc; ++ci) {
    if (d.crossings[ci].sign > 0) {
      uf.unite(port(ci, 0), port(ci, 1));
      uf.unite(port(ci, 2), port(ci, 3));
    } else {
      uf.unite(port(ci, 0), port(ci, 3));
      uf.unite(port(ci, 1), port(ci, 2));
    }
  }
  // Glue the two occurrences of each arc label.
  std::vector<int32_t> first(d.n_arcs + 1, -1);
  for (size_t ci = 0; ci < nc; ++ci)
    for (size_t k = 0; k < 4; ++k) {
      const uint32_t a = d.crossings[ci].p[k];
      if (first[a] < 0)
        first[a] = static_cast<int32_t>(port(ci, k));
      else
        uf.unite(static_cast<uint32_t>(first[a]), port(ci, k));
    }
  int circles = 0;
  for (uint32_t x = 0; x < nc * 4; ++x) circles += uf.find(x) == x;
  return circles;
}

bool traversal_coherent(const PlanarDiagram& d) {
  std::vector<int> in_count(d.n_arcs + 1, 0), out_count(d.n_arcs + 1, 0);
  for (const auto& c : d.crossings) {
    ++in_count[c.under_in()];
    ++in_count[c.over_in()];
    ++out_count[c.under_out()];
    ++out_count[c.over_out()];
  }
  for (uint32_t a = 1; a <= d.n_arcs; ++a) {
    const int expected = d.crossings.empty() ? 0 : 1;
    if (in_count[a] != expected || out_count[a] != expected) return false;
  }
  return true;
}

PlanarDiagram canonical(const PlanarDiagram& d) {
  if (d.crossings.empty()) return d;
  const uint32_t n = d.n_arcs;
  PlanarDiagram best;
  std::string best_key;
  for (uint32_t rot = 0; rot < n; ++rot) {
    std::vector<std::array<uint32_t, 4>> tuples;
    tuples.reserve(d.crossings.size());
    for (const auto& c : d.crossings) {
      std::array<uint32_t, 4> t{};
      for (size_t k = 0; k < 4; ++k) t[k] = (c.p[k] - 1 + rot) % n + 1;
      tuples.push_back(t);
    }
    std::sort(tuples.begin(), tuples.end());
    PlanarDiagram cand = make_diagram(tuples);
    std::string key = serialize_pd(cand);
    if (best_key.empty() || key < best_key) {
      best_key = std::move(key);
      best = std::move(cand);
    }
  }
  return best;
}

std::string canonical_pd(const PlanarDiagram& d) {
  return serialize_pd(canonical(d));
}

}  // namespace knotcord
