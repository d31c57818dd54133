#include "knotcord/construct.hpp"

#include <cstdlib>
#include <numeric>
#include <sstream>

#include "knotcord/errors.hpp"

namespace knotcord {

namespace {

// Assembles a diagram from crossings over symbolic strand segments, then
// labels the segments 1..n by walking the strand and emits a validated
// PlanarDiagram.  Segments may be aliased (used to close braids).
struct SymBuilder {
  struct SymCrossing {
    std::array<uint32_t, 4> p;
    int sign;
  };
  std::vector<SymCrossing> cross;
  std::vector<uint32_t> parent;  // alias union-find

  uint32_t seg() {
    parent.push_back(static_cast<uint32_t>(parent.size()));
    return parent.back();
  }
  uint32_t rep(uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void alias(uint32_t a, uint32_t b) { parent[rep(a)] = rep(b); }
  void add(uint32_t p0, uint32_t p1, uint32_t p2, uint32_t p3, int sign) {
    cross.push_back({{p0, p1, p2, p3}, sign});
  }

  PlanarDiagram finish(uint32_t start) {
    if (cross.empty()) return PlanarDiagram{};
    for (auto& c : cross)
      for (auto& x : c.p) x = rep(x);

    constexpr uint32_t kNone = UINT32_MAX;
    const size_t nseg = parent.size();
    size_t roots = 0;
    for (uint32_t x = 0; x < nseg; ++x)
      if (rep(x) == x) ++roots;
    if (roots != cross.size() * 2)
      throw MultiComponentError(
          "diagram has a crossing-free split component");
    std::vector<uint32_t> in_cross(nseg, kNone), in_port(nseg, 0);
    std::vector<int> out_seen(nseg, 0);
    for (uint32_t ci = 0; ci < cross.size(); ++ci) {
      const auto& c = cross[ci];
      const uint32_t ins[2] = {c.p[0], c.sign > 0 ? c.p[3] : c.p[1]};
      const uint32_t outs[2] = {c.p[2], c.sign > 0 ? c.p[1] : c.p[3]};
      const uint32_t in_ports[2] = {0u, c.sign > 0 ? 3u : 1u};
      for (int j = 0; j < 2; ++j) {
        if (in_cross[ins[j]] != kNone)
          throw InternalInvariantViolation("segment consumed twice");
        in_cross[ins[j]] = ci;
        in_port[ins[j]] = in_ports[j];
        if (++out_seen[outs[j]] > 1)
          throw InternalInvariantViolation("segment produced twice");
      }
    }

    const uint32_t n = static_cast<uint32_t>(cross.size()) * 2;
    std::vector<uint32_t> label(nseg, 0);
    uint32_t cur = rep(start), next_label = 1;
    do {
      if (label[cur]) throw InternalInvariantViolation("segment revisited");
      if (in_cross[cur] == kNone)
        throw InternalInvariantViolation("dangling segment");
      label[cur] = next_label++;
      const auto& c = cross[in_cross[cur]];
      cur = in_port[cur] == 0 ? c.p[2] : (c.sign > 0 ? c.p[1] : c.p[3]);
    } while (cur != rep(start));
    if (next_label != n + 1) {
      std::ostringstream os;
      os << "strand closes after " << next_label - 1 << " of " << n
         << " segments; result is a link";
      throw MultiComponentError(os.str());
    }

    std::vector<std::array<uint32_t, 4>> tuples;
    tuples.reserve(cross.size());
    for (const auto& c : cross)
      tuples.push_back({label[c.p[0]], label[c.p[1]], label[c.p[2]],
                        label[c.p[3]]});
    PlanarDiagram d = make_diagram(tuples);
    for (size_t ci = 0; ci < cross.size(); ++ci)
      if (d.crossings[ci].sign != cross[ci].sign)
        throw InternalInvariantViolation(
            "derived sign disagrees with constructed crossing");
    return d;
  }
};

}  // namespace

PlanarDiagram braid_closure(int strands, const std::vector<int>& word) {
  if (strands < 1) throw MalformedSyntax("braid needs at least one strand");
  if (word.empty() && strands > 1)
    throw MultiComponentError("empty braid word closes to an unlink");
  SymBuilder b;
  std::vector<uint32_t> bottom(strands), cur(strands);
  for (int i = 0; i < strands; ++i) bottom[i] = cur[i] = b.seg();
  for (int letter : word) {
    const int s = std::abs(letter);
    if (s < 1 || s >= strands)
      throw MalformedSyntax("braid letter out of range");
    const uint32_t xs = cur[s - 1], xs1 = cur[s];
    const uint32_t ys = b.seg(), ys1 = b.seg();
    if (letter > 0)
      b.add(xs1, ys1, ys, xs, +1);  // strand at s passes over to s+1
    else
      b.add(xs, xs1, ys1, ys, -1);
    cur[s - 1] = ys;
    cur[s] = ys1;
  }
  for (int i = 0; i < strands; ++i) b.alias(cur[i], bottom[i]);
  return b.finish(bottom[0]);
}

PlanarDiagram torus_knot(int p, int q) {
  if (p < 2) throw MalformedSyntax("torus knot requires p >= 2");
  if (std::gcd(p, std::abs(q)) != 1) {
    std::ostringstream os;
    os << "torus parameters (" << p << "," << q << ") describe a link";
    throw NonCoprimeError(os.str());
  }
  const int qq = std::abs(q);
  std::vector<int> word;
  word.reserve(static_cast<size_t>(p - 1) * qq);
  for (int rep = 0; rep < qq; ++rep)
    for (int s = 1; s < p; ++s) word.push_back(s);
  PlanarDiagram d = braid_closure(p, word);
  return q < 0 ? mirror(d) : d;
}

PlanarDiagram twisted_double(const DoubleSpec& spec) {
  const PlanarDiagram& k = spec.companion;
  if (!traversal_coherent(k))
    throw MalformedSyntax(
        "companion diagram is not traversal-coherent; doubling undefined");
  const int w = writhe(k);
  const int delta = spec.twists - w;
  const int nb = std::abs(delta);
  const int box_sign = delta > 0 ? -1 : +1;  // right twists for delta < 0

  SymBuilder b;
  const uint32_t n = k.n_arcs;
  const bool has_blocks = !k.crossings.empty();

  // The doubled band runs along the companion as two antiparallel copies;
  // copy 1 follows the companion orientation.  On companion arc 1 the band
  // passes through the framing-twist boxes and is closed by the clasp: copy 1
  // ascends the boxes (segments L[0..nb]), u-turns at the clasp, descends as
  // copy 2 (segments R[nb..0]), runs backwards around the whole companion and
  // u-turns at the clasp again.
  std::vector<uint32_t> L(nb + 1), R(nb + 1);
  for (auto& s : L) s = b.seg();
  for (auto& s : R) s = b.seg();
  const uint32_t h1 = has_blocks ? b.seg() : L[0];  // clasp -> head block
  const uint32_t h2 = has_blocks ? b.seg() : R[0];  // head block -> clasp

  std::vector<uint32_t> wire1(n + 1, 0), wire2(n + 1, 0);
  for (uint32_t a = 2; a <= n; ++a) {
    wire1[a] = b.seg();
    wire2[a] = b.seg();
  }
  auto w1_out = [&](uint32_t a) { return a == 1 ? L[0] : wire1[a]; };
  auto w1_in = [&](uint32_t a) { return a == 1 ? h1 : wire1[a]; };
  auto w2_out = [&](uint32_t a) { return a == 1 ? h2 : wire2[a]; };
  auto w2_in = [&](uint32_t a) { return a == 1 ? R[0] : wire2[a]; };

  // One 4-crossing block per companion crossing; both antiparallel copies of
  // each strand cross both copies of the other, with net writhe zero.
  for (const auto& c : k.crossings) {
    const uint32_t i = c.under_in(), ko = c.under_out();
    const uint32_t oi = c.over_in(), oo = c.over_out();
    const uint32_t mw = b.seg(), me = b.seg(), ms = b.seg(), mn = b.seg();
    if (c.sign > 0) {
      b.add(w1_in(i), w1_out(oo), mw, ms, +1);
      b.add(me, w1_in(oi), w2_out(i), ms, -1);
      b.add(mw, w2_in(oo), w1_out(ko), mn, -1);
      b.add(w2_in(ko), w2_out(oi), me, mn, +1);
    } else {
      b.add(w1_in(i), w2_out(oi), mw, ms, +1);
      b.add(mw, w1_in(oi), w1_out(ko), mn, -1);
      b.add(me, w2_in(oo), w2_out(i), ms, -1);
      b.add(w2_in(ko), w1_out(oo), me, mn, +1);
    }
  }

  // Twist boxes, bottom to top.  Box j joins L[j-1]->L[j] ascending and
  // R[j]->R[j-1] descending; both crossings carry box_sign.
  for (int j = 1; j <= nb; ++j) {
    const uint32_t a = L[j - 1], a2 = L[j], b2 = R[j], bb = R[j - 1];
    const uint32_t m1 = b.seg(), m2 = b.seg();
    if (box_sign > 0) {
      b.add(m2, m1, bb, a, +1);
      b.add(m1, m2, a2, b2, +1);
    } else {
      b.add(a, m2, m1, bb, -1);
      b.add(b2, m1, m2, a2, -1);
    }
  }

  // Clasp: two crossings hooking the band's u-turns through each other.
  const uint32_t w1s = b.seg(), w2s = b.seg();
  const uint32_t e1 = L[nb], e2 = R[nb];
  if (spec.clasp == ClaspSign::Positive) {
    b.add(e1, h1, w1s, w2s, +1);
    b.add(h2, e2, w2s, w1s, +1);
  } else {
    b.add(w2s, e1, h1, w1s, -1);
    b.add(w1s, h2, e2, w2s, -1);
  }

  return b.finish(h1);
}

}  // namespace knotcord
