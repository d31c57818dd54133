#include "knotcord/homology.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <vector>

#include "knotcord/errors.hpp"
#include "knotcord/field.hpp"

namespace knotcord {

namespace {

using Matching = std::vector<std::uint8_t>;

struct Loops {
  int count = 0;
  std::vector<int> of_point;  // point index -> loop index, discovery order
};

// Closed loops of the union of two perfect matchings on the same point set.
// Loop indices are assigned in order of each loop's smallest point, which is
// the canonical ordering all dot masks refer to.
Loops loops_of(const Matching& P, const Matching& Q) {
  const std::size_t n = P.size();
  Loops l;
  l.of_point.assign(n, -1);
  for (std::size_t b0 = 0; b0 < n; ++b0) {
    if (l.of_point[b0] != -1) continue;
    std::size_t cur = b0;
    do {
      l.of_point[cur] = l.count;
      std::size_t nxt = P[cur];
      l.of_point[nxt] = l.count;
      cur = Q[nxt];
    } while (cur != b0);
    ++l.count;
  }
  return l;
}

// Union-find over surface units with Euler characteristic bookkeeping.
// Units are disks (chi 1); an interval gluing drops chi by one, gluing a cap
// along a full circle costs nothing.
struct Gluer {
  std::vector<int> uf, chi;
  void init(int n) {
    uf.resize(n);
    std::iota(uf.begin(), uf.end(), 0);
    chi.assign(n, 1);
  }
  int find(int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  }
  void edge(int u, int v) {
    int a = find(u), b = find(v);
    if (a == b) {
      chi[a] -= 1;
      return;
    }
    uf[a] = b;
    chi[b] += chi[a] - 1;
  }
  void cap(int u, int at) {
    int a = find(u), b = find(at);
    if (a != b) {
      uf[a] = b;
      chi[b] += chi[a];
    }
  }
};

// Where a constituent of a glued-in strand lives: on one of the two smoothing
// strips of the current crossing, or on the disk of the loop through an old
// boundary point.
struct Locator {
  bool strip;
  std::uint32_t idx;  // strip slot 0/1, or old point index
};

struct GlueRes {
  Matching m;                     // matching over the new boundary
  std::vector<Locator> arc_loc;   // per new point: a constituent of its arc
  std::vector<Locator> circ_loc;  // per closed circle formed by the gluing
};

struct StepInfo {
  std::uint32_t ci = 0;  // crossing index
  int sign = 0;
  std::vector<std::uint32_t> Bold, Bnew;  // open arc labels, sorted
  // Node graph for the gluing: nodes [0, nBold) are old boundary points,
  // nodes [nBold, nBold+4) are the crossing's ports.  strand[n] is the node
  // joined to n by a piece of the diagram strand, or -1 at an open end.
  std::vector<int> strand;
  std::vector<int> node_of_newpoint;
  std::array<int, 4> sigma_partner[2];  // port pairings of the two smoothings
  std::array<int, 4> sigma_slot[2];     // which smoothing arc a port lies on
};

template <class F>
class Scanner {
 public:
  using C = typename F::Elem;
  struct Term {
    int hpow;
    std::uint32_t dotmask;
    C c;
  };
  using Terms = std::vector<Term>;
  struct Obj {
    Matching m;
    int homdeg = 0, q = 0;
    bool alive = true;
    std::map<std::uint32_t, Terms> out;
    std::set<std::uint32_t> in;
  };

  Scanner(const PlanarDiagram& d, const EngineConfig& cfg, F fld)
      : diag_(d), cfg_(cfg), fld_(std::move(fld)) {
    a_coef_ = fld_.from_int(cfg.frobenius.x2_h2);
    b_coef_ = fld_.from_int(cfg.frobenius.x2_hx);
    two_ = fld_.from_int(2);
    trace_ = cfg.trace ? cfg.trace : &std::cerr;
  }

  void run() {
    t0_ = std::chrono::steady_clock::now();
    objs_.clear();
    objs_.push_back(Obj{});
    total_terms_ = 0;
    const auto order = scan_order();
    for (std::size_t step = 0; step < order.size(); ++step) {
      StepInfo st = prepare_step(order[step]);
      merge(st);
      cancel_all();
      B_ = st.Bnew;
      check_budget();
      if (cfg_.verbosity > 0) {
        std::size_t alive = 0, entries = 0;
        for (const auto& o : objs_)
          if (o.alive) {
            ++alive;
            entries += o.out.size();
          }
        (*trace_) << "scan " << step + 1 << "/" << order.size() << ": crossing "
                  << order[step] << ", objects " << alive << ", entries "
                  << entries << ", terms " << total_terms_ << "\n";
      }
      if (cfg_.check_differential) check_d_squared();
    }
    if (!B_.empty())
      throw InternalInvariantViolation("scan finished with open boundary");
  }

  SResult extract_s() {
    // All objects now live over the empty boundary; every entry is a single
    // monomial c*h^k with k pinned by the quantum degrees.  Split off pairs
    // in order of increasing h-valuation; the corrections stay polynomial.
    for (std::uint32_t x = 0; x < objs_.size(); ++x) {
      if (!objs_[x].alive) continue;
      for (auto& [y, t] : objs_[x].out) {
        if (t.size() != 1 || t[0].dotmask != 0)
          throw InternalInvariantViolation("non-monomial entry at scan end");
        // h carries quantum degree -2, so a component c*h^k raises q by 2k
        if (objs_[y].q - objs_[x].q != 2 * t[0].hpow)
          throw InternalInvariantViolation("inhomogeneous entry at scan end");
      }
    }
    for (;;) {
      std::uint32_t px = 0, py = 0;
      int bestk = -1;
      for (std::uint32_t x = 0; x < objs_.size(); ++x) {
        if (!objs_[x].alive) continue;
        for (auto& [y, t] : objs_[x].out)
          if (bestk < 0 || t[0].hpow < bestk) {
            bestk = t[0].hpow;
            px = x;
            py = y;
          }
      }
      if (bestk < 0) break;
      const C pc = objs_[px].out.at(py)[0].c;
      const C npi = fld_.neg(fld_.inv(pc));
      std::vector<std::uint32_t> ins(objs_[py].in.begin(), objs_[py].in.end());
      for (std::uint32_t A : ins) {
        if (A == px) continue;
        const Term fa = objs_[A].out.at(py)[0];
        for (auto& [Bid, gt] : objs_[px].out) {
          if (Bid == py) continue;
          const Term gb = gt[0];
          const int nh = fa.hpow + gb.hpow - bestk;
          if (nh < 0)
            throw InternalInvariantViolation("negative valuation in split");
          const C cc = fld_.mul(fld_.mul(fa.c, gb.c), npi);
          Terms cur;
          auto it = objs_[A].out.find(Bid);
          if (it != objs_[A].out.end()) cur = it->second;
          add_term(cur, nh, 0, cc);
          set_entry(A, Bid, std::move(cur));
        }
      }
      remove_object(px);
      remove_object(py);
    }
    std::vector<std::pair<int, int>> sur;  // (homdeg, q)
    for (const auto& o : objs_)
      if (o.alive) sur.push_back({o.homdeg, o.q});
    if (sur.size() != 2 || sur[0].first != 0 || sur[1].first != 0)
      throw InternalInvariantViolation(
          "deformed homology does not have rank two in degree zero");
    int q1 = sur[0].second, q2 = sur[1].second;
    if (q1 > q2) std::swap(q1, q2);
    if (q2 - q1 != 2)
      throw InternalInvariantViolation("surviving quantum degrees not adjacent");
    const int s_cl = (q1 + q2) / 2;  // computed in the classical convention
    return SResult{-s_cl, -s_cl - 1, -s_cl + 1};
  }

  KhTable extract_kh() {
    KhTable t;
    for (const auto& o : objs_) {
      if (!o.alive) continue;
      if (!o.out.empty())
        throw InternalInvariantViolation("uncancelled entry in homology mode");
      t.dim[{-o.homdeg, -o.q}] += 1;  // output is mirrored
    }
    return t;
  }

 private:
  const PlanarDiagram& diag_;
  const EngineConfig& cfg_;
  F fld_;
  C a_coef_, b_coef_, two_;
  std::ostream* trace_;
  std::vector<Obj> objs_;
  std::vector<std::uint32_t> B_;
  std::uint64_t total_terms_ = 0;
  std::chrono::steady_clock::time_point t0_;

  // ---- bookkeeping ----

  void add_term(Terms& ts, int hpow, std::uint32_t dm, const C& c) const {
    if (fld_.is_zero(c)) return;
    auto key = [&](const Term& t) {
      return std::make_pair(t.hpow, t.dotmask);
    };
    auto it = std::lower_bound(ts.begin(), ts.end(), std::make_pair(hpow, dm),
                               [&](const Term& t, const std::pair<int, std::uint32_t>& k) {
                                 return key(t) < k;
                               });
    if (it != ts.end() && it->hpow == hpow && it->dotmask == dm) {
      it->c = fld_.add(it->c, c);
      if (fld_.is_zero(it->c)) ts.erase(it);
    } else {
      ts.insert(it, Term{hpow, dm, c});
    }
  }

  void set_entry(std::uint32_t x, std::uint32_t y, Terms t) {
    auto it = objs_[x].out.find(y);
    if (it != objs_[x].out.end()) {
      total_terms_ -= it->second.size();
      objs_[x].out.erase(it);
      objs_[y].in.erase(x);
    }
    if (!t.empty()) {
      total_terms_ += t.size();
      objs_[x].out.emplace(y, std::move(t));
      objs_[y].in.insert(x);
    }
  }

  void remove_object(std::uint32_t id) {
    for (auto& [tgt, t] : objs_[id].out) {
      total_terms_ -= t.size();
      objs_[tgt].in.erase(id);
    }
    std::vector<std::uint32_t> srcs(objs_[id].in.begin(), objs_[id].in.end());
    for (std::uint32_t s : srcs) {
      auto it = objs_[s].out.find(id);
      if (it != objs_[s].out.end()) {
        total_terms_ -= it->second.size();
        objs_[s].out.erase(it);
      }
    }
    objs_[id].out.clear();
    objs_[id].in.clear();
    objs_[id].alive = false;
  }

  void check_budget() {
    if (total_terms_ > cfg_.max_terms) {
      std::ostringstream os;
      os << "differential grew to " << total_terms_
         << " terms, budget is " << cfg_.max_terms;
      throw ResourceBudgetExceeded(os.str());
    }
    if (cfg_.max_seconds > 0) {
      const double el =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
              .count();
      if (el > cfg_.max_seconds) {
        std::ostringstream os;
        os << "scan exceeded wall-clock budget of " << cfg_.max_seconds
           << " seconds";
        throw ResourceBudgetExceeded(os.str());
      }
    }
  }

  // ---- scan order ----

  std::vector<std::uint32_t> scan_order() const {
    const std::uint32_t n = static_cast<std::uint32_t>(diag_.crossings.size());
    if (!cfg_.scan_order.empty()) {
      if (cfg_.scan_order.size() != n)
        throw MalformedSyntax("scan order must list every crossing once");
      std::vector<bool> seen(n, false);
      for (std::uint32_t c : cfg_.scan_order) {
        if (c >= n || seen[c])
          throw MalformedSyntax("scan order must be a permutation");
        seen[c] = true;
      }
      return cfg_.scan_order;
    }
    // Greedy frontier minimization: repeatedly take the crossing that closes
    // the most open arcs while opening the fewest.
    std::vector<std::uint32_t> order;
    std::vector<bool> used(n, false);
    std::set<std::uint32_t> open;
    for (std::uint32_t k = 0; k < n; ++k) {
      int best = -1, best_delta = 0, best_close = 0;
      for (std::uint32_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        int closes = 0, fresh = 0;
        const auto& p = diag_.crossings[i].p;
        for (int j = 0; j < 4; ++j) {
          const std::uint32_t a = p[j];
          bool dup = false;  // second port of a kink arc
          for (int j2 = 0; j2 < j; ++j2)
            if (p[j2] == a) dup = true;
          if (dup) continue;
          int occ = 0;
          for (int j2 = 0; j2 < 4; ++j2)
            if (p[j2] == a) ++occ;
          if (occ == 2) continue;  // closes within this crossing
          if (open.count(a))
            ++closes;
          else
            ++fresh;
        }
        if (!open.empty() && closes == 0) continue;
        const int delta = fresh - closes;
        if (best < 0 || delta < best_delta ||
            (delta == best_delta && closes > best_close)) {
          best = static_cast<int>(i);
          best_delta = delta;
          best_close = closes;
        }
      }
      if (best < 0) {
        // disconnected remainder: restart from the smallest unused crossing
        for (std::uint32_t i = 0; i < n; ++i)
          if (!used[i]) {
            best = static_cast<int>(i);
            break;
          }
      }
      used[best] = true;
      order.push_back(best);
      const auto& p = diag_.crossings[best].p;
      for (int j = 0; j < 4; ++j) {
        const std::uint32_t a = p[j];
        int occ = 0;
        for (int j2 = 0; j2 < 4; ++j2)
          if (p[j2] == a) ++occ;
        if (occ == 2) continue;
        if (open.count(a))
          open.erase(a);
        else
          open.insert(a);
      }
    }
    return order;
  }

  // ---- step preparation and object gluing ----

  StepInfo prepare_step(std::uint32_t ci) const {
    StepInfo st;
    st.ci = ci;
    const Crossing& x = diag_.crossings[ci];
    st.sign = x.sign;
    st.Bold = B_;
    const std::uint32_t nB = static_cast<std::uint32_t>(st.Bold.size());
    st.strand.assign(nB + 4, -1);
    auto old_idx = [&](std::uint32_t a) -> int {
      auto it = std::lower_bound(st.Bold.begin(), st.Bold.end(), a);
      if (it == st.Bold.end() || *it != a) return -1;
      return static_cast<int>(it - st.Bold.begin());
    };
    // strand edges through the crossing's four arcs
    for (int j = 0; j < 4; ++j) {
      const std::uint32_t a = x.p[j];
      int other = -1;
      for (int j2 = 0; j2 < 4; ++j2)
        if (j2 != j && x.p[j2] == a) other = j2;
      if (other >= 0) {
        if (other > j) {
          st.strand[nB + j] = static_cast<int>(nB) + other;
          st.strand[nB + other] = static_cast<int>(nB) + j;
        }
      } else {
        const int oi = old_idx(a);
        if (oi >= 0) {
          st.strand[nB + j] = oi;
          st.strand[oi] = static_cast<int>(nB) + j;
        }
      }
    }
    // new boundary: old points that did not close, plus fresh single arcs
    std::set<std::uint32_t> bn(st.Bold.begin(), st.Bold.end());
    for (int j = 0; j < 4; ++j) {
      const std::uint32_t a = x.p[j];
      int occ = 0;
      for (int j2 = 0; j2 < 4; ++j2)
        if (x.p[j2] == a) ++occ;
      if (occ == 2) continue;
      if (bn.count(a))
        bn.erase(a);
      else
        bn.insert(a);
    }
    st.Bnew.assign(bn.begin(), bn.end());
    st.node_of_newpoint.resize(st.Bnew.size());
    for (std::size_t p = 0; p < st.Bnew.size(); ++p) {
      const std::uint32_t a = st.Bnew[p];
      const int oi = old_idx(a);
      if (oi >= 0) {
        st.node_of_newpoint[p] = oi;
      } else {
        int port = -1;
        for (int j = 0; j < 4; ++j)
          if (x.p[j] == a) port = j;
        st.node_of_newpoint[p] = static_cast<int>(nB) + port;
      }
    }
    st.sigma_partner[0] = {1, 0, 3, 2};
    st.sigma_slot[0] = {0, 0, 1, 1};
    st.sigma_partner[1] = {3, 2, 1, 0};
    st.sigma_slot[1] = {0, 1, 1, 0};
    if (st.Bnew.size() > 64)
      throw ResourceBudgetExceeded("scan frontier exceeds 64 open arcs");
    return st;
  }

  GlueRes glue_object(const StepInfo& st, const Matching& m, int r) const {
    const int nB = static_cast<int>(st.Bold.size());
    const int nn = nB + 4;
    GlueRes g;
    g.m.assign(st.Bnew.size(), 0);
    g.arc_loc.resize(st.Bnew.size());
    std::vector<int> newpoint_of_node(nn, -1);
    for (std::size_t p = 0; p < st.Bnew.size(); ++p)
      newpoint_of_node[st.node_of_newpoint[p]] = static_cast<int>(p);
    auto pairing = [&](int node) -> int {
      if (node < nB) return m[node];
      return nB + st.sigma_partner[r][node - nB];
    };
    auto pairing_loc = [&](int node) -> Locator {
      if (node < nB) return Locator{false, static_cast<std::uint32_t>(node)};
      return Locator{true,
                     static_cast<std::uint32_t>(st.sigma_slot[r][node - nB])};
    };
    std::vector<bool> vis(nn, false);
    for (std::size_t p = 0; p < st.Bnew.size(); ++p) {
      const int start = st.node_of_newpoint[p];
      if (vis[start]) continue;
      vis[start] = true;
      const Locator first = pairing_loc(start);
      int cur = pairing(start);
      vis[cur] = true;
      while (st.strand[cur] != -1) {
        cur = st.strand[cur];
        vis[cur] = true;
        cur = pairing(cur);
        vis[cur] = true;
      }
      const int q = newpoint_of_node[cur];
      if (q < 0)
        throw InternalInvariantViolation("glue walk ended off the boundary");
      g.m[p] = static_cast<std::uint8_t>(q);
      g.m[q] = static_cast<std::uint8_t>(p);
      g.arc_loc[p] = first;
      g.arc_loc[q] = first;
    }
    for (int node = 0; node < nn; ++node) {
      if (vis[node]) continue;
      // closed circle
      g.circ_loc.push_back(pairing_loc(node));
      int cur = node;
      do {
        vis[cur] = true;
        cur = pairing(cur);
        vis[cur] = true;
        cur = st.strand[cur];
        if (cur < 0)
          throw InternalInvariantViolation("open end inside a closed circle");
      } while (cur != node);
    }
    return g;
  }

  // ---- algebra: V = F[h][X]/(X^2 - b hX - a h^2) ----

  struct VMono {
    C c;
    int h;
    int x;
  };

  void normalize(std::vector<VMono>& v) const {
    std::vector<VMono> out;
    while (!v.empty()) {
      VMono m = v.back();
      v.pop_back();
      if (fld_.is_zero(m.c)) continue;
      if (m.x <= 1) {
        out.push_back(m);
        continue;
      }
      v.push_back(VMono{fld_.mul(m.c, b_coef_), m.h + 1, m.x - 1});
      v.push_back(VMono{fld_.mul(m.c, a_coef_), m.h + 2, m.x - 2});
    }
    v = std::move(out);
  }

  struct Branch {
    C c;
    int h;
    std::uint64_t bits;  // local circle labels, bit set = X
  };

  // Evaluate one surface piece: dots and genus on a component with nb
  // boundary circles.  nb = 0 closes off to a scalar; otherwise the label is
  // distributed over the circles by iterated comultiplication.
  std::vector<Branch> eval_piece(int dots, int genus, int nb) const {
    std::vector<VMono> monos{VMono{fld_.one(), 0, dots}};
    normalize(monos);
    for (int gidx = 0; gidx < genus; ++gidx) {
      std::vector<VMono> nx;
      for (const VMono& m : monos) {
        nx.push_back(VMono{fld_.mul(m.c, two_), m.h, m.x + 1});
        nx.push_back(VMono{fld_.neg(fld_.mul(m.c, b_coef_)), m.h + 1, m.x});
      }
      normalize(nx);
      monos = std::move(nx);
    }
    std::vector<Branch> out;
    if (nb == 0) {
      for (const VMono& m : monos)
        if (m.x == 1) out.push_back(Branch{m.c, m.h, 0});
      return out;
    }
    // states: labels fixed for circles [0, i), pending label for circle i
    struct State {
      C c;
      int h;
      std::uint64_t bits;
      int pend;
    };
    std::vector<State> states;
    for (const VMono& m : monos) states.push_back({m.c, m.h, 0, m.x});
    for (int i = 0; i + 1 < nb; ++i) {
      std::vector<State> nx;
      for (const State& s : states) {
        const std::uint64_t bit = 1ull << i;
        if (s.pend == 1) {
          nx.push_back({s.c, s.h, s.bits | bit, 1});
          if (!fld_.is_zero(a_coef_))
            nx.push_back({fld_.mul(s.c, a_coef_), s.h + 2, s.bits, 0});
        } else {
          nx.push_back({s.c, s.h, s.bits, 1});
          nx.push_back({s.c, s.h, s.bits | bit, 0});
          if (!fld_.is_zero(b_coef_))
            nx.push_back(
                {fld_.neg(fld_.mul(s.c, b_coef_)), s.h + 1, s.bits, 0});
        }
      }
      states = std::move(nx);
    }
    for (const State& s : states) {
      std::uint64_t bits = s.bits;
      if (s.pend == 1) bits |= 1ull << (nb - 1);
      out.push_back(Branch{s.c, s.h, bits});
    }
    return out;
  }

  // ---- generic glued-surface evaluation ----

  struct Topology {
    Gluer g;
    int n_units = 0;
    std::vector<int> loop_unit;  // result loop -> a unit on its piece
    // built lazily by finish():
    std::vector<int> piece_of_root;
    struct Piece {
      int chi;
      std::vector<int> loops;  // ascending result-loop ids
    };
    std::vector<Piece> pieces;
    std::vector<int> unit_piece;  // unit -> piece index

    void finish() {
      std::map<int, int> root_to_piece;
      unit_piece.resize(n_units);
      for (int u = 0; u < n_units; ++u) {
        const int r = g.find(u);
        auto [it, fresh] = root_to_piece.try_emplace(
            r, static_cast<int>(pieces.size()));
        if (fresh) pieces.push_back(Piece{g.chi[r], {}});
        unit_piece[u] = it->second;
      }
      for (std::size_t l = 0; l < loop_unit.size(); ++l)
        pieces[unit_piece[loop_unit[l]]].loops.push_back(static_cast<int>(l));
    }
  };

  // Accumulate base_c*h^base_h times the evaluation of the decorated surface
  // into sink.  unit_dots gives the dots sitting on each unit.
  void evaluate(Topology& topo, const std::vector<int>& unit_dots, C base_c,
                int base_h, Terms& sink) const {
    struct PieceBr {
      std::vector<Branch> br;
      const std::vector<int>* loops;
    };
    std::vector<PieceBr> pbs;
    std::vector<int> piece_dots(topo.pieces.size(), 0);
    for (int u = 0; u < topo.n_units; ++u)
      piece_dots[topo.unit_piece[u]] += unit_dots[u];
    for (std::size_t pi = 0; pi < topo.pieces.size(); ++pi) {
      const auto& pc = topo.pieces[pi];
      const int nb = static_cast<int>(pc.loops.size());
      const int g2 = 2 - pc.chi - nb;
      if (g2 < 0 || (g2 & 1))
        throw InternalInvariantViolation("glued piece has invalid genus");
      PieceBr pb;
      pb.br = eval_piece(piece_dots[pi], g2 / 2, nb);
      if (pb.br.empty()) return;  // the whole product vanishes
      pb.loops = &pc.loops;
      pbs.push_back(std::move(pb));
    }
    // cartesian product over pieces
    struct Frame {
      C c;
      int h;
      std::uint32_t mask;
    };
    std::vector<Frame> cur{{base_c, base_h, 0}};
    for (const PieceBr& pb : pbs) {
      std::vector<Frame> nx;
      nx.reserve(cur.size() * pb.br.size());
      for (const Frame& f : cur)
        for (const Branch& b : pb.br) {
          std::uint32_t mask = f.mask;
          for (std::size_t j = 0; j < pb.loops->size(); ++j)
            if (b.bits >> j & 1) mask |= 1u << (*pb.loops)[j];
          nx.push_back(Frame{fld_.mul(f.c, b.c), f.h + b.h, mask});
        }
      cur = std::move(nx);
    }
    for (const Frame& f : cur) add_term(sink, f.h, f.mask, f.c);
  }

  // Enumerate the delooping branches of a set of capped circles: sources are
  // capped by births, targets by the dual deaths (whose plus cap is the
  // two-term X - bh).  Calls fn(extra unit dots, coeff, hpow) per branch.
  template <class Fn>
  void cap_branches(const std::vector<int>& cap_units,
                    std::uint32_t src_count, std::uint32_t src_mask,
                    std::uint32_t tgt_mask, Fn&& fn) const {
    // bit set in mask = minus summand
    const std::uint32_t tgt_count =
        static_cast<std::uint32_t>(cap_units.size()) - src_count;
    std::vector<std::pair<int, int>> fixed;  // (unit, dots)
    std::vector<int> plus_tgts;
    for (std::uint32_t i = 0; i < src_count; ++i)
      if (src_mask >> i & 1) fixed.push_back({cap_units[i], 1});
    for (std::uint32_t j = 0; j < tgt_count; ++j) {
      const int u = cap_units[src_count + j];
      if (!(tgt_mask >> j & 1)) plus_tgts.push_back(u);
    }
    const std::uint32_t nb = static_cast<std::uint32_t>(plus_tgts.size());
    for (std::uint32_t sel = 0; sel < (1u << nb); ++sel) {
      C mult = fld_.one();
      int h = 0;
      std::vector<std::pair<int, int>> dots = fixed;
      bool dead = false;
      for (std::uint32_t j = 0; j < nb; ++j) {
        if (sel >> j & 1) {
          // -bh branch of the plus death
          mult = fld_.neg(fld_.mul(mult, b_coef_));
          h += 1;
          if (fld_.is_zero(mult)) {
            dead = true;
            break;
          }
        } else {
          dots.push_back({plus_tgts[j], 1});
        }
      }
      if (dead) continue;
      fn(dots, mult, h);
    }
  }

  // ---- the merge step ----

  void merge(const StepInfo& st) {
    const std::uint32_t nold = static_cast<std::uint32_t>(objs_.size());
    struct Glued {
      GlueRes g[2];
      std::uint32_t base[2];  // first new object id for each resolution
    };
    std::map<std::uint32_t, Glued> glues;
    std::vector<Obj> nobjs;
    for (std::uint32_t o = 0; o < nold; ++o) {
      if (!objs_[o].alive) continue;
      Glued gl;
      for (int r = 0; r < 2; ++r) {
        gl.g[r] = glue_object(st, objs_[o].m, r);
        const std::uint32_t k =
            static_cast<std::uint32_t>(gl.g[r].circ_loc.size());
        if (k > 20)
          throw ResourceBudgetExceeded("too many circles in one scan step");
        gl.base[r] = static_cast<std::uint32_t>(nobjs.size());
        for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
          Obj no;
          no.m = gl.g[r].m;
          no.homdeg = objs_[o].homdeg + r + (st.sign < 0 ? -1 : 0);
          int q = objs_[o].q + r + (st.sign > 0 ? 1 : -2);
          for (std::uint32_t i = 0; i < k; ++i)
            q += (mask >> i & 1) ? -1 : 1;  // bit set = minus summand
          no.q = q;
          nobjs.push_back(std::move(no));
        }
      }
      glues.emplace(o, std::move(gl));
    }

    std::vector<Obj> old = std::move(objs_);
    objs_ = std::move(nobjs);
    total_terms_ = 0;

    const int nB = static_cast<int>(st.Bold.size());

    // saddle entries: (O,0,xi) -> (O,1,xi')
    for (auto& [o, gl] : glues) {
      const Matching& m = old[o].m;
      Loops lo = loops_of(m, m);
      const int L = lo.count;
      const std::uint32_t k0 =
          static_cast<std::uint32_t>(gl.g[0].circ_loc.size());
      const std::uint32_t k1 =
          static_cast<std::uint32_t>(gl.g[1].circ_loc.size());
      Topology topo;
      topo.n_units = L + 1 + static_cast<int>(k0 + k1);
      topo.g.init(topo.n_units);
      auto unit_of = [&](const Locator& loc, int strip_unit_base) {
        return loc.strip ? strip_unit_base : lo.of_point[loc.idx];
      };
      // both smoothing strips are the one saddle unit L
      for (int j = 0; j < 4; ++j) {
        const int peer = st.strand[nB + j];
        if (peer < 0) continue;
        if (peer >= nB) {
          if (peer > nB + j) topo.g.edge(L, L);
        } else {
          topo.g.edge(lo.of_point[peer], L);
        }
      }
      std::vector<int> cap_units;
      for (std::uint32_t i = 0; i < k0; ++i) {
        const int cu = L + 1 + static_cast<int>(i);
        topo.g.cap(cu, unit_of(gl.g[0].circ_loc[i], L));
        cap_units.push_back(cu);
      }
      for (std::uint32_t i = 0; i < k1; ++i) {
        const int cu = L + 1 + static_cast<int>(k0 + i);
        topo.g.cap(cu, unit_of(gl.g[1].circ_loc[i], L));
        cap_units.push_back(cu);
      }
      Loops ln = loops_of(gl.g[0].m, gl.g[1].m);
      if (ln.count > 32)
        throw ResourceBudgetExceeded("more than 32 loops between objects");
      topo.loop_unit.assign(ln.count, -1);
      for (std::size_t p = 0; p < st.Bnew.size(); ++p) {
        const int l = ln.of_point[p];
        if (topo.loop_unit[l] < 0)
          topo.loop_unit[l] = unit_of(gl.g[0].arc_loc[p], L);
      }
      topo.finish();
      const bool odd = ((old[o].homdeg % 2) + 2) % 2 == 1;
      const C kz = odd ? fld_.neg(fld_.one()) : fld_.one();
      for (std::uint32_t m0 = 0; m0 < (1u << k0); ++m0) {
        for (std::uint32_t m1 = 0; m1 < (1u << k1); ++m1) {
          Terms sink;
          cap_branches(cap_units, k0, m0, m1,
                       [&](const std::vector<std::pair<int, int>>& dots,
                           const C& mult, int h) {
                         std::vector<int> ud(topo.n_units, 0);
                         for (auto [u, d] : dots) ud[u] += d;
                         evaluate(topo, ud, fld_.mul(kz, mult), h, sink);
                       });
          if (!sink.empty())
            set_entry(gl.base[0] + m0, gl.base[1] + m1, std::move(sink));
        }
      }
    }

    // translated entries: (O,r,xi) -> (O',r,xi') for each old entry O -> O'
    for (auto& [o, gl] : glues) {
      for (auto& [op, terms] : old[o].out) {
        auto it2 = glues.find(op);
        if (it2 == glues.end()) continue;
        Glued& gl2 = it2->second;
        Loops lo = loops_of(old[o].m, old[op].m);
        const int L = lo.count;
        for (int r = 0; r < 2; ++r) {
          const std::uint32_t k0 =
              static_cast<std::uint32_t>(gl.g[r].circ_loc.size());
          const std::uint32_t k1 =
              static_cast<std::uint32_t>(gl2.g[r].circ_loc.size());
          Topology topo;
          topo.n_units = L + 2 + static_cast<int>(k0 + k1);
          topo.g.init(topo.n_units);
          auto unit_of = [&](const Locator& loc) {
            return loc.strip ? L + static_cast<int>(loc.idx)
                             : lo.of_point[loc.idx];
          };
          for (int j = 0; j < 4; ++j) {
            const int peer = st.strand[nB + j];
            if (peer < 0) continue;
            const int su = L + st.sigma_slot[r][j];
            if (peer >= nB) {
              if (peer > nB + j)
                topo.g.edge(su, L + st.sigma_slot[r][peer - nB]);
            } else {
              topo.g.edge(lo.of_point[peer], su);
            }
          }
          std::vector<int> cap_units;
          for (std::uint32_t i = 0; i < k0; ++i) {
            const int cu = L + 2 + static_cast<int>(i);
            topo.g.cap(cu, unit_of(gl.g[r].circ_loc[i]));
            cap_units.push_back(cu);
          }
          for (std::uint32_t i = 0; i < k1; ++i) {
            const int cu = L + 2 + static_cast<int>(k0 + i);
            topo.g.cap(cu, unit_of(gl2.g[r].circ_loc[i]));
            cap_units.push_back(cu);
          }
          Loops ln = loops_of(gl.g[r].m, gl2.g[r].m);
          if (ln.count > 32)
            throw ResourceBudgetExceeded("more than 32 loops between objects");
          topo.loop_unit.assign(ln.count, -1);
          for (std::size_t p = 0; p < st.Bnew.size(); ++p) {
            const int l = ln.of_point[p];
            if (topo.loop_unit[l] < 0)
              topo.loop_unit[l] = unit_of(gl.g[r].arc_loc[p]);
          }
          topo.finish();
          for (std::uint32_t m0 = 0; m0 < (1u << k0); ++m0) {
            for (std::uint32_t m1 = 0; m1 < (1u << k1); ++m1) {
              Terms sink;
              for (const Term& t : terms) {
                cap_branches(
                    cap_units, k0, m0, m1,
                    [&](const std::vector<std::pair<int, int>>& dots,
                        const C& mult, int h) {
                      std::vector<int> ud(topo.n_units, 0);
                      for (int li = 0; li < L; ++li)
                        if (t.dotmask >> li & 1) ud[li] += 1;
                      for (auto [u, d] : dots) ud[u] += d;
                      evaluate(topo, ud, fld_.mul(t.c, mult), t.hpow + h,
                               sink);
                    });
              }
              if (!sink.empty()) {
                Terms cur;
                const std::uint32_t sid = gl.base[r] + m0;
                const std::uint32_t tid = gl2.base[r] + m1;
                auto eit = objs_[sid].out.find(tid);
                if (eit != objs_[sid].out.end()) cur = eit->second;
                for (const Term& t : sink) add_term(cur, t.hpow, t.dotmask, t.c);
                set_entry(sid, tid, std::move(cur));
              }
            }
          }
        }
      }
    }
  }

  // ---- vertical composition (used by cancellation and the d^2 check) ----

  Terms compose(std::uint32_t A, std::uint32_t X, std::uint32_t Bid,
                const Terms& f, const Terms& g, const C& mult) {
    const Matching& ma = objs_[A].m;
    const Matching& mm = objs_[X].m;  // == middle object's matching
    const Matching& mb = objs_[Bid].m;
    Loops l1 = loops_of(ma, mm);
    Loops l2 = loops_of(mm, mb);
    const int L1 = l1.count;
    Topology topo;
    topo.n_units = L1 + l2.count;
    topo.g.init(topo.n_units);
    for (std::size_t p = 0; p < mm.size(); ++p)
      if (p < mm[p]) topo.g.edge(l1.of_point[p], L1 + l2.of_point[p]);
    Loops ln = loops_of(ma, mb);
    if (ln.count > 32)
      throw ResourceBudgetExceeded("more than 32 loops between objects");
    topo.loop_unit.assign(ln.count, -1);
    for (std::size_t p = 0; p < ma.size(); ++p) {
      const int l = ln.of_point[p];
      if (topo.loop_unit[l] < 0) topo.loop_unit[l] = l1.of_point[p];
    }
    topo.finish();
    Terms sink;
    std::vector<int> ud(topo.n_units, 0);
    for (const Term& ft : f) {
      for (const Term& gt : g) {
        std::fill(ud.begin(), ud.end(), 0);
        for (int i = 0; i < L1; ++i)
          if (ft.dotmask >> i & 1) ud[i] += 1;
        for (int j = 0; j < l2.count; ++j)
          if (gt.dotmask >> j & 1) ud[L1 + j] += 1;
        evaluate(topo, ud, fld_.mul(fld_.mul(ft.c, gt.c), mult),
                 ft.hpow + gt.hpow, sink);
      }
    }
    return sink;
  }

  // ---- cancellation ----

  bool find_pivot(std::uint32_t& px, std::uint32_t& py) {
    for (std::uint32_t x = 0; x < objs_.size(); ++x) {
      if (!objs_[x].alive) continue;
      for (auto& [y, t] : objs_[x].out) {
        if (t.size() != 1 || t[0].hpow != 0 || t[0].dotmask != 0) continue;
        if (objs_[x].m != objs_[y].m) continue;
        if (objs_[x].q != objs_[y].q) continue;
        px = x;
        py = y;
        return true;
      }
    }
    return false;
  }

  void cancel_all() {
    std::uint32_t x, y;
    while (find_pivot(x, y)) {
      const C c = objs_[x].out.at(y)[0].c;
      const C nic = fld_.neg(fld_.inv(c));
      std::vector<std::uint32_t> ins(objs_[y].in.begin(), objs_[y].in.end());
      std::vector<std::uint32_t> outs;
      for (auto& [b, t] : objs_[x].out)
        if (b != y) outs.push_back(b);
      for (std::uint32_t A : ins) {
        if (A == x) continue;
        const Terms f = objs_[A].out.at(y);
        for (std::uint32_t Bid : outs) {
          const Terms& g = objs_[x].out.at(Bid);
          Terms comp = compose(A, x, Bid, f, g, nic);
          if (comp.empty()) continue;
          Terms cur;
          auto it = objs_[A].out.find(Bid);
          if (it != objs_[A].out.end()) cur = it->second;
          for (const Term& t : comp) add_term(cur, t.hpow, t.dotmask, t.c);
          set_entry(A, Bid, std::move(cur));
        }
      }
      remove_object(x);
      remove_object(y);
      check_budget();
    }
  }

  void check_d_squared() {
    for (std::uint32_t x = 0; x < objs_.size(); ++x) {
      if (!objs_[x].alive) continue;
      std::map<std::uint32_t, Terms> acc;
      for (auto& [y, f] : objs_[x].out)
        for (auto& [z, g] : objs_[y].out) {
          Terms comp = compose(x, y, z, f, g, fld_.one());
          Terms& cur = acc[z];
          for (const Term& t : comp) add_term(cur, t.hpow, t.dotmask, t.c);
        }
      for (auto& [z, t] : acc)
        if (!t.empty())
          throw InternalInvariantViolation(
              "differential does not square to zero");
    }
  }
};

template <class F>
SResult run_s(const PlanarDiagram& d, const EngineConfig& cfg, F fld) {
  Scanner<F> sc(d, cfg, std::move(fld));
  sc.run();
  return sc.extract_s();
}

template <class F>
KhTable run_kh(const PlanarDiagram& d, const EngineConfig& cfg, F fld) {
  Scanner<F> sc(d, cfg, std::move(fld));
  sc.run();
  return sc.extract_kh();
}

}  // namespace

SResult s_invariant(const PlanarDiagram& d, const EngineConfig& cfg) {
  if (d.crossings.empty()) return SResult{0, -1, 1};
  // the deformation must split into distinct idempotents for the pairing
  // argument; reject an inseparable choice for the selected field
  const long disc = 4L * cfg.frobenius.x2_h2 +
                    static_cast<long>(cfg.frobenius.x2_hx) * cfg.frobenius.x2_hx;
  if (cfg.frobenius.x2_h2 == 0 && cfg.frobenius.x2_hx == 0)
    throw MalformedSyntax(
        "the undeformed algebra does not determine the s-invariant");
  if (cfg.field == FieldKind::Prime) {
    PrimeField f(cfg.prime);
    if (f.is_zero(f.from_int(disc)))
      throw MalformedSyntax(
          "deformation is inseparable over this field; use the hX form");
    return run_s(d, cfg, std::move(f));
  }
  if (disc == 0)
    throw MalformedSyntax("deformation is inseparable over the rationals");
  return run_s(d, cfg, RationalField{});
}

KhTable kh_homology(const PlanarDiagram& d, const EngineConfig& cfg) {
  EngineConfig c2 = cfg;
  c2.frobenius = FrobeniusParams{0, 0};
  if (d.crossings.empty()) {
    KhTable t;
    t.dim[{0, -1}] = 1;
    t.dim[{0, 1}] = 1;
    return t;
  }
  if (c2.field == FieldKind::Prime)
    return run_kh(d, c2, PrimeField(c2.prime));
  return run_kh(d, c2, RationalField{});
}

Laurent KhTable::graded_euler() const {
  Laurent l;
  for (auto& [k, v] : dim) {
    const bool odd = ((k.first % 2) + 2) % 2 == 1;
    l.add_term(k.second,
               odd ? -static_cast<long long>(v) : static_cast<long long>(v));
  }
  return l;
}

std::string KhTable::str() const {
  std::ostringstream os;
  for (auto& [k, v] : dim)
    os << "i=" << k.first << " q=" << k.second << " dim=" << v << "\n";
  return os.str();
}

Laurent jones_polynomial(const PlanarDiagram& d) {
  const std::size_t c = d.crossings.size();
  if (c == 0) {
    Laurent l;
    l.add_term(1, 1);
    l.add_term(-1, 1);
    return l;
  }
  if (c > 20)
    throw ResourceBudgetExceeded(
        "state-sum Jones is capped at 20 crossings");
  const int w = writhe(d);
  // delta = -A^2 - A^-2; powers of delta up to 2c+1 circles
  std::vector<Laurent> dpow(2 * c + 2);
  dpow[0] = Laurent::mono(0, 1);
  Laurent delta;
  delta.add_term(2, -1);
  delta.add_term(-2, -1);
  for (std::size_t i = 1; i < dpow.size(); ++i) dpow[i] = dpow[i - 1] * delta;

  Laurent acc;  // sum over states of A^(a-b) delta^circles
  std::vector<int> uf(4 * c);
  auto find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  auto unite = [&](int x, int y) {
    x = find(x);
    y = find(y);
    if (x != y) uf[x] = y;
  };
  std::vector<std::vector<int>> arc_ports(d.n_arcs + 1);
  for (std::size_t i = 0; i < c; ++i)
    for (int j = 0; j < 4; ++j)
      arc_ports[d.crossings[i].p[j]].push_back(static_cast<int>(4 * i) + j);
  for (std::uint64_t s = 0; s < (1ull << c); ++s) {
    std::iota(uf.begin(), uf.end(), 0);
    int exp = 0;
    for (std::size_t i = 0; i < c; ++i) {
      const int base = static_cast<int>(4 * i);
      if (s >> i & 1) {
        exp -= 1;  // B-smoothing
        unite(base + 0, base + 3);
        unite(base + 1, base + 2);
      } else {
        exp += 1;  // A-smoothing
        unite(base + 0, base + 1);
        unite(base + 2, base + 3);
      }
    }
    for (std::uint32_t a = 1; a <= d.n_arcs; ++a)
      if (arc_ports[a].size() == 2) unite(arc_ports[a][0], arc_ports[a][1]);
    int circles = 0;
    for (int x = 0; x < static_cast<int>(4 * c); ++x)
      if (find(x) == x) ++circles;
    acc = acc + Laurent::mono(exp, 1) * dpow[circles];
  }
  // normalize: (-A^3)^(-w) times the sum, with one spare delta factor
  Laurent total = acc * Laurent::mono(-3 * w, (w % 2 == 0) ? 1 : -1);
  // classical variable change A^2 -> -q^-1, then mirror q -> q^-1
  Laurent out;
  for (auto [e, v] : total.c) {
    if (e % 2 != 0)
      throw InternalInvariantViolation("odd power in the state sum");
    const int t = e / 2;
    const bool odd = ((t % 2) + 2) % 2 == 1;
    out.add_term(t, odd ? -v : v);
  }
  return out;
}

}  // namespace knotcord
