#pragma once
#include <doctest.h>

#include <array>
#include <utility>
#include <vector>

#include "knotcord/diagram.hpp"

// Independent sign oracle.  Resolves every arc occurrence to flowing-in or
// flowing-out by constraint propagation (each arc has exactly one head and
// one tail), then reads each crossing's sign off the resolved over-strand
// direction: over-out at p[1] means positive, at p[3] negative.  Shares no
// code with the library's successor-based rule; only meaningful on
// traversal-coherent fixtures, which is what we feed it.
struct FlowTrace {
  std::vector<std::array<int, 4>> role;  // 0 unknown, 1 in, 2 out
  std::vector<int> signs;
  std::vector<uint32_t> walk;  // walk[a] = arc following a along the strand

  explicit FlowTrace(const knotcord::PlanarDiagram& d) {
    const size_t nc = d.crossings.size();
    role.assign(nc, {0, 0, 0, 0});
    std::vector<std::vector<std::pair<size_t, size_t>>> occ(d.n_arcs + 1);
    for (size_t ci = 0; ci < nc; ++ci)
      for (size_t k = 0; k < 4; ++k) occ[d.crossings[ci].p[k]].push_back({ci, k});
    for (auto& o : occ)
      if (!o.empty()) REQUIRE(o.size() == 2);

    std::vector<std::pair<size_t, size_t>> work;
    auto set_role = [&](size_t ci, size_t k, int r) {
      if (role[ci][k] == r) return;
      REQUIRE(role[ci][k] == 0);
      role[ci][k] = r;
      work.push_back({ci, k});
    };
    for (size_t ci = 0; ci < nc; ++ci) {
      set_role(ci, 0, 1);
      set_role(ci, 2, 2);
    }
    while (!work.empty()) {
      auto [ci, k] = work.back();
      work.pop_back();
      const uint32_t a = d.crossings[ci].p[k];
      // The arc's other occurrence gets the opposite role.
      for (auto [cj, kj] : occ[a])
        if (!(cj == ci && kj == k)) set_role(cj, kj, 3 - role[ci][k]);
      // An over port's role fixes its partner over port.
      if (k == 1 || k == 3) set_role(ci, 4 - k, 3 - role[ci][k]);
    }

    signs.resize(nc);
    walk.assign(d.n_arcs + 1, 0);
    for (size_t ci = 0; ci < nc; ++ci) {
      REQUIRE(role[ci][1] != 0);
      REQUIRE(role[ci][3] != 0);
      signs[ci] = role[ci][1] == 2 ? +1 : -1;
      const auto& p = d.crossings[ci].p;
      walk[p[0]] = p[2];
      if (role[ci][1] == 1)
        walk[p[1]] = p[3];
      else
        walk[p[3]] = p[1];
    }
  }

  bool single_cycle_in_label_order(uint32_t n) const {
    for (uint32_t a = 1; a <= n; ++a)
      if (walk[a] != a % n + 1) return false;
    return true;
  }
};
