#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <string>
#include <vector>

#include "flow_trace.hpp"
#include "knotcord/diagram.hpp"
#include "knotcord/errors.hpp"

using namespace knotcord;

namespace {

const char* kTrefoil = "PD[X[1,4,2,3],X[3,6,4,5],X[5,2,6,1]]";
const char* kFig8 = "PD[X[4,2,5,1],X[8,6,1,5],X[6,3,7,4],X[2,7,3,8]]";

PlanarDiagram rotate_labels(const PlanarDiagram& d, uint32_t rot) {
  std::vector<std::array<uint32_t, 4>> tuples;
  for (const auto& c : d.crossings) {
    std::array<uint32_t, 4> t{};
    for (size_t k = 0; k < 4; ++k) t[k] = (c.p[k] - 1 + rot) % d.n_arcs + 1;
    tuples.push_back(t);
  }
  return make_diagram(tuples);
}

}  // namespace

TEST_CASE("zero-crossing unknot") {
  PlanarDiagram u = parse_pd("PD[]");
  CHECK(u.crossings.empty());
  CHECK(u.n_arcs == 1);
  CHECK(serialize_pd(u) == "PD[]");
  CHECK(writhe(u) == 0);
  CHECK(seifert_circle_count(u) == 1);
  CHECK(mirror(u) == u);
  CHECK(reverse_orientation(u) == u);
  CHECK(canonical_pd(u) == "PD[]");
  CHECK(make_diagram({}) == u);
}

TEST_CASE("right trefoil fixture") {
  PlanarDiagram t = parse_pd(kTrefoil);
  CHECK(t.crossings.size() == 3);
  CHECK(t.n_arcs == 6);
  for (const auto& c : t.crossings) CHECK(c.sign == +1);
  CHECK(writhe(t) == 3);
  CHECK(positive_crossings(t) == 3);
  CHECK(negative_crossings(t) == 0);
  CHECK(serialize_pd(t) == kTrefoil);

  PlanarDiagram mt = mirror(t);
  CHECK(writhe(mt) == -3);
  CHECK(mirror(mt) == t);

  PlanarDiagram rt = reverse_orientation(t);
  CHECK(writhe(rt) == 3);
  CHECK(reverse_orientation(rt) == t);
}

TEST_CASE("whitespace is insignificant") {
  PlanarDiagram a = parse_pd(kTrefoil);
  PlanarDiagram b =
      parse_pd(" PD[ X[1,4, 2,3] ,\tX[3 ,6,4,5],X[5,2,6,1] ]\n");
  CHECK(a == b);
}

TEST_CASE("one-crossing kinks: signs and mirror pairing") {
  PlanarDiagram pp = parse_pd("PD[X[1,1,2,2]]");
  PlanarDiagram nm = parse_pd("PD[X[1,2,2,1]]");
  PlanarDiagram nm2 = parse_pd("PD[X[2,1,1,2]]");
  PlanarDiagram pp2 = parse_pd("PD[X[2,2,1,1]]");
  CHECK(writhe(pp) == +1);
  CHECK(writhe(nm) == -1);
  CHECK(writhe(nm2) == -1);
  CHECK(writhe(pp2) == +1);
  CHECK(seifert_circle_count(pp) == 2);
  CHECK(seifert_circle_count(nm) == 2);

  CHECK(mirror(pp) == nm2);
  CHECK(mirror(nm2) == pp);
  CHECK(mirror(nm) == pp2);

  // Flow oracle agrees on these coherent one-crossing diagrams.
  CHECK(FlowTrace(pp).signs == std::vector<int>{+1});
  CHECK(FlowTrace(nm).signs == std::vector<int>{-1});
  CHECK(FlowTrace(nm2).signs == std::vector<int>{-1});
  CHECK(FlowTrace(pp2).signs == std::vector<int>{+1});
}

TEST_CASE("figure-eight fixture: signs from independent flow oracle") {
  PlanarDiagram f = parse_pd(kFig8);
  CHECK(f.crossings.size() == 4);
  CHECK(f.n_arcs == 8);

  FlowTrace oracle(f);
  CHECK(oracle.single_cycle_in_label_order(8));
  std::vector<int> lib_signs;
  for (const auto& c : f.crossings) lib_signs.push_back(c.sign);
  CHECK(lib_signs == oracle.signs);
  CHECK(lib_signs == std::vector<int>{+1, +1, -1, -1});
  CHECK(writhe(f) == 0);
  CHECK(seifert_circle_count(f) == 3);

  CHECK(parse_pd(serialize_pd(f)) == f);
  CHECK(mirror(mirror(f)) == f);
  CHECK(writhe(mirror(f)) == 0);
  CHECK(reverse_orientation(reverse_orientation(f)) == f);
  CHECK(writhe(reverse_orientation(f)) == 0);
}

TEST_CASE("connected sum") {
  PlanarDiagram u = parse_pd("PD[]");
  PlanarDiagram kink = parse_pd("PD[X[1,1,2,2]]");
  PlanarDiagram f = parse_pd(kFig8);

  CHECK(connected_sum(u, f) == f);
  CHECK(connected_sum(f, u) == f);

  PlanarDiagram kk = connected_sum(kink, kink);
  CHECK(kk.crossings.size() == 2);
  CHECK(kk.n_arcs == 4);
  CHECK(writhe(kk) == 2);
  CHECK(seifert_circle_count(kk) == 3);
  FlowTrace kk_oracle(kk);
  CHECK(kk_oracle.single_cycle_in_label_order(4));

  PlanarDiagram ff = connected_sum(f, f);
  CHECK(ff.crossings.size() == 8);
  CHECK(writhe(ff) == 0);
  CHECK(seifert_circle_count(ff) == 5);
  CHECK(FlowTrace(ff).single_cycle_in_label_order(16));

  PlanarDiagram fk = connected_sum(f, kink);
  CHECK(writhe(fk) == 1);
  CHECK(seifert_circle_count(fk) == 4);  // 3 + 2 - 1

  // Round-trip through text survives the splice.
  CHECK(parse_pd(serialize_pd(ff)) == ff);
}

TEST_CASE("canonical form is rotation-invariant and idempotent") {
  PlanarDiagram f = parse_pd(kFig8);
  std::string c0 = canonical_pd(f);
  for (uint32_t rot = 1; rot < f.n_arcs; ++rot)
    CHECK(canonical_pd(rotate_labels(f, rot)) == c0);
  PlanarDiagram cf = canonical(f);
  CHECK(canonical(cf) == cf);
  CHECK(writhe(cf) == writhe(f));
  CHECK(seifert_circle_count(cf) == seifert_circle_count(f));

  PlanarDiagram t = parse_pd(kTrefoil);
  std::string t0 = canonical_pd(t);
  for (uint32_t rot = 1; rot < t.n_arcs; ++rot)
    CHECK(canonical_pd(rotate_labels(t, rot)) == t0);
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_pd(""), MalformedSyntax);
  CHECK_THROWS_AS(parse_pd("PD"), MalformedSyntax);
  CHECK_THROWS_AS(parse_pd("pd[]"), MalformedSyntax);
  CHECK_THROWS_AS(parse_pd("PD[]x"), MalformedSyntax);
  CHECK_THROWS_AS(parse_pd("PD[X[1,2,3]]"), MalformedSyntax);
  CHECK_THROWS_AS(parse_pd("PD[X[1,2,3,4]"), MalformedSyntax);
  CHECK_THROWS_AS(parse_pd("PD[X[1,2,3,4],]"), MalformedSyntax);
  CHECK_THROWS_AS(parse_pd("PD[Y[1,2,3,4]]"), MalformedSyntax);
  CHECK_THROWS_AS(parse_pd("PD[X[1,2,0,4]]"), MalformedSyntax);
  CHECK_THROWS_AS(parse_pd("PD[X[1,2,99999999999,4]]"), MalformedSyntax);

  CHECK_THROWS_AS(parse_pd("PD[X[1,1,1,2]]"), ArcMultiplicityError);
  CHECK_THROWS_AS(parse_pd("PD[X[1,5,2,3]]"), ArcMultiplicityError);
  CHECK_THROWS_AS(parse_pd("PD[X[1,4,2,3],X[3,6,4,5],X[5,2,6,3]]"),
                  ArcMultiplicityError);

  // A two-component link labeled per component: the wraparound under-strand
  // transition 4->3 betrays it.
  CHECK_THROWS_AS(parse_pd("PD[X[4,1,3,2],X[2,3,1,4]]"), MultiComponentError);
  // Under-strand not following arc order.
  CHECK_THROWS_AS(parse_pd("PD[X[1,2,3,4],X[1,2,3,4]]"), MultiComponentError);
  CHECK_THROWS_AS(parse_pd("PD[X[1,3,4,2],X[3,1,2,4]]"), MultiComponentError);
}
