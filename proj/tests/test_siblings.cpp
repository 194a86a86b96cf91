#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "stablecut/siblings.hpp"

using namespace stablecut;

namespace {

bool same_school(const Matching& m, int a, int abar) {
  return m.assign[a] != OUTSIDE && m.assign[a] == m.assign[abar];
}

bool same_activity(const ActivityStructure& acts, const Matching& m, int a, int abar) {
  return m.assign[a] != OUTSIDE && m.assign[abar] != OUTSIDE &&
         acts.group_of[m.assign[a]] == acts.group_of[m.assign[abar]];
}

int count_separated(const Matching& m, const std::vector<std::pair<int, int>>& pairs) {
  int out = 0;
  for (auto [a, abar] : pairs)
    if (!same_school(m, a, abar)) ++out;
  return out;
}

std::vector<std::pair<int, int>> index_pairs(const fixtures::sibling_market& f) {
  std::vector<std::pair<int, int>> out;
  for (const auto& [a, abar] : f.pairs)
    out.push_back({f.inst.student_index(a), f.inst.student_index(abar)});
  return out;
}

ActivityStructure acts_of(const fixtures::sibling_market& f) {
  std::vector<std::vector<int>> classes;
  for (const auto& group : f.activity_schools) {
    std::vector<int> cls;
    for (const auto& id : group) cls.push_back(f.inst.school_index(id));
    classes.push_back(std::move(cls));
  }
  return ActivityStructure::of(f.inst, f.activity_ids, classes);
}

std::vector<char> side_of_upset(const FlowNetwork& net, const UpSet& r) {
  std::vector<char> side(net.n_vertices, 0);
  side[net.source] = 1;
  for (int id : r.members) side[CutDigraphBundle::vertex_of(id)] = 1;
  return side;
}

// finite cut value of a bundle at an upset, shifted back to objective scale
Rat bundle_value(const CutDigraphBundle& b, const UpSet& r) {
  Cap v = cut_capacity(b.network, side_of_upset(b.network, r));
  REQUIRE(!v.inf);
  return v.v - b.constant;
}

// pair co-located at the student-optimal end only; one top split expected
SiblingInstance top_heavy_market() {
  SiblingInstance si;
  si.base = fixtures::make_market({"a", "abar", "x"}, {{"b", 2}, {"c", 1}},
                                  {
                                      {"a", "b @"},
                                      {"abar", "b c @"},
                                      {"x", "c b @"},
                                      {"b", "a x abar @"},
                                      {"c", "abar x @"},
                                  });
  si.pairs = {{0, 1}};
  return si;
}

// pair co-located at the student-pessimal end only; one bottom split expected
SiblingInstance bottom_heavy_market() {
  SiblingInstance si;
  si.base = fixtures::make_market({"a", "abar", "x"}, {{"b", 2}, {"c", 1}},
                                  {
                                      {"a", "b @"},
                                      {"abar", "c b @"},
                                      {"x", "b c @"},
                                      {"b", "a abar x @"},
                                      {"c", "x abar @"},
                                  });
  si.pairs = {{0, 1}};
  return si;
}

// one rotation moves both siblings between activities at once, so they ride
// the lattice in lockstep
fixtures::sibling_market lockstep_market() {
  fixtures::sibling_market f;
  f.inst = fixtures::make_market({"a", "u", "abar", "v"},
                                 {{"b1", 1}, {"b2", 1}, {"e1", 1}, {"e2", 1}},
                                 {
                                     {"a", "b1 b2 @"},
                                     {"u", "b2 e1 @"},
                                     {"abar", "e1 e2 @"},
                                     {"v", "e2 b1 @"},
                                     {"b1", "v a @"},
                                     {"b2", "a u @"},
                                     {"e1", "u abar @"},
                                     {"e2", "abar v @"},
                                 });
  f.pairs = {{"a", "abar"}};
  f.activity_ids = {"c1", "c2"};
  f.activity_schools = {{"b1", "e1"}, {"b2", "e2"}};
  return f;
}

// the siblings rank the same two activities but never share a stable one:
// a is stuck in the first, abar loses its first-activity seat to x for good
fixtures::sibling_market disjoint_stable_market() {
  fixtures::sibling_market f;
  f.inst = fixtures::make_market({"a", "abar", "x"},
                                 {{"b1", 1}, {"b2", 1}, {"e1", 1}, {"e2", 1}},
                                 {
                                     {"a", "b1 b2 @"},
                                     {"abar", "e1 e2 @"},
                                     {"x", "e1 @"},
                                     {"b1", "a @"},
                                     {"b2", "a @"},
                                     {"e1", "x abar @"},
                                     {"e2", "abar @"},
                                 });
  f.pairs = {{"a", "abar"}};
  f.activity_ids = {"c1", "c2"};
  f.activity_schools = {{"b1", "e1"}, {"b2", "e2"}};
  return f;
}

// exactly one shared stable activity: abar never leaves it, a can wander off
// through one rotation with u
fixtures::sibling_market one_shared_market() {
  fixtures::sibling_market f;
  f.inst = fixtures::make_market({"a", "abar", "u", "w"},
                                 {{"b1", 1}, {"b2", 1}, {"e1", 1}, {"e2", 1}},
                                 {
                                     {"a", "b1 b2 @"},
                                     {"abar", "e1 e2 @"},
                                     {"u", "b2 b1 @"},
                                     {"w", "e2 @"},
                                     {"b1", "u a @"},
                                     {"b2", "a u @"},
                                     {"e1", "abar @"},
                                     {"e2", "w abar @"},
                                 });
  f.pairs = {{"a", "abar"}};
  f.activity_ids = {"c1", "c2"};
  f.activity_schools = {{"b1", "e1"}, {"b2", "e2"}};
  return f;
}

// random market plus the first two students as one sibling pair sharing an
// activity permutation; other students rank random activity prefixes
struct mssp_case {
  Instance inst;
  ActivityStructure acts;
  std::vector<std::pair<int, int>> pairs;
};

mssp_case random_mssp(std::mt19937& rng, bool perturb) {
  // uniformly random short lists almost always collapse to a single stable
  // matching, so build two disjoint cyclic ladders instead, one per sibling:
  // each ladder's students list its classes as rotated shifts of the shared
  // activity order and each class ranks later shifts higher, which keeps
  // every shift matching stable and walks both siblings through every
  // activity. perturbation then roughs up the ladders with chaos students,
  // adjacent swaps in class lists, and a truncated rotator
  int k = 3 + (int)(rng() % 2);
  std::vector<std::string> names;
  std::vector<std::vector<int>> classes(k);
  Instance inst;
  for (int g = 0; g < k; ++g) {
    names.push_back("c" + std::to_string(g + 1));
    for (int j = 0; j < 2; ++j) {
      classes[g].push_back(inst.n_schools());
      inst.school_ids.push_back("b" + std::to_string(inst.n_schools() + 1));
      inst.quota.push_back(1);
    }
  }
  int ns = inst.n_schools();
  int n_chaos = perturb ? (int)(rng() % 3) : 0;
  int na = 2 + 2 * (k - 1) + n_chaos;
  for (int i = 0; i < na; ++i) inst.student_ids.push_back("a" + std::to_string(i + 1));
  std::vector<int> xstud = {0}, ystud = {1};
  for (int r = 1; r < k; ++r) xstud.push_back(1 + r);
  for (int r = 1; r < k; ++r) ystud.push_back(k + r);
  auto finish = [&](std::vector<int> pref) {
    pref.push_back(OUTSIDE);
    for (int b = 0; b < ns; ++b)
      if (std::find(pref.begin(), pref.end(), b) == pref.end()) pref.push_back(b);
    return pref;
  };
  inst.student_pref.resize(na);
  for (int t = 0; t < k; ++t) {
    std::vector<int> px, py;
    for (int u = 0; u < k; ++u) {
      px.push_back(classes[(t + u) % k][0]);
      py.push_back(classes[(t + u) % k][1]);
    }
    inst.student_pref[xstud[t]] = finish(px);
    inst.student_pref[ystud[t]] = finish(py);
  }
  for (int c = 0; c < n_chaos; ++c) {
    int keep = 1 + (int)(rng() % k);
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> pc;
    for (int t = 0; t < keep; ++t) pc.push_back(classes[order[t]][rng() % 2]);
    inst.student_pref[2 + 2 * (k - 1) + c] = finish(pc);
  }
  inst.school_pref.resize(ns);
  for (int j = 0; j < k; ++j) {
    for (int side = 0; side < 2; ++side) {
      int b = classes[j][side];
      const auto& studs = side == 0 ? xstud : ystud;
      std::vector<int> pb;
      for (int u = 1; u <= k; ++u) pb.push_back(studs[(j + u) % k]);
      for (int c = 0; c < n_chaos; ++c) {
        int cs = 2 + 2 * (k - 1) + c;
        const auto& pc = inst.student_pref[cs];
        if (std::find(pc.begin(), std::find(pc.begin(), pc.end(), OUTSIDE), b) !=
            std::find(pc.begin(), pc.end(), OUTSIDE))
          pb.insert(pb.begin() + rng() % (pb.size() + 1), cs);
      }
      std::vector<int> rest;
      for (int s = 0; s < na; ++s)
        if (std::find(pb.begin(), pb.end(), s) == pb.end()) rest.push_back(s);
      std::shuffle(rest.begin(), rest.end(), rng);
      pb.push_back(OUTSIDE);
      pb.insert(pb.end(), rest.begin(), rest.end());
      inst.school_pref[b] = std::move(pb);
    }
  }
  if (perturb) {
    for (int b = 0; b < ns; ++b) {
      if (rng() % 5 >= 2) continue;
      auto& pb = inst.school_pref[b];
      int acc = 0;
      while (pb[acc] != OUTSIDE) ++acc;
      if (acc >= 2) {
        int p = (int)(rng() % (acc - 1));
        std::swap(pb[p], pb[p + 1]);
      }
    }
    if (rng() % 3 == 0) {
      int victim = 2 + (int)(rng() % (2 * (k - 1)));
      auto& pv = inst.student_pref[victim];
      std::vector<int> cut(pv.begin(), pv.begin() + (k - 1));
      inst.student_pref[victim] = finish(std::move(cut));
    }
  }
  REQUIRE(!inst.validate());
  ActivityStructure acts = ActivityStructure::of(inst, names, classes, {{0, 1}});
  return {std::move(inst), std::move(acts), {{0, 1}}};
}

// normalized random sibling market, ready for interval and digraph checks
SiblingInstance random_normalized(std::mt19937& rng, int n_pairs = 1) {
  SiblingInstance si;
  si.base = oracles::random_market(rng, 5, 4, 2);
  for (int p = 0; p < n_pairs; ++p) si.pairs.push_back({2 * p, 2 * p + 1});
  return normalize_msss(si).normalized;
}

}  // namespace

TEST_CASE("sibling instance validation flags malformed pairs") {
  SiblingInstance si;
  si.base = fixtures::five_by_five_market();
  si.pairs = {{0, 1}, {2, 4}};
  REQUIRE(!si.validate());

  si.pairs = {{0, 0}};
  REQUIRE(*si.validate() == "pair 0 repeats one student");
  si.pairs = {{0, 5}};
  REQUIRE(*si.validate() == "pair 0 references a student out of range");
  si.pairs = {{-1, 2}};
  REQUIRE(*si.validate() == "pair 0 references a student out of range");
  si.pairs = {{0, 1}, {1, 2}};
  REQUIRE(*si.validate() == "pair 1 reuses a paired student");
}

TEST_CASE("activity structure derives eligibility and rank orders") {
  auto f = fixtures::two_activity_market();
  auto acts = acts_of(f);
  REQUIRE(acts.size() == 2);
  int a1 = f.inst.student_index("a1"), s1 = f.inst.student_index("s1");
  int a2 = f.inst.student_index("a2");
  int x1 = f.inst.school_index("x1"), x2 = f.inst.school_index("x2");
  int y1 = f.inst.school_index("y1"), z1 = f.inst.school_index("z1");

  REQUIRE(acts.activity_of(x1) == 0);
  REQUIRE(acts.activity_of(x2) == 1);
  REQUIRE(acts.eligible[a1][0] == x1);
  REQUIRE(acts.eligible[a1][1] == x2);
  REQUIRE(acts.eligible[s1][0] == y1);
  // a2 ranks only one activity; the other slot stays empty
  REQUIRE(acts.eligible[a2][0] == z1);
  REQUIRE(acts.eligible[a2][1] == -1);

  REQUIRE(acts.ranked_activities(f.inst, a1) == std::vector<int>{0, 1});
  REQUIRE(acts.ranked_activities(f.inst, a2) == std::vector<int>{0});
  REQUIRE(acts.orders_agree(f.inst, a1, s1));

  auto g = fixtures::opposed_siblings_market();
  auto gacts = acts_of(g);
  REQUIRE(!gacts.orders_agree(g.inst, g.inst.student_index("a1"), g.inst.student_index("d1")));
}

TEST_CASE("activity structure rejects broken partitions") {
  auto f = fixtures::two_activity_market();
  std::vector<std::vector<int>> groups = {{0, 1, 2}, {3, 4}};

  REQUIRE_THROWS_AS(ActivityStructure::of(f.inst, {"c1"}, groups), std::invalid_argument);
  REQUIRE_THROWS_AS(ActivityStructure::of(f.inst, {"c1", "c2"}, {{0, 1, 2}, {3}}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ActivityStructure::of(f.inst, {"c1", "c2"}, {{0, 1, 2, 3}, {3, 4}}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ActivityStructure::of(f.inst, {"c1", "c2"}, {{0, 1, 2}, {3, 9}}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(ActivityStructure::of(f.inst, {"c1", "c2"}, {{0, 1, 2}, {}}),
                    std::invalid_argument);

  // a1 ranks x1 and x2; putting them in one activity breaks eligibility
  REQUIRE_THROWS_AS(ActivityStructure::of(f.inst, {"c1", "c2"}, {{0, 1, 2, 3}, {4}}),
                    std::invalid_argument);

  // order agreement is only enforced for declared sibling pairs
  auto g = fixtures::opposed_siblings_market();
  std::vector<std::vector<int>> ggroups = {{0, 3}, {1, 4}, {2, 5}};
  REQUIRE_NOTHROW(ActivityStructure::of(g.inst, {"c1", "c2", "c3"}, ggroups));
  REQUIRE_THROWS_AS(ActivityStructure::of(g.inst, {"c1", "c2", "c3"}, ggroups, {{0, 3}}),
                    std::invalid_argument);
}

TEST_CASE("normalization leaves separated markets untouched") {
  SiblingInstance si;
  si.base = fixtures::five_by_five_market();
  si.pairs = {{0, 1}};
  Matching m0 = deferred_acceptance(si.base, Side::students);
  Matching mz = deferred_acceptance(si.base, Side::schools);
  REQUIRE(!same_school(m0, 0, 1));
  REQUIRE(!same_school(mz, 0, 1));

  auto norm = normalize_msss(si);
  REQUIRE(norm.steps.empty());
  REQUIRE(norm.normalized.base.student_ids == si.base.student_ids);
  REQUIRE(norm.normalized.base.student_pref == si.base.student_pref);
  REQUIRE(norm.normalized.base.school_pref == si.base.school_pref);
  Matching probe = m0;
  REQUIRE(norm.lift(probe).assign == probe.assign);
  REQUIRE(norm.restrict(probe).assign == probe.assign);
}

TEST_CASE("normalization splits a pair sharing the optimal school") {
  SiblingInstance si = top_heavy_market();
  Matching m0 = deferred_acceptance(si.base, Side::students);
  Matching mz = deferred_acceptance(si.base, Side::schools);
  REQUIRE(same_school(m0, 0, 1));
  REQUIRE(!same_school(mz, 0, 1));

  auto norm = normalize_msss(si);
  REQUIRE(norm.steps.size() == 1);
  REQUIRE(norm.steps[0].dummy_student == 3);
  REQUIRE(norm.steps[0].dummy_school == 2);
  REQUIRE(norm.steps[0].moved_student == 0);
  REQUIRE(norm.steps[0].anchor_school == 0);
  const Instance& ni = norm.normalized.base;
  REQUIRE(ni.n_students() == 4);
  REQUIRE(ni.n_schools() == 3);

  // the moved sibling now opens at the dummy school, the dummy takes its seat
  Matching nm0 = deferred_acceptance(ni, Side::students);
  REQUIRE(nm0.assign == std::vector<int>{2, 0, 1, 0});
  Matching nmz = deferred_acceptance(ni, Side::schools);
  REQUIRE(nmz.assign == std::vector<int>{0, 1, 0, 2});
  REQUIRE(!same_school(nm0, 0, 1));
  REQUIRE(!same_school(nmz, 0, 1));
}

TEST_CASE("normalization splits a pair sharing the pessimal school") {
  SiblingInstance si = bottom_heavy_market();
  Matching m0 = deferred_acceptance(si.base, Side::students);
  Matching mz = deferred_acceptance(si.base, Side::schools);
  REQUIRE(!same_school(m0, 0, 1));
  REQUIRE(same_school(mz, 0, 1));

  auto norm = normalize_msss(si);
  REQUIRE(norm.steps.size() == 1);
  REQUIRE(norm.steps[0].moved_student == 1);
  REQUIRE(norm.steps[0].anchor_school == 0);
  const Instance& ni = norm.normalized.base;

  Matching nm0 = deferred_acceptance(ni, Side::students);
  REQUIRE(nm0.assign == std::vector<int>{0, 1, 0, 2});
  Matching nmz = deferred_acceptance(ni, Side::schools);
  REQUIRE(nmz.assign == std::vector<int>{0, 2, 1, 0});
  REQUIRE(!same_school(nmz, 0, 1));

  // restricting the normalized pessimal point recovers the original one
  REQUIRE(norm.restrict(nmz).assign == mz.assign);
  REQUIRE(norm.lift(m0).assign == nm0.assign);
}

TEST_CASE("the pessimal split targets the sibling the school likes less") {
  // quota-two school hosting the pair at both ends, ranking abar above a;
  // prying abar off would leave a behind as a blocking partner, so the
  // split has to move a instead
  SiblingInstance si;
  si.base = fixtures::make_market({"a1", "a2", "a3", "a4", "a5"},
                                  {{"b1", 1}, {"b2", 2}, {"b3", 1}, {"b4", 1}, {"b5", 1}},
                                  {
                                      {"a1", "b2 b4 b3 b5 b1 @"},
                                      {"a2", "b5 b2 b1 @ b4 b3"},
                                      {"a3", "b4 b1 b3 b2 @ b5"},
                                      {"a4", "b2 b1 b5 @ b3 b4"},
                                      {"a5", "b1 b4 b2 b5 @ b3"},
                                      {"b1", "a1 a3 a5 a4 a2 @"},
                                      {"b2", "a2 a1 a3 a5 @ a4"},
                                      {"b3", "a5 a2 a4 @ a1 a3"},
                                      {"b4", "a3 a4 a2 @ a5 a1"},
                                      {"b5", "a1 a3 a4 @ a5 a2"},
                                  });
  si.pairs = {{0, 1}};
  Matching m0 = deferred_acceptance(si.base, Side::students);
  Matching mz = deferred_acceptance(si.base, Side::schools);
  REQUIRE(m0.assign == std::vector<int>{1, 1, 3, 4, 0});
  REQUIRE(mz.assign == m0.assign);

  auto norm = normalize_msss(si);
  REQUIRE(norm.steps.size() == 2);
  REQUIRE(norm.steps[0].moved_student == 0);
  REQUIRE(norm.steps[0].anchor_school == 1);
  REQUIRE(norm.steps[1].moved_student == 0);
  REQUIRE(norm.steps[1].anchor_school == 1);

  const Instance& ni = norm.normalized.base;
  Matching nm0 = deferred_acceptance(ni, Side::students);
  Matching nmz = deferred_acceptance(ni, Side::schools);
  REQUIRE(!same_school(nm0, 0, 1));
  REQUIRE(!same_school(nmz, 0, 1));

  // the sole stable matching survives the rewrite through the backward map
  auto original = enumerate_stable_bruteforce(si.base).matchings;
  REQUIRE(original.size() == 1);
  for (const auto& m : enumerate_stable_bruteforce(ni).matchings) {
    Matching down = norm.restrict(m);
    REQUIRE(oracles::blocking_free(si.base, down));
    REQUIRE(down.assign == m0.assign);
  }
  auto res = solve_msss(si);
  REQUIRE(res.separated == 0);
  REQUIRE(count_separated(res.matching, si.pairs) == 0);
}

TEST_CASE("the pessimal split displaces every roster mate below the sibling") {
  // at the pessimal end b hosts a, abar and y with y ranked last; exiling
  // abar alone would let it block through y, so y leaves too
  SiblingInstance si;
  si.base = fixtures::make_market({"a", "abar", "y", "x"}, {{"b", 3}, {"c", 1}},
                                  {
                                      {"a", "b @"},
                                      {"abar", "c b @"},
                                      {"y", "b @"},
                                      {"x", "b c @"},
                                      {"b", "a abar y x @"},
                                      {"c", "x abar @"},
                                  });
  si.pairs = {{0, 1}};
  Matching m0 = deferred_acceptance(si.base, Side::students);
  Matching mz = deferred_acceptance(si.base, Side::schools);
  REQUIRE(m0.assign == std::vector<int>{0, 1, 0, 0});
  REQUIRE(mz.assign == std::vector<int>{0, 0, 0, 1});

  auto norm = normalize_msss(si);
  REQUIRE(norm.steps.size() == 2);
  REQUIRE(norm.steps[0].moved_student == 1);
  REQUIRE(norm.steps[0].anchor_school == 0);
  REQUIRE(norm.steps[1].moved_student == 2);
  REQUIRE(norm.steps[1].anchor_school == 0);

  const Instance& ni = norm.normalized.base;
  Matching nm0 = deferred_acceptance(ni, Side::students);
  Matching nmz = deferred_acceptance(ni, Side::schools);
  REQUIRE(!same_school(nm0, 0, 1));
  REQUIRE(!same_school(nmz, 0, 1));
  REQUIRE(norm.lift(m0).assign == nm0.assign);

  // the pessimal point restores abar and y to b on the way back
  REQUIRE(norm.restrict(nmz).assign == mz.assign);

  auto res = solve_msss(si);
  REQUIRE(res.separated == 0);
  REQUIRE(res.matching.assign == mz.assign);
  REQUIRE(oracles::blocking_free(si.base, res.matching));
}

TEST_CASE("lift and restrict carry stable matchings across a normalization") {
  for (int seed = 0; seed < 25; ++seed) {
    std::mt19937 rng(4200 + seed);
    SiblingInstance si;
    si.base = oracles::random_market(rng, 5, 5, 2);
    si.pairs = {{0, 1}, {2, 3}};
    auto norm = normalize_msss(si);
    const Instance& ni = norm.normalized.base;

    Matching nm0 = deferred_acceptance(ni, Side::students);
    Matching nmz = deferred_acceptance(ni, Side::schools);
    for (auto [a, abar] : si.pairs) {
      REQUIRE(!same_school(nm0, a, abar));
      REQUIRE(!same_school(nmz, a, abar));
    }

    auto original = enumerate_stable_bruteforce(si.base).matchings;
    auto normalized = enumerate_stable_bruteforce(ni).matchings;

    // lifting keeps stability and the co-located set; restrict undoes it
    for (const auto& m : original) {
      Matching up = norm.lift(m);
      REQUIRE(oracles::blocking_free(ni, up));
      for (auto [a, abar] : si.pairs) REQUIRE(same_school(up, a, abar) == same_school(m, a, abar));
      REQUIRE(norm.restrict(up).assign == m.assign);
    }
    // restriction keeps stability and never un-co-locates a pair
    for (const auto& m : normalized) {
      Matching down = norm.restrict(m);
      REQUIRE(oracles::blocking_free(si.base, down));
      for (auto [a, abar] : si.pairs)
        if (same_school(m, a, abar)) REQUIRE(same_school(down, a, abar));
    }

    // the best achievable co-location count survives the rewrite
    int best_orig = 0, best_norm = 0;
    for (const auto& m : original) {
      int c = (int)si.pairs.size() - count_separated(m, si.pairs);
      best_orig = std::max(best_orig, c);
    }
    for (const auto& m : normalized) {
      int c = (int)si.pairs.size() - count_separated(m, si.pairs);
      best_norm = std::max(best_norm, c);
    }
    REQUIRE(best_orig == best_norm);
  }
}

TEST_CASE("entry and exit rotations pin each co-location interval") {
  REQUIRE_THROWS_AS(
      rho_in_out(top_heavy_market().base, rotation_order(top_heavy_market().base), 0, 1, 0),
      std::invalid_argument);

  for (int seed = 0; seed < 30; ++seed) {
    std::mt19937 rng(5200 + seed);
    SiblingInstance si = random_normalized(rng);
    const Instance& inst = si.base;
    auto order = rotation_order(inst);
    auto all = enumerate_stable_bruteforce(inst).matchings;

    for (int b = 0; b < inst.n_schools(); ++b) {
      std::vector<const Matching*> hosts;
      for (const auto& m : all)
        if (m.assign[0] == b && m.assign[1] == b) hosts.push_back(&m);

      auto res = rho_in_out(inst, order, 0, 1, b);
      if (hosts.empty()) {
        REQUIRE(!res);
        continue;
      }
      REQUIRE(res);
      auto [rin, rout] = *res;
      REQUIRE(order.before(rin, rout));
      for (const auto& m : all) {
        UpSet r = upset_of(inst, order, m);
        bool predicted = r.contains(rin) && !r.contains(rout);
        bool actual = m.assign[0] == b && m.assign[1] == b;
        REQUIRE(predicted == actual);
      }
    }
  }
}

TEST_CASE("separation differentials match the oracle tables") {
  for (int seed = 0; seed < 12; ++seed) {
    std::mt19937 rng(6300 + seed);
    SiblingInstance si = random_normalized(rng);
    const Instance& inst = si.base;
    auto sys = build_rotation_system(inst);
    auto part = *meta_rotations(inst, sys.order, SublatticeSpec::all()).partition;
    int n = sys.order.size();

    auto oracle = ObjectiveSpec::of(
        [](const Matching& m) { return Rat(same_school(m, 0, 1) ? 0 : 1); });
    auto tables = differentials(inst, sys.order, part, oracle);

    std::set<int> rin, rout;
    for (int b = 0; b < inst.n_schools(); ++b)
      if (auto io = rho_in_out(inst, sys.order, 0, 1, b)) {
        rin.insert(io->first);
        rout.insert(io->second);
      }
    std::vector<Rat> expected(n, Rat(0));
    for (int r : rout)
      if (!rin.count(r)) expected[r] = 1;
    for (int r : rin)
      if (!rout.count(r)) expected[r] = -1;

    REQUIRE(tables.value_at_top == 1);
    REQUIRE(tables.d1 == expected);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) REQUIRE(tables.d2[i][j] == 0);
  }
}

TEST_CASE("msss keeps every pair together when the optimal matching already does") {
  SiblingInstance si = top_heavy_market();
  Matching m0 = deferred_acceptance(si.base, Side::students);
  auto res = solve_msss(si);
  REQUIRE(res.separated == 0);
  REQUIRE(res.matching.assign == m0.assign);
}

TEST_CASE("msss minimizes separated pairs against brute force") {
  SiblingInstance five;
  five.base = fixtures::five_by_five_market();
  five.pairs = {{0, 1}};
  auto res = solve_msss(five);
  REQUIRE(oracles::blocking_free(five.base, res.matching));
  int best = (int)five.pairs.size();
  for (const auto& m : enumerate_stable_bruteforce(five.base).matchings)
    best = std::min(best, count_separated(m, five.pairs));
  REQUIRE(res.separated == best);
  REQUIRE(count_separated(res.matching, five.pairs) == best);

  // pairs living on disjoint school sets can never be reunited
  auto cyc = fixtures::three_pair_cyclic_market();
  SiblingInstance si{cyc.inst, index_pairs(cyc)};
  auto worst = solve_msss(si);
  REQUIRE(worst.separated == 3);

  for (int seed = 0; seed < 30; ++seed) {
    std::mt19937 rng(7400 + seed);
    SiblingInstance rnd;
    rnd.base = oracles::random_market(rng, 5, 4, 2);
    rnd.pairs = {{0, 1}, {2, 3}};
    auto got = solve_msss(rnd);
    REQUIRE(oracles::blocking_free(rnd.base, got.matching));
    REQUIRE(count_separated(got.matching, rnd.pairs) == got.separated);
    int want = (int)rnd.pairs.size();
    for (const auto& m : enumerate_stable_bruteforce(rnd.base).matchings)
      want = std::min(want, count_separated(m, rnd.pairs));
    REQUIRE(got.separated == want);

    // adding a pair can only make separation worse
    SiblingInstance fewer;
    fewer.base = rnd.base;
    fewer.pairs = {{0, 1}};
    REQUIRE(solve_msss(fewer).separated <= got.separated);
  }
}

TEST_CASE("irp digraphs charge one per violated implication") {
  Instance inst = fixtures::five_by_five_market();
  auto order = rotation_order(inst);
  REQUIRE(order.size() == 6);
  auto upsets = enumerate_upsets(order);

  int lo = -1, hi = -1;
  for (int i = 0; i < order.size() && lo == -1; ++i)
    for (int j = 0; j < order.size(); ++j)
      if (order.before(i, j)) {
        lo = i;
        hi = j;
        break;
      }
  REQUIRE(lo != -1);

  auto both = irp_digraph(inst, order, {lo, hi});
  auto forced = irp_digraph(inst, order, {IRP_EMPTY, hi});
  auto banned = irp_digraph(inst, order, {lo, IRP_INFTY});
  auto vacuous = irp_digraph(inst, order, {hi, hi});
  for (const auto& r : upsets) {
    REQUIRE(bundle_value(both, r) == (r.contains(lo) != r.contains(hi) ? 1 : 0));
    REQUIRE(bundle_value(forced, r) == (r.contains(hi) ? 0 : 1));
    REQUIRE(bundle_value(banned, r) == (r.contains(lo) ? 1 : 0));
    REQUIRE(bundle_value(vacuous, r) == 0);
  }

  REQUIRE_THROWS_AS(irp_digraph(inst, order, {IRP_EMPTY, IRP_INFTY}), std::invalid_argument);
  REQUIRE_THROWS_AS(irp_digraph(inst, order, {IRP_EMPTY, IRP_EMPTY}), std::invalid_argument);
  REQUIRE_THROWS_AS(irp_digraph(inst, order, {0, 99}), std::invalid_argument);
}

TEST_CASE("pair families carve out the activity co-location zero set") {
  auto f = fixtures::two_activity_market();
  auto acts = acts_of(f);
  auto [a1, s1] = index_pairs(f)[0];
  auto sys = build_rotation_system(f.inst);
  REQUIRE(sys.order.size() == 2);

  // identify the rotations by which sibling they move
  int rho = -1, rho_bar = -1;
  for (int i = 0; i < 2; ++i)
    for (const auto& [x, b] : sys.order.rotations[i].minus) {
      if (x == a1) rho = i;
      if (x == s1) rho_bar = i;
    }
  REQUIRE(rho != -1);
  REQUIRE(rho_bar != -1);
  REQUIRE(rho != rho_bar);

  auto fam = mssp_pair_family(f.inst, sys.order, acts, a1, s1);
  REQUIRE(fam.size() == 1);
  REQUIRE(fam[0].theta == rho);
  REQUIRE(fam[0].theta_bar == rho_bar);

  // only the extreme matchings co-locate the siblings
  for (const auto& r : enumerate_upsets(sys.order)) {
    Matching m = matching_of(f.inst, sys.order, r);
    Rat violations = bundle_value(irp_digraph(f.inst, sys.order, fam[0]), r);
    REQUIRE((violations == 0) == same_activity(acts, m, a1, s1));
    REQUIRE((violations == 0) == (m.assign == sys.m0.assign || m.assign == sys.mz.assign));
  }
}

TEST_CASE("a rotation moving both siblings yields a vacuous family") {
  auto f = lockstep_market();
  auto acts = acts_of(f);
  auto [a, abar] = index_pairs(f)[0];
  auto sys = build_rotation_system(f.inst);
  REQUIRE(sys.order.size() == 1);

  auto fam = mssp_pair_family(f.inst, sys.order, acts, a, abar);
  REQUIRE(fam.size() == 1);
  REQUIRE(fam[0].theta == 0);
  REQUIRE(fam[0].theta_bar == 0);
  for (const auto& r : enumerate_upsets(sys.order)) {
    Matching m = matching_of(f.inst, sys.order, r);
    REQUIRE(same_activity(acts, m, a, abar));
    REQUIRE(bundle_value(irp_digraph(f.inst, sys.order, fam[0]), r) == 0);
  }

  auto res = solve_mssp(f.inst, acts, index_pairs(f));
  REQUIRE(res);
  REQUIRE(res->assign == sys.m0.assign);
}

TEST_CASE("random pair families agree with brute-force co-location") {
  int checked = 0;
  for (int seed = 0; seed < 40; ++seed) {
    std::mt19937 rng(8500 + seed);
    auto c = random_mssp(rng, seed % 2 == 1);
    auto sys = build_rotation_system(c.inst);

    std::vector<IrpSpec> fam;
    try {
      fam = mssp_pair_family(c.inst, sys.order, c.acts, 0, 1);
    } catch (const std::invalid_argument&) {
      continue;  // fewer than two shared stable activities
    }
    ++checked;
    std::vector<CutDigraphBundle> bundles;
    for (const auto& spec : fam) bundles.push_back(irp_digraph(c.inst, sys.order, spec));
    for (const auto& r : enumerate_upsets(sys.order)) {
      Matching m = matching_of(c.inst, sys.order, r);
      Rat total = 0;
      for (const auto& b : bundles) total += bundle_value(b, r);
      REQUIRE((total == 0) == same_activity(c.acts, m, 0, 1));
    }
  }
  REQUIRE(checked > 5);
}

TEST_CASE("mssp returns the canonical co-locating matching or nothing") {
  auto f = fixtures::two_activity_market();
  auto res = solve_mssp(f.inst, acts_of(f), index_pairs(f));
  REQUIRE(res);
  REQUIRE(res->assign == deferred_acceptance(f.inst, Side::students).assign);

  auto cyc = fixtures::three_pair_cyclic_market();
  auto cacts = acts_of(cyc);
  auto cres = solve_mssp(cyc.inst, cacts, index_pairs(cyc));
  REQUIRE(cres);
  REQUIRE(cres->assign == deferred_acceptance(cyc.inst, Side::students).assign);
  for (auto [a, abar] : index_pairs(cyc)) REQUIRE(same_activity(cacts, *cres, a, abar));

  auto dis = disjoint_stable_market();
  REQUIRE(!solve_mssp(dis.inst, acts_of(dis), index_pairs(dis)));

  auto g = fixtures::opposed_siblings_market();
  REQUIRE_THROWS_AS(solve_mssp(g.inst, acts_of(g), index_pairs(g)), std::invalid_argument);
}

TEST_CASE("the cyclic market family lines up along both chains") {
  auto cyc = fixtures::three_pair_cyclic_market();
  auto sys = build_rotation_system(cyc.inst);
  REQUIRE(sys.order.size() == 4);
  auto acts = acts_of(cyc);

  // per sibling side, the rotation first reaching each list position
  auto entry = [&](int student, int hop) {
    for (int i = 0; i < sys.order.size(); ++i)
      for (const auto& [x, b] : sys.order.rotations[i].minus)
        if (x == student && b == cyc.inst.student_pref[student][hop]) return i;
    return -1;
  };
  for (auto [a, abar] : index_pairs(cyc)) {
    auto fam = mssp_pair_family(cyc.inst, sys.order, acts, a, abar);
    REQUIRE(fam.size() == 2);
    REQUIRE(fam[0].theta == entry(a, 1));
    REQUIRE(fam[0].theta_bar == entry(abar, 1));
    REQUIRE(fam[1].theta == entry(a, 2));
    REQUIRE(fam[1].theta_bar == entry(abar, 2));
  }
}

TEST_CASE("one shared stable activity falls back to a linear charge") {
  auto f = one_shared_market();
  auto acts = acts_of(f);
  auto [a, abar] = index_pairs(f)[0];
  auto sys = build_rotation_system(f.inst);
  REQUIRE(sys.order.size() == 1);

  // the family precondition fails, yet the instance stays solvable
  REQUIRE_THROWS_AS(mssp_pair_family(f.inst, sys.order, acts, a, abar), std::invalid_argument);
  auto res = solve_mssp(f.inst, acts, index_pairs(f));
  REQUIRE(res);
  REQUIRE(same_activity(acts, *res, a, abar));
  REQUIRE(res->assign == sys.m0.assign);
}

TEST_CASE("mssp agrees with brute force on random activity markets") {
  for (int seed = 0; seed < 40; ++seed) {
    std::mt19937 rng(9600 + seed);
    auto c = random_mssp(rng, seed % 2 == 1);
    auto res = solve_mssp(c.inst, c.acts, c.pairs);

    bool feasible = false;
    for (const auto& m : enumerate_stable_bruteforce(c.inst).matchings)
      feasible = feasible || same_activity(c.acts, m, 0, 1);

    REQUIRE(res.has_value() == feasible);
    if (res) {
      REQUIRE(oracles::blocking_free(c.inst, *res));
      REQUIRE(same_activity(c.acts, *res, 0, 1));
    }
  }
}

TEST_CASE("msdp brute force handles opposed activity orders") {
  auto g = fixtures::opposed_siblings_market();
  auto acts = acts_of(g);
  auto pairs = index_pairs(g);
  auto res = solve_msdp_bruteforce(g.inst, acts, pairs);
  REQUIRE(res);
  REQUIRE(oracles::blocking_free(g.inst, *res));
  for (auto [a, abar] : pairs) REQUIRE(same_activity(acts, *res, a, abar));

  std::set<std::vector<int>> known = {
      {0, 1, 2, 3, 5, 4}, {1, 0, 2, 4, 5, 3}, {2, 0, 1, 5, 4, 3}};
  REQUIRE(known.count(res->assign) == 1);

  // the student-optimal matching itself splits the activities
  Matching m0 = deferred_acceptance(g.inst, Side::students);
  REQUIRE(!same_activity(acts, m0, pairs[0].first, pairs[0].second));
}

TEST_CASE("msdp agrees with mssp whenever orders align") {
  auto f = fixtures::two_activity_market();
  auto res = solve_msdp_bruteforce(f.inst, acts_of(f), index_pairs(f));
  REQUIRE(res);
  REQUIRE(res->assign == deferred_acceptance(f.inst, Side::students).assign);

  auto dis = disjoint_stable_market();
  REQUIRE(!solve_msdp_bruteforce(dis.inst, acts_of(dis), index_pairs(dis)));

  for (int seed = 0; seed < 25; ++seed) {
    std::mt19937 rng(10700 + seed);
    auto c = random_mssp(rng, seed % 2 == 1);
    auto fast = solve_mssp(c.inst, c.acts, c.pairs);
    auto slow = solve_msdp_bruteforce(c.inst, c.acts, c.pairs);
    REQUIRE(fast.has_value() == slow.has_value());
    if (slow) REQUIRE(same_activity(c.acts, *slow, 0, 1));
  }
}

TEST_CASE("msdp refuses to enumerate past its cap") {
  Instance inst = fixtures::five_by_five_market();
  std::vector<std::string> names;
  std::vector<std::vector<int>> groups;
  for (int b = 0; b < inst.n_schools(); ++b) {
    names.push_back("c" + std::to_string(b + 1));
    groups.push_back({b});
  }
  auto acts = ActivityStructure::of(inst, names, groups);

  // ten stable matchings; a cap of three trips the enumeration guard
  try {
    solve_msdp_bruteforce(inst, acts, {{0, 1}}, 3);
    REQUIRE(false);
  } catch (const std::runtime_error& e) {
    REQUIRE(std::string(e.what()).find("NP-complete") != std::string::npos);
  }

  // unit-quota singleton activities make co-location impossible outright
  REQUIRE(!solve_msdp_bruteforce(inst, acts, {{0, 1}}));
}
