#pragma once

// hand-built markets shared across the test binaries

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stablecut/instance.hpp"

namespace fixtures {

using stablecut::Instance;
using stablecut::Matching;
using stablecut::OUTSIDE;

// tokens separated by spaces, "@" = outside option; partners omitted from a
// list are appended after the outside option in declaration order
inline Instance make_market(
    const std::vector<std::string>& students,
    const std::vector<std::pair<std::string, int>>& schools,
    const std::vector<std::pair<std::string, std::string>>& prefs) {
  Instance inst;
  inst.student_ids = students;
  for (auto& [id, q] : schools) {
    inst.school_ids.push_back(id);
    inst.quota.push_back(q);
  }
  std::map<std::string, std::string> by_agent(prefs.begin(), prefs.end());
  auto parse = [&](const std::string& agent, bool student_side) {
    auto it = by_agent.find(agent);
    if (it == by_agent.end()) throw std::runtime_error("fixture: no prefs for " + agent);
    const auto& partner_ids = student_side ? inst.school_ids : inst.student_ids;
    std::vector<int> out;
    std::vector<char> seen(partner_ids.size(), 0);
    bool outside_seen = false;
    std::istringstream ss(it->second);
    std::string tok;
    while (ss >> tok) {
      if (tok == "@") {
        out.push_back(OUTSIDE);
        outside_seen = true;
        continue;
      }
      int idx = -1;
      for (int i = 0; i < (int)partner_ids.size(); ++i)
        if (partner_ids[i] == tok) idx = i;
      if (idx < 0) throw std::runtime_error("fixture: unknown id " + tok);
      out.push_back(idx);
      seen[idx] = 1;
    }
    if (!outside_seen) out.push_back(OUTSIDE);
    for (int i = 0; i < (int)partner_ids.size(); ++i)
      if (!seen[i]) out.push_back(i);
    return out;
  };
  for (auto& a : inst.student_ids) inst.student_pref.push_back(parse(a, true));
  for (auto& b : inst.school_ids) inst.school_pref.push_back(parse(b, false));
  if (auto e = inst.validate()) throw std::runtime_error("fixture invalid: " + *e);
  return inst;
}

inline Matching make_matching(const Instance& inst,
                              const std::vector<std::pair<std::string, std::string>>& pairs) {
  Matching m;
  m.assign.assign(inst.n_students(), OUTSIDE);
  for (auto& [a, b] : pairs) {
    int ai = inst.student_index(a), bi = inst.school_index(b);
    if (ai < 0 || bi < 0) throw std::runtime_error("fixture: unknown pair " + a + " " + b);
    m.assign[ai] = bi;
  }
  return m;
}

// 5x5 market with ten stable matchings and six rotations arranged in three
// ranks: two maximal, two middle each covering both, two minimal
inline Instance five_by_five_market() {
  return make_market(
      {"a1", "a2", "a3", "a4", "a5"},
      {{"b1", 1}, {"b2", 1}, {"b3", 1}, {"b4", 1}, {"b5", 1}},
      {
          {"a1", "b1 b2 b3 b4 b5 @"},
          {"a2", "b2 b1 b4 b3 b5 @"},
          {"a3", "b3 b4 b1 b2 b5 @"},
          {"a4", "b4 b3 b2 b1 b5 @"},
          {"a5", "b5 b3 b2 b1 b4 @"},
          {"b1", "a4 a5 a3 a2 a1 @"},
          {"b2", "a3 a5 a4 a1 a2 @"},
          {"b3", "a2 a5 a1 a4 a3 @"},
          {"b4", "a1 a5 a2 a3 a4 @"},
          {"b5", "a5 a1 a2 a3 a4 @"},
      });
}

// first-stage market of the two-stage walkthrough; rotation chain of length 3
// (b4 must rank a4 over a5 for the middle rotation to exist)
inline Instance aggregate_market() {
  return make_market(
      {"a1", "a2", "a3", "a4", "a5"},
      {{"b1", 1}, {"b2", 1}, {"b3", 1}, {"b4", 1}, {"b5", 1}},
      {
          {"a1", "b1 b2 b4 b3 @"},
          {"a2", "b2 b3 b5 b1 @"},
          {"a3", "b3 b5 b1 b2 @"},
          {"a4", "b2 b3 b4 b5 @"},
          {"a5", "b5 b4 b3 @"},
          {"b1", "a2 a3 a1 @"},
          {"b2", "a3 a1 a4 a2 @"},
          {"b3", "a1 a5 a4 a2 a3 @"},
          {"b4", "a1 a4 a5 @"},
          {"b5", "a4 a2 a3 a5 @"},
      });
}

// scenario keeping a1 a2 a3 and b1 b2 b3: a cyclic 3x3 with three stable
// matchings
inline Instance scenario_j1() {
  return make_market(
      {"a1", "a2", "a3"},
      {{"b1", 1}, {"b2", 1}, {"b3", 1}},
      {
          {"a1", "b1 b2 b3 @"},
          {"a2", "b2 b3 b1 @"},
          {"a3", "b3 b1 b2 @"},
          {"b1", "a2 a3 a1 @"},
          {"b2", "a3 a1 a2 @"},
          {"b3", "a1 a2 a3 @"},
      });
}

// scenario keeping a1 a4 a5 and b1 b4 b5; two stable matchings.
// b4 reverses a4/a5 relative to the aggregate, which is fine: only student
// rows have to agree with the aggregate order for rank bookkeeping
inline Instance scenario_j2() {
  return make_market(
      {"a1", "a4", "a5"},
      {{"b1", 1}, {"b4", 1}, {"b5", 1}},
      {
          {"a1", "b1 b4 @"},
          {"a4", "b4 b5 @"},
          {"a5", "b5 b4 @"},
          {"b1", "a1 @"},
          {"b4", "a1 a5 a4 @"},
          {"b5", "a4 a5 @"},
      });
}

struct sibling_market {
  Instance inst;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> activity_ids;
  std::vector<std::vector<std::string>> activity_schools;
};

// one sibling pair, two activities, four stable matchings forming a diamond;
// only the top and bottom co-locate the siblings
inline sibling_market two_activity_market() {
  sibling_market f;
  f.inst = make_market(
      {"a1", "s1", "a2", "a3", "a4"},
      {{"x1", 1}, {"y1", 1}, {"z1", 1}, {"x2", 1}, {"y2", 1}},
      {
          {"a1", "x1 x2 @"},
          {"s1", "y1 y2 @"},
          {"a2", "z1 @"},
          {"a3", "x2 x1 @"},
          {"a4", "y2 y1 @"},
          {"x1", "a3 a1 @"},
          {"y1", "a4 s1 @"},
          {"z1", "a2 @"},
          {"x2", "a1 a3 @"},
          {"y2", "s1 a4 @"},
      });
  f.pairs = {{"a1", "s1"}};
  f.activity_ids = {"act1", "act2"};
  f.activity_schools = {{"x1", "y1", "z1"}, {"x2", "y2"}};
  return f;
}

// three sibling pairs over two mirrored cyclic halves; nine stable matchings,
// co-location count is 3 on the diagonal and 0 off it
inline sibling_market three_pair_cyclic_market() {
  sibling_market f;
  f.inst = make_market(
      {"a1", "a2", "a3", "d1", "d2", "d3"},
      {{"b1", 1}, {"b2", 1}, {"b3", 1}, {"e1", 1}, {"e2", 1}, {"e3", 1}},
      {
          {"a1", "b1 b2 b3 @"},
          {"a2", "b2 b3 b1 @"},
          {"a3", "b3 b1 b2 @"},
          {"d1", "e1 e2 e3 @"},
          {"d2", "e2 e3 e1 @"},
          {"d3", "e3 e1 e2 @"},
          {"b1", "a2 a3 a1 @"},
          {"b2", "a3 a1 a2 @"},
          {"b3", "a1 a2 a3 @"},
          {"e1", "d2 d3 d1 @"},
          {"e2", "d3 d1 d2 @"},
          {"e3", "d1 d2 d3 @"},
      });
  f.pairs = {{"a1", "d1"}, {"a2", "d2"}, {"a3", "d3"}};
  f.activity_ids = {"c1", "c2", "c3"};
  f.activity_schools = {{"b1", "e1"}, {"b2", "e2"}, {"b3", "e3"}};
  return f;
}

// one sibling pair whose halves traverse activities in opposite directions;
// the activity-co-located matchings are not closed under join
inline sibling_market opposed_siblings_market() {
  sibling_market f;
  f.inst = make_market(
      {"a1", "a2", "a3", "d1", "d2", "d3"},
      {{"b1", 1}, {"b2", 1}, {"b3", 1}, {"e1", 1}, {"e2", 1}, {"e3", 1}},
      {
          {"a1", "b1 b2 b3 @"},
          {"a2", "b2 b1 @ b3"},
          {"a3", "b3 b2 @ b1"},
          {"d1", "e3 e2 e1 @"},
          {"d2", "e2 e3 @ e1"},
          {"d3", "e1 e2 @ e3"},
          {"b1", "a2 a1 @ a3"},
          {"b2", "a3 a1 a2 @"},
          {"b3", "a1 a3 @ a2"},
          {"e1", "d1 d3 @ d2"},
          {"e2", "d3 d1 d2 @"},
          {"e3", "d2 d1 @ d3"},
      });
  f.pairs = {{"a1", "d1"}};
  f.activity_ids = {"c1", "c2", "c3"};
  f.activity_schools = {{"b1", "e1"}, {"b2", "e2"}, {"b3", "e3"}};
  return f;
}

}  // namespace fixtures
