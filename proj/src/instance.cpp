#include "stablecut/instance.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace stablecut {

int Instance::student_index(const std::string& id) const {
  for (int i = 0; i < n_students(); ++i)
    if (student_ids[i] == id) return i;
  return -1;
}

int Instance::school_index(const std::string& id) const {
  for (int i = 0; i < n_schools(); ++i)
    if (school_ids[i] == id) return i;
  return -1;
}

static std::optional<std::string> check_perm(const std::vector<int>& pref,
                                             int n_partners,
                                             const std::string& who) {
  // must contain OUTSIDE once and every partner index once
  std::vector<int> seen(n_partners, 0);
  int outside_count = 0;
  for (int x : pref) {
    if (x == OUTSIDE) {
      ++outside_count;
    } else if (x < 0 || x >= n_partners) {
      return "preference of " + who + " mentions unknown index";
    } else {
      ++seen[x];
    }
  }
  if (outside_count != 1) return "preference of " + who + " must list the outside option exactly once";
  for (int i = 0; i < n_partners; ++i)
    if (seen[i] != 1) return "preference of " + who + " must list every partner exactly once";
  return std::nullopt;
}

std::optional<std::string> Instance::validate() const {
  std::set<std::string> ids(student_ids.begin(), student_ids.end());
  if ((int)ids.size() != n_students()) return "duplicate student id";
  ids = std::set<std::string>(school_ids.begin(), school_ids.end());
  if ((int)ids.size() != n_schools()) return "duplicate school id";
  if ((int)quota.size() != n_schools()) return "quota list size mismatch";
  for (int b = 0; b < n_schools(); ++b) {
    if (quota[b] < 1) return "quota of " + school_ids[b] + " must be positive";
    if (quota[b] > std::max(1, n_students()))
      return "quota of " + school_ids[b] + " exceeds the student count";
  }
  if ((int)student_pref.size() != n_students()) return "student preference list count mismatch";
  if ((int)school_pref.size() != n_schools()) return "school preference list count mismatch";
  for (int a = 0; a < n_students(); ++a)
    if (auto e = check_perm(student_pref[a], n_schools(), student_ids[a])) return e;
  for (int b = 0; b < n_schools(); ++b)
    if (auto e = check_perm(school_pref[b], n_students(), school_ids[b])) return e;
  return std::nullopt;
}

std::vector<std::vector<int>> Matching::rosters(const Instance& inst) const {
  std::vector<std::vector<int>> r(inst.n_schools());
  for (int a = 0; a < (int)assign.size(); ++a)
    if (assign[a] != OUTSIDE) r[assign[a]].push_back(a);
  return r;
}

RankTable RankTable::build(const Instance& inst) {
  RankTable rt;
  rt.student_rank.assign(inst.n_students(), std::vector<int>(inst.n_schools() + 1, 0));
  for (int a = 0; a < inst.n_students(); ++a)
    for (int pos = 0; pos < (int)inst.student_pref[a].size(); ++pos) {
      int b = inst.student_pref[a][pos];
      rt.student_rank[a][b == OUTSIDE ? inst.n_schools() : b] = pos + 1;
    }
  rt.school_rank.assign(inst.n_schools(), std::vector<int>(inst.n_students() + 1, 0));
  for (int b = 0; b < inst.n_schools(); ++b)
    for (int pos = 0; pos < (int)inst.school_pref[b].size(); ++pos) {
      int a = inst.school_pref[b][pos];
      rt.school_rank[b][a == OUTSIDE ? inst.n_students() : a] = pos + 1;
    }
  return rt;
}

static StabilityReport malformed(const std::string& detail) {
  return {StabilityReport::Verdict::malformed, detail, -1, -1};
}

StabilityReport is_stable(const Instance& inst, const Matching& m) {
  if ((int)m.assign.size() != inst.n_students())
    return malformed("assignment size does not match the student count");
  for (int a = 0; a < inst.n_students(); ++a)
    if (m.assign[a] != OUTSIDE && (m.assign[a] < 0 || m.assign[a] >= inst.n_schools()))
      return malformed("student " + inst.student_ids[a] + " assigned to an unknown school");
  auto rosters = m.rosters(inst);
  for (int b = 0; b < inst.n_schools(); ++b)
    if ((int)rosters[b].size() > inst.quota[b])
      return malformed("school " + inst.school_ids[b] + " exceeds its quota");

  auto rt = RankTable::build(inst);
  // blocking agents: matched below the outside option on either side
  for (int a = 0; a < inst.n_students(); ++a) {
    int b = m.assign[a];
    if (b != OUTSIDE && rt.of_student(a, b) > rt.of_student(a, OUTSIDE))
      return {StabilityReport::Verdict::unstable,
              "student " + inst.student_ids[a] + " prefers leaving " + inst.school_ids[b],
              a, b};
  }
  for (int b = 0; b < inst.n_schools(); ++b)
    for (int a : rosters[b])
      if (rt.of_school(b, a) > rt.of_school(b, OUTSIDE))
        return {StabilityReport::Verdict::unstable,
                "school " + inst.school_ids[b] + " prefers dropping " + inst.student_ids[a],
                a, b};
  // blocking pairs
  for (int a = 0; a < inst.n_students(); ++a) {
    int cur = rt.of_student(a, m.assign[a]);
    for (int b : inst.student_pref[a]) {
      if (b == OUTSIDE) break;  // schools past this point are unacceptable
      if (rt.of_student(a, b) >= cur) break;
      bool school_wants = false;
      if ((int)rosters[b].size() < inst.quota[b]) {
        school_wants = rt.of_school(b, a) < rt.of_school(b, OUTSIDE);
      } else {
        for (int a2 : rosters[b])
          if (rt.of_school(b, a) < rt.of_school(b, a2)) school_wants = true;
      }
      if (school_wants)
        return {StabilityReport::Verdict::unstable,
                "blocking pair (" + inst.student_ids[a] + ", " + inst.school_ids[b] + ")",
                a, b};
    }
  }
  return {};
}

static Matching da_students(const Instance& inst, const RankTable& rt) {
  int n = inst.n_students();
  std::vector<int> next(n, 0);                       // position in own list
  std::vector<int> held(n, OUTSIDE);                 // school holding this student
  std::vector<std::set<std::pair<int, int>>> pool(inst.n_schools());  // (rank, student)
  std::vector<int> free;
  for (int a = n - 1; a >= 0; --a) free.push_back(a);
  while (!free.empty()) {
    int a = free.back();
    free.pop_back();
    while (next[a] < (int)inst.student_pref[a].size()) {
      int b = inst.student_pref[a][next[a]++];
      if (b == OUTSIDE) break;  // rather stay out than go further down
      if (rt.of_school(b, a) > rt.of_school(b, OUTSIDE)) continue;
      auto& p = pool[b];
      p.insert({rt.of_school(b, a), a});
      if ((int)p.size() <= inst.quota[b]) {
        held[a] = b;
        break;
      }
      auto worst = std::prev(p.end());
      int bumped = worst->second;
      p.erase(worst);
      if (bumped == a) continue;
      held[bumped] = OUTSIDE;
      held[a] = b;
      free.push_back(bumped);
      break;
    }
  }
  return {held};
}

static Matching da_schools(const Instance& inst, const RankTable& rt) {
  int nb = inst.n_schools();
  std::vector<int> next(nb, 0);
  std::vector<int> held(inst.n_students(), OUTSIDE);  // school currently held by student
  std::vector<int> filled(nb, 0);
  bool progress = true;
  while (progress) {
    progress = false;
    for (int b = 0; b < nb; ++b) {
      while (filled[b] < inst.quota[b] && next[b] < (int)inst.school_pref[b].size()) {
        int a = inst.school_pref[b][next[b]];
        if (a == OUTSIDE) {
          next[b] = (int)inst.school_pref[b].size();  // never propose past it
          break;
        }
        ++next[b];
        if (rt.of_student(a, b) > rt.of_student(a, OUTSIDE)) continue;
        int old = held[a];
        if (old == OUTSIDE || rt.of_student(a, b) < rt.of_student(a, old)) {
          held[a] = b;
          ++filled[b];
          if (old != OUTSIDE) {
            --filled[old];
            progress = true;  // old school regains capacity, must resume
          }
        }
      }
    }
  }
  return {held};
}

Matching deferred_acceptance(const Instance& inst, Side proposing) {
  if (auto e = inst.validate()) throw std::invalid_argument(*e);
  auto rt = RankTable::build(inst);
  return proposing == Side::students ? da_students(inst, rt) : da_schools(inst, rt);
}

Matching lattice_op(const Instance& inst, LatticeOp op, const Matching& m1,
                    const Matching& m2) {
  if (!is_stable(inst, m1) || !is_stable(inst, m2))
    throw std::invalid_argument("lattice_op requires stable inputs");
  auto rt = RankTable::build(inst);
  Matching out;
  out.assign.resize(inst.n_students());
  for (int a = 0; a < inst.n_students(); ++a) {
    int r1 = rt.of_student(a, m1.assign[a]);
    int r2 = rt.of_student(a, m2.assign[a]);
    bool take_first = (op == LatticeOp::join) ? (r1 <= r2) : (r1 >= r2);
    out.assign[a] = take_first ? m1.assign[a] : m2.assign[a];
  }
  return out;
}

Dominance dominance(const RankTable& rt, const Matching& m1, const Matching& m2) {
  bool better = false, worse = false;
  for (int a = 0; a < (int)m1.assign.size(); ++a) {
    int r1 = rt.of_student(a, m1.assign[a]);
    int r2 = rt.of_student(a, m2.assign[a]);
    if (r1 < r2) better = true;
    if (r1 > r2) worse = true;
  }
  if (better && worse) return Dominance::incomparable;
  if (better) return Dominance::first;
  if (worse) return Dominance::second;
  return Dominance::equal;
}

namespace {

struct brute_state {
  const Instance& inst;
  const RankTable& rt;
  long long limit;
  std::vector<int> assign;
  std::vector<int> used;
  std::vector<Matching> found;

  // only individually rational assignments can be stable
  void rec(int a) {
    if (a == inst.n_students()) {
      Matching m{assign};
      if (is_stable(inst, m)) {
        found.push_back(std::move(m));
        if ((long long)found.size() > limit)
          throw std::runtime_error("stable matching count exceeds the limit");
      }
      return;
    }
    assign[a] = OUTSIDE;
    rec(a + 1);
    for (int b : inst.student_pref[a]) {
      if (b == OUTSIDE) break;
      if (used[b] >= inst.quota[b]) continue;
      if (rt.of_school(b, a) > rt.of_school(b, OUTSIDE)) continue;
      assign[a] = b;
      ++used[b];
      rec(a + 1);
      --used[b];
      assign[a] = OUTSIDE;
    }
  }
};

}  // namespace

StableSet enumerate_stable_bruteforce(const Instance& inst, long long limit) {
  if (auto e = inst.validate()) throw std::invalid_argument(*e);
  auto rt = RankTable::build(inst);
  brute_state st{inst, rt, limit, std::vector<int>(inst.n_students(), OUTSIDE),
                 std::vector<int>(inst.n_schools(), 0), {}};
  st.rec(0);
  // rank-vector lexicographic order extends student dominance
  std::sort(st.found.begin(), st.found.end(),
            [&](const Matching& x, const Matching& y) {
              for (int a = 0; a < inst.n_students(); ++a) {
                int rx = rt.of_student(a, x.assign[a]);
                int ry = rt.of_student(a, y.assign[a]);
                if (rx != ry) return rx < ry;
              }
              return false;
            });
  return {std::move(st.found)};
}

Matching UnitCapacityClone::project(const Matching& unit_matching) const {
  Matching out;
  out.assign.resize(unit_matching.assign.size());
  for (int a = 0; a < (int)unit_matching.assign.size(); ++a) {
    int c = unit_matching.assign[a];
    out.assign[a] = c == OUTSIDE ? OUTSIDE : school_of_copy[c];
  }
  return out;
}

UnitCapacityClone clone_to_unit_capacity(const Instance& inst) {
  UnitCapacityClone cl;
  cl.copies_of.resize(inst.n_schools());
  Instance& u = cl.unit;
  u.student_ids = inst.student_ids;
  for (int b = 0; b < inst.n_schools(); ++b)
    for (int k = 0; k < inst.quota[b]; ++k) {
      cl.copies_of[b].push_back((int)u.school_ids.size());
      cl.school_of_copy.push_back(b);
      u.school_ids.push_back(inst.quota[b] == 1
                                 ? inst.school_ids[b]
                                 : inst.school_ids[b] + "#" + std::to_string(k));
      u.quota.push_back(1);
      u.school_pref.push_back({});  // filled below
    }
  for (int c = 0; c < (int)u.school_ids.size(); ++c)
    u.school_pref[c] = inst.school_pref[cl.school_of_copy[c]];
  u.student_pref.resize(inst.n_students());
  for (int a = 0; a < inst.n_students(); ++a)
    for (int b : inst.student_pref[a]) {
      if (b == OUTSIDE) {
        u.student_pref[a].push_back(OUTSIDE);
      } else {
        for (int c : cl.copies_of[b]) u.student_pref[a].push_back(c);
      }
    }
  return cl;
}

}  // namespace stablecut
