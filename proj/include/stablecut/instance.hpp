#pragma once

#include <optional>
#include <string>
#include <vector>

namespace stablecut {

// sentinel used in preference lists and assignments
inline constexpr int OUTSIDE = -1;

enum class Side { students, schools };

struct Instance {
  std::vector<std::string> student_ids;
  std::vector<std::string> school_ids;
  std::vector<int> quota;  // per school, >= 1
  // each list is a permutation of the partner side's indices plus OUTSIDE
  std::vector<std::vector<int>> student_pref;
  std::vector<std::vector<int>> school_pref;

  int n_students() const { return (int)student_ids.size(); }
  int n_schools() const { return (int)school_ids.size(); }
  int student_index(const std::string& id) const;  // -1 when absent
  int school_index(const std::string& id) const;

  // nullopt when well formed, otherwise a description of the first defect
  std::optional<std::string> validate() const;
};

struct Matching {
  std::vector<int> assign;  // per student: school index or OUTSIDE

  std::vector<std::vector<int>> rosters(const Instance& inst) const;
  bool operator==(const Matching&) const = default;
  auto operator<=>(const Matching&) const = default;
};

struct RankTable {
  // rank[a][b], slot n_schools holds OUTSIDE; 1 = most preferred
  std::vector<std::vector<int>> student_rank;
  // rank[b][a], slot n_students holds OUTSIDE
  std::vector<std::vector<int>> school_rank;

  static RankTable build(const Instance& inst);
  int of_student(int a, int b) const {
    return b == OUTSIDE ? student_rank[a].back() : student_rank[a][b];
  }
  int of_school(int b, int a) const {
    return a == OUTSIDE ? school_rank[b].back() : school_rank[b][a];
  }
};

struct StabilityReport {
  enum class Verdict { stable, unstable, malformed };
  Verdict verdict = Verdict::stable;
  std::string detail;             // witness or structural defect
  int student = -1, school = -1;  // blocking pair / agent when unstable

  explicit operator bool() const { return verdict == Verdict::stable; }
};

StabilityReport is_stable(const Instance& inst, const Matching& m);

Matching deferred_acceptance(const Instance& inst, Side proposing);

enum class LatticeOp { meet, join };

// student-wise best (join) or worst (meet) of two stable matchings
Matching lattice_op(const Instance& inst, LatticeOp op, const Matching& m1,
                    const Matching& m2);

enum class Dominance { first, equal, second, incomparable };

// first = m1 dominates m2 (every student weakly prefers m1)
Dominance dominance(const RankTable& rt, const Matching& m1, const Matching& m2);

struct StableSet {
  // student-dominance topological order: student-optimal first
  std::vector<Matching> matchings;
};

StableSet enumerate_stable_bruteforce(const Instance& inst, long long limit = 1000000);

struct UnitCapacityClone {
  Instance unit;                            // all quotas 1
  std::vector<int> school_of_copy;          // copy -> original school
  std::vector<std::vector<int>> copies_of;  // original school -> copies

  Matching project(const Matching& unit_matching) const;
};

UnitCapacityClone clone_to_unit_capacity(const Instance& inst);

}  // namespace stablecut
