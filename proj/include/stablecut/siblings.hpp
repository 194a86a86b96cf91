#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stablecut/framework.hpp"

namespace stablecut {

// matching market plus disjoint sibling pairs that want to attend together
struct SiblingInstance {
  Instance base;
  std::vector<std::pair<int, int>> pairs;  // student indices, members distinct

  std::optional<std::string> validate() const;
};

// schools partitioned into named activities; a student may rank at most one
// school per activity above OUTSIDE
struct ActivityStructure {
  std::vector<std::string> names;
  std::vector<std::vector<int>> classes;   // schools offering each activity
  std::vector<int> group_of;               // school -> activity
  std::vector<std::vector<int>> eligible;  // [student][activity] -> school or -1

  // same_order_pairs must rank the same activities in the same order
  static ActivityStructure of(const Instance& inst, std::vector<std::string> names,
                              std::vector<std::vector<int>> classes,
                              const std::vector<std::pair<int, int>>& same_order_pairs = {});

  int size() const { return (int)names.size(); }
  int activity_of(int school) const { return group_of[school]; }
  // activities the student ranks above OUTSIDE, best first
  std::vector<int> ranked_activities(const Instance& inst, int student) const;
  bool orders_agree(const Instance& inst, int a, int abar) const;
};

// rewrites the market so no pair shares a school in the student-optimal or
// student-pessimal matching, splicing in one dummy student and school per
// violation; stable matchings correspond through lift and restrict
struct MsssNormalization {
  SiblingInstance normalized;

  struct Step {
    int dummy_student = -1;
    int dummy_school = -1;
    int moved_student = -1;  // the pair member pried off anchor_school
    int anchor_school = -1;
  };
  std::vector<Step> steps;

  // stable matching of the pre-step instance -> stable in the post-step one
  Matching lift(const Matching& m) const;
  // inverse direction; co-locates every pair the input co-located
  Matching restrict(const Matching& m) const;
};

MsssNormalization normalize_msss(const SiblingInstance& si);

// the unique rotations switching co-location of a and abar at b on and off;
// nullopt when no stable matching puts both there, throws when the
// student-optimal or student-pessimal matching already co-locates the pair
std::optional<std::pair<int, int>> rho_in_out(const Instance& inst,
                                              const RotationOrder& order, int a,
                                              int abar, int b);

struct MsssResult {
  Matching matching;   // stable in si.base
  int separated = 0;   // pairs split across schools, minimized
};

// min-separated-sibling-students: stable matching keeping apart as few pairs
// as possible
MsssResult solve_msss(const SiblingInstance& si);

// implied-rotation endpoints; sentinels mark the always-eliminated and
// never-eliminated sides
inline constexpr int IRP_EMPTY = -2;
inline constexpr int IRP_INFTY = -3;

struct IrpSpec {
  int theta = IRP_EMPTY;
  int theta_bar = IRP_EMPTY;
};

// cut digraph whose finite cuts are exactly the upsets containing both
// endpoints or neither (sentinels force one side); violations cost 1
CutDigraphBundle irp_digraph(const Instance& inst, const RotationOrder& order,
                             const IrpSpec& spec);

// implied-rotation constraints that hold simultaneously exactly when the pair
// attends the same activity; requires at least two shared stable activities
std::vector<IrpSpec> mssp_pair_family(const Instance& inst, const RotationOrder& order,
                                      const ActivityStructure& acts, int a, int abar);

// min-separated-siblings-by-program: stable matching placing every pair in a
// common activity, nullopt when none exists
std::optional<Matching> solve_mssp(const Instance& inst, const ActivityStructure& acts,
                                   const std::vector<std::pair<int, int>>& pairs);

// exhaustive fallback for pairs ranking activities in different orders; the
// decision problem is NP-complete, so enumeration is capped
std::optional<Matching> solve_msdp_bruteforce(const Instance& inst,
                                              const ActivityStructure& acts,
                                              const std::vector<std::pair<int, int>>& pairs,
                                              long long limit = 1000000);

}  // namespace stablecut
