#pragma once

#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stablecut/framework.hpp"
#include "stablecut/instance.hpp"
#include "stablecut/rotations.hpp"

namespace stablecut {

// pair costs keyed by aggregate indices; OUTSIDE on the school slot charges an
// unmatched student, OUTSIDE on the student slot charges an empty school.
// missing keys cost nothing
using CostMap = std::map<std::pair<int, int>, Rat>;

// a second-stage market with its probability; agents carry aggregate ids
struct Scenario {
  std::string name;
  Instance inst;
  Rat prob = 0;
};

// seedable source of second-stage markets
using ScenarioSampler = std::function<Instance(std::mt19937&)>;

struct TwoStageInstance {
  Instance aggregate;
  Instance first;                  // the first-stage market, a sub-instance
  std::vector<Scenario> scenarios; // explicit-distribution mode
  ScenarioSampler sampler;         // sampling mode, consumed by solve_saa
  CostMap c1, c2;
  Rat lambda = 1;
  // dissatisfaction weights per (student, school or OUTSIDE) aggregate pair,
  // replacing ranks; must not decrease down any preference list
  std::optional<CostMap> weight;

  // nullopt when consistent: sub-instances restrict the aggregate student
  // orders, probabilities form a distribution, weights are monotone
  std::optional<std::string> validate() const;
};

// index translation from a sub-instance into the aggregate, by agent id
struct AgentMap {
  std::vector<int> student_to_agg, school_to_agg;

  static AgentMap of(const Instance& agg, const Instance& sub);  // throws on foreign ids
};

// total cost of a matching of a sub-instance under aggregate-keyed charges;
// empty schools are billed through (OUTSIDE, b) keys
Rat cost_value(const Instance& agg, const Instance& sub, const CostMap& c, const Matching& m);

// the tagged disjoint union of the first stage and a scenario list; the
// rotation system is assembled from the parts, never re-extracted
struct UnionInstance {
  Instance inst;  // agent ids tagged "<id>~<part>", cross-part pairs unacceptable
  // union index -> owning part (0 = first stage) and index there
  std::vector<int> student_src, student_orig, school_src, school_orig;
  // union index -> aggregate index
  std::vector<int> student_agg, school_agg;
  // [part][local index] -> union index
  std::vector<std::vector<int>> student_of, school_of;
  RotationSystem sys;
  std::vector<int> rot_src, rot_orig;  // union rotation -> part and rotation there

  int n_parts() const { return (int)student_of.size(); }
};

UnionInstance disjoint_union(const TwoStageInstance& ts, const std::vector<Scenario>& scenarios);

// componentwise bijection between union stable matchings and part tuples
Matching project(const UnionInstance& u, const Matching& m, int part);
Matching lift(const UnionInstance& u, const std::vector<Matching>& parts);

// stable-partner ladders per union student and the rotation steps walking them
struct PsiMap {
  // [union student] partners from the student optimum down, worsening
  std::vector<std::vector<int>> ladder;
  // [rotation id] -> (union student, step j): eliminating the rotation moves
  // the student onto ladder[student][j]
  std::vector<std::vector<std::pair<int, int>>> step;
};

PsiMap psi_map(const UnionInstance& u);

// rank drop of students present in both markets, aggregate ranks, scaled by
// lambda; weight mode replaces ranks when weights are present
Rat dissatisfaction(const TwoStageInstance& ts, const Matching& m_first,
                    const Matching& m_scen, const Instance& scen);

struct SecondStageResult {
  Matching matching;  // scenario-local indices
  Rat value = 0;      // c2 plus dissatisfaction at the argmin
};

// best recourse against a fixed first-stage matching: the dissatisfaction
// term is linear in the scenario pairs, so one linear cut solve suffices
SecondStageResult second_stage_best(const TwoStageInstance& ts, const Matching& m_first,
                                    const Instance& scen);

// the two-stage objective of a first-stage matching against an explicit list
Rat evaluate_first_stage(const TwoStageInstance& ts, const std::vector<Scenario>& scenarios,
                         const Matching& m_first);

// length of [x,y] overlapped with [z,w] for x<=y and z<=w, via the four-term
// positive-part identity
Rat interval_overlap(const Rat& x, const Rat& y, const Rat& z, const Rat& w);

// differential tables of the coupling term between the first stage and part k
// for one student, over the union rotations; zero tables when the student is
// missing from either side, linear when unmatched on one of them
ObjectiveSpec f3_tables(const UnionInstance& u, const PsiMap& psi, const TwoStageInstance& ts,
                        int agg_student, int part);

struct ExpTwoStageResult {
  Matching first_stage;                // first-instance indices
  std::vector<Matching> second_stage;  // per scenario, local indices
  std::vector<Scenario> scenarios;     // the list the solve ran against
  Rat value = 0;                       // direct evaluation at the projections
  MinimizeResult mincut;               // the union solve behind the answer
};

// exact solve of the expected two-stage objective over ts.scenarios
ExpTwoStageResult solve_exp_2sto(const TwoStageInstance& ts);

// samples needed for the additive-error guarantee; exact rational inputs,
// natural logarithms, rounded up
Int sample_count(const TwoStageInstance& ts, const Rat& epsilon, const Rat& alpha);

struct SaaResult {
  Matching first_stage;           // first-instance indices
  Rat value = 0;                  // optimum of the sampled program
  Int k_required;                 // sample_count output
  long long k_used = 0;           // draws actually taken
  bool guarantee_void = false;    // the budget cut the sample size
  std::vector<Scenario> sampled;  // deduplicated draws, empirical probabilities
  std::vector<Matching> second_stage;  // recourses per sampled scenario
};

// sample-average solve with the instance sampler; the statistical guarantee
// needs k_used = k_required, smaller budgets void it
SaaResult solve_saa(const TwoStageInstance& ts, const Rat& epsilon, const Rat& alpha,
                    unsigned seed, std::optional<long long> budget = std::nullopt);

// best first stage against realized scenarios with empirical probabilities
ExpTwoStageResult hindsight_best(const TwoStageInstance& ts,
                                 const std::vector<Instance>& realized);

}  // namespace stablecut
