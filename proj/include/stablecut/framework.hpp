#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stablecut/flow.hpp"
#include "stablecut/instance.hpp"
#include "stablecut/rotations.hpp"

namespace stablecut {

// which stable matchings count as feasible
struct SublatticeSpec {
  enum class Mode { all, explicit_list };
  Mode mode = Mode::all;
  std::vector<Matching> matchings;  // explicit_list only

  static SublatticeSpec all() { return {}; }
  static SublatticeSpec of(std::vector<Matching> ms) {
    return {Mode::explicit_list, std::move(ms)};
  }
  // materializes the stable matchings passing a membership predicate
  static SublatticeSpec where(const Instance& inst,
                              const std::function<bool(const Matching&)>& keep,
                              long long limit = 1000000);
};

// rotation classes that feasible matchings always eliminate together.
// theta0 is eliminated in every feasible matching, thetaz in none; the proper
// classes carry the partial order (cleq[i][j]: class i eliminated no later
// than class j in every feasible matching)
struct MetaRotationPartition {
  std::vector<int> theta0, thetaz;
  std::vector<std::vector<int>> proper;
  std::vector<int> rep;  // lowest rotation id of each proper class
  std::vector<std::vector<char>> cleq;
  std::vector<std::vector<int>> covers;  // immediate successor classes

  int n_classes() const { return (int)proper.size(); }
  bool before(int i, int j) const { return i != j && cleq[i][j]; }
};

// feasibility pair violating meet/join closure
struct SublatticeCertificate {
  Matching a, b, violation;
  bool join = false;  // violation is the join of a and b (else the meet)
};

struct MetaRotationResult {
  std::optional<MetaRotationPartition> partition;
  std::optional<SublatticeCertificate> failure;
};

MetaRotationResult meta_rotations(const Instance& inst, const RotationOrder& order,
                                  const SublatticeSpec& feasible);

// translate between class subsets and rotation upsets
UpSet rotation_upset(const MetaRotationPartition& part, const std::vector<int>& classes);
// classes whose rotations are all in r; throws when r does not align with the
// partition (some class split, theta0 missing, or thetaz touched)
std::vector<int> class_upset(const MetaRotationPartition& part, const UpSet& r);
Matching matching_of_classes(const Instance& inst, const RotationOrder& order,
                             const MetaRotationPartition& part,
                             const std::vector<int>& classes);

// objective over feasible matchings
struct ObjectiveSpec {
  enum class Mode { oracle, linear, structured };
  Mode mode = Mode::oracle;
  std::function<Rat(const Matching&)> eval;           // oracle
  std::map<std::pair<int, int>, Rat> weights;         // linear: (a, b or OUTSIDE) -> w
  std::vector<Rat> d1;                                // structured: per proper class
  std::vector<std::vector<Rat>> d2;                   // structured: symmetric, zero diagonal
  Rat value_at_top = 0;                               // structured: f at the feasible optimum

  static ObjectiveSpec of(std::function<Rat(const Matching&)> f);
  static ObjectiveSpec linear(std::map<std::pair<int, int>, Rat> w);
  static ObjectiveSpec tables(std::vector<Rat> first, std::vector<std::vector<Rat>> second,
                              Rat at_top);
  // direct evaluation; structured mode cannot be evaluated pointwise
  Rat value(const Matching& m) const;
};

// first and second order differential tables of f over the proper classes
ObjectiveSpec differentials(const Instance& inst, const RotationOrder& order,
                            const MetaRotationPartition& part, const ObjectiveSpec& f);

// second-order expansion of f from its tables
Rat expansion_value(const ObjectiveSpec& tables, const std::vector<int>& classes);

struct CutDigraphBundle {
  FlowNetwork network;  // vertex 0 = source, 1 = sink, rotation id r at 2 + r
  Rat gamma = 0;
  Rat constant = 0;               // cut value minus constant recovers f
  std::vector<int> theta_of_vertex;  // proper class per vertex; -1 s/t, -2 theta0, -3 thetaz

  static int vertex_of(int rotation_id) { return rotation_id + 2; }
  static int rotation_of(int vertex) { return vertex - 2; }
};

struct NegativePairCertificate {
  int theta = 0, theta_prime = 0;  // proper class indices
  Rat value;                       // the offending second-order differential
};

// builds the witness digraph; requires structured tables with no negative
// second-order entry (gamma defaults to the smallest feasible value)
CutDigraphBundle build_cut_digraph(const Instance& inst, const RotationOrder& order,
                                   const MetaRotationPartition& part,
                                   const ObjectiveSpec& tables,
                                   std::optional<Rat> gamma = std::nullopt);

struct ExpansionCertificate {
  Matching m;
  Rat f_value, approx_value;
};

struct RepresentabilityReport {
  enum class Verdict { representable, consistent_with_representable, not_representable };
  Verdict verdict = Verdict::not_representable;
  std::optional<MetaRotationPartition> partition;
  std::optional<ObjectiveSpec> tables;
  std::optional<CutDigraphBundle> bundle;
  // exactly one is set when not representable
  std::optional<SublatticeCertificate> sublattice_failure;
  std::optional<NegativePairCertificate> negative_pair;
  std::optional<ExpansionCertificate> expansion_failure;
  // necessary condition observed in exact mode: minima form a sublattice
  bool minima_closed = true;
  std::string describe() const;
};

struct CheckMode {
  bool exact = true;
  int samples = 0;        // sampled mode: number of feasible matchings probed
  unsigned seed = 0;
  long long enumeration_cap = 1000000;
};

RepresentabilityReport check_representability(const Instance& inst,
                                              const RotationOrder& order,
                                              const SublatticeSpec& feasible,
                                              const ObjectiveSpec& f,
                                              CheckMode mode = {});

// true iff every off-diagonal second-order entry is zero
bool is_linearizable(const ObjectiveSpec& tables,
                     std::optional<NegativePairCertificate>* witness = nullptr);

// arc-union with scaled finite capacities; infinite skeleton arcs are shared
CutDigraphBundle conic_combine(const std::vector<CutDigraphBundle>& bundles,
                               const std::vector<Rat>& coeffs);

struct MinimizeResult {
  Matching argmin;
  Rat value = 0;
  std::vector<int> classes;  // eliminated proper classes of the argmin
  CutDigraphBundle bundle;
  CutResult cut;
};

// end to end: certify, build, cut, map the canonical source side back
MinimizeResult minimize(const Instance& inst, const RotationOrder& order,
                        const SublatticeSpec& feasible, const ObjectiveSpec& f);

// solve a prebuilt bundle (objective already baked in)
MinimizeResult minimize_bundle(const Instance& inst, const RotationOrder& order,
                               const MetaRotationPartition& part,
                               const CutDigraphBundle& bundle);

}  // namespace stablecut
