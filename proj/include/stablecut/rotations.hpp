#pragma once

#include <vector>

#include "stablecut/instance.hpp"

namespace stablecut {

struct Rotation {
  int id = -1;
  // pairs sorted by student index; plus = pairs left behind, minus = pairs entered
  std::vector<std::pair<int, int>> plus;
  std::vector<std::pair<int, int>> minus;

  std::vector<int> students() const;
  bool operator==(const Rotation&) const = default;
};

struct RotationOrder {
  std::vector<Rotation> rotations;
  // leq[i][j]: i is eliminated no later than j on every maximal chain
  std::vector<std::vector<char>> leq;
  // Hasse reduction of the strict part, covers[i] = js covered by i
  std::vector<std::vector<int>> covers;

  int size() const { return (int)rotations.size(); }
  bool before(int i, int j) const { return i != j && leq[i][j]; }
};

struct UpSet {
  std::vector<int> members;  // sorted rotation ids

  bool contains(int id) const;
  bool operator==(const UpSet&) const = default;
};

// rotations exposed in m, unordered ids (id = -1); m must be stable
std::vector<Rotation> exposed_rotations(const Instance& inst, const Matching& m);

// removes plus pairs, adds minus pairs; rho must be exposed in m
Matching eliminate(const Instance& inst, const Matching& m, const Rotation& rho);

// complete rotation set, ids in first-exposure order along the canonical chain
std::vector<Rotation> all_rotations(const Instance& inst);

enum class OrderAlgo { automatic, greedy, clone_digraph };

// full order over all_rotations(inst); greedy is the reference semantics,
// clone_digraph the large-instance path, automatic picks by rotation count
RotationOrder rotation_order(const Instance& inst, OrderAlgo algo = OrderAlgo::automatic);

UpSet upset_of(const Instance& inst, const RotationOrder& order, const Matching& m);
Matching matching_of(const Instance& inst, const RotationOrder& order, const UpSet& r);

// all upper-closed sets ordered by (size, lexicographic members)
std::vector<UpSet> enumerate_upsets(const RotationOrder& order, long long limit = 1000000);

// immutable bundle reused across framework calls
struct RotationSystem {
  Instance inst;
  RankTable rt;
  Matching m0, mz;
  RotationOrder order;
  // per student: rotation ids moving the student, in chain order
  std::vector<std::vector<int>> student_chain;

  Matching realize(const UpSet& r) const;  // chain-based matching_of
  UpSet upset(const Matching& m) const;    // chain-based upset_of
};

RotationSystem build_rotation_system(const Instance& inst, OrderAlgo algo = OrderAlgo::automatic);

}  // namespace stablecut
