#pragma once

#include <vector>

#include "stablecut/rat.hpp"

namespace stablecut {

struct Cap {
  bool inf = false;
  Rat v = 0;  // ignored when inf

  static Cap infinite() { return {true, 0}; }
  static Cap of(Rat x) { return {false, std::move(x)}; }
  Cap& operator+=(const Cap& o);
  bool operator==(const Cap&) const = default;
};

std::string cap_to_string(const Cap& c);  // "p/q" or "inf"

struct Arc {
  int tail = 0, head = 0;
  Cap cap;
};

struct FlowNetwork {
  int n_vertices = 2;
  int source = 0, sink = 1;
  std::vector<Arc> arcs;
};

struct CutResult {
  bool infinite = false;
  Rat value = 0;
  std::vector<char> source_side;  // per vertex, minimal minimum cut
  FlowNetwork merged;             // network the flow refers to
  std::vector<Rat> flow;          // per merged arc
};

// parallel arcs summed, INFINITY absorbing; zero-capacity arcs dropped
FlowNetwork merge_parallel_arcs(const FlowNetwork& net);

// exact min cut; source side is the residual-reachable set, the unique
// minimal minimizer
CutResult solve_min_cut(const FlowNetwork& net);

// capacity crossing source_side -> complement
Cap cut_capacity(const FlowNetwork& net, const std::vector<char>& source_side);

}  // namespace stablecut
