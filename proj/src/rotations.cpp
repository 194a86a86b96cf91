#include "stablecut/rotations.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>

namespace stablecut {

std::vector<int> Rotation::students() const {
  std::vector<int> out;
  for (auto& [a, b] : plus) out.push_back(a);
  return out;
}

bool UpSet::contains(int id) const {
  return std::binary_search(members.begin(), members.end(), id);
}

namespace {

// rotations exposed in a stable matching of a unit-quota instance, sorted by
// smallest student
std::vector<Rotation> exposed_unit(const Instance& inst, const RankTable& rt,
                                   const Matching& m) {
  int n = inst.n_students();
  std::vector<int> holder(inst.n_schools(), -1);
  for (int a = 0; a < n; ++a)
    if (m.assign[a] != OUTSIDE) holder[m.assign[a]] = a;
  std::vector<int> next(n, OUTSIDE);
  for (int a = 0; a < n; ++a) {
    if (m.assign[a] == OUTSIDE) continue;
    int cur = rt.of_student(a, m.assign[a]);
    for (auto& list = inst.student_pref[a]; cur < (int)list.size();) {
      int b = list[cur++];  // rank r sits at position r-1, so this walks the tail
      if (b == OUTSIDE) break;
      if (holder[b] < 0) {
        // a free slot that finds a acceptable pins a above it in every stable
        // matching, so the scan can never continue past one
        if (rt.of_school(b, a) < rt.of_school(b, OUTSIDE)) break;
        continue;
      }
      if (rt.of_school(b, a) < rt.of_school(b, holder[b])) {
        next[a] = b;
        break;
      }
    }
  }
  // cycles of a -> holder[next[a]]
  std::vector<int> state(n, 0);  // 0 fresh, 1 on current walk, 2 done
  std::vector<Rotation> out;
  for (int start = 0; start < n; ++start) {
    if (state[start] != 0) continue;
    std::vector<int> path;
    int a = start;
    while (a >= 0 && state[a] == 0) {
      state[a] = 1;
      path.push_back(a);
      a = next[a] == OUTSIDE ? -1 : holder[next[a]];
    }
    if (a >= 0 && state[a] == 1) {
      Rotation rho;
      auto it = std::find(path.begin(), path.end(), a);
      for (auto p = it; p != path.end(); ++p) {
        rho.plus.push_back({*p, m.assign[*p]});
        rho.minus.push_back({*p, next[*p]});
      }
      std::sort(rho.plus.begin(), rho.plus.end());
      std::sort(rho.minus.begin(), rho.minus.end());
      out.push_back(std::move(rho));
    }
    for (int p : path) state[p] = 2;
  }
  std::sort(out.begin(), out.end(),
            [](const Rotation& x, const Rotation& y) { return x.plus[0] < y.plus[0]; });
  return out;
}

bool all_unit(const Instance& inst) {
  for (int q : inst.quota)
    if (q != 1) return false;
  return true;
}

// stable matchings of the clone admit exactly one arrangement: each roster
// fills the school's copies in the school's own preference order
Matching lift_to_clone(const Instance& inst, const RankTable& rt,
                       const UnitCapacityClone& cl, const Matching& m) {
  Matching out;
  out.assign.assign(m.assign.size(), OUTSIDE);
  auto rosters = m.rosters(inst);
  for (int b = 0; b < inst.n_schools(); ++b) {
    auto roster = rosters[b];
    std::sort(roster.begin(), roster.end(), [&](int x, int y) {
      return rt.of_school(b, x) < rt.of_school(b, y);
    });
    for (int k = 0; k < (int)roster.size(); ++k)
      out.assign[roster[k]] = cl.copies_of[b][k];
  }
  return out;
}

Rotation project_rotation(const UnitCapacityClone& cl, const Rotation& unit_rho) {
  std::set<std::pair<int, int>> p, q;
  for (auto [a, c] : unit_rho.plus) p.insert({a, cl.school_of_copy[c]});
  for (auto [a, c] : unit_rho.minus) q.insert({a, cl.school_of_copy[c]});
  Rotation out;
  out.id = unit_rho.id;
  for (auto& pr : p)
    if (!q.count(pr)) out.plus.push_back(pr);
  for (auto& pr : q)
    if (!p.count(pr)) out.minus.push_back(pr);
  return out;
}

struct extraction {
  std::vector<Rotation> rotations;  // ids in first-exposure order
  std::vector<int> elim_seq;
  std::vector<std::vector<int>> student_chain;
  std::vector<std::vector<int>> school_chain;
  Matching m0, mz;
};

// canonical chain: expose, register new rotations by smallest student, then
// eliminate the first (ascending) or last (descending) exposed one
extraction extract(const Instance& unit, const RankTable& rt, bool ascending) {
  extraction ex;
  ex.m0 = deferred_acceptance(unit, Side::students);
  ex.student_chain.resize(unit.n_students());
  ex.school_chain.resize(unit.n_schools());
  std::map<std::vector<std::pair<int, int>>, int> id_of;
  Matching m = ex.m0;
  for (;;) {
    auto exp = exposed_unit(unit, rt, m);
    if (exp.empty()) break;
    for (auto& r : exp) {
      auto it = id_of.find(r.plus);
      if (it == id_of.end()) {
        Rotation reg = r;
        reg.id = (int)ex.rotations.size();
        id_of.emplace(r.plus, reg.id);
        ex.rotations.push_back(std::move(reg));
      }
    }
    auto& victim = ascending ? exp.front() : exp.back();
    int id = id_of[victim.plus];
    ex.elim_seq.push_back(id);
    for (auto& [a, b] : victim.plus) {
      ex.student_chain[a].push_back(id);
      ex.school_chain[b].push_back(id);
    }
    for (auto& [a, b] : victim.minus) m.assign[a] = b;
  }
  ex.mz = m;
  return ex;
}

std::set<std::vector<std::pair<int, int>>> key_set(const std::vector<Rotation>& rs) {
  std::set<std::vector<std::pair<int, int>>> out;
  for (auto& r : rs) out.insert(r.plus);
  return out;
}

using bits = std::vector<uint64_t>;

bits make_bits(int n) { return bits((n + 63) / 64, 0); }
void set_bit(bits& b, int i) { b[i / 64] |= uint64_t(1) << (i % 64); }
bool get_bit(const bits& b, int i) { return (b[i / 64] >> (i % 64)) & 1; }
void or_into(bits& dst, const bits& src) {
  for (size_t w = 0; w < dst.size(); ++w) dst[w] |= src[w];
}

// relation from chain adjacency: consecutive rotations on any agent's chain
// force elimination order, and the transitive closure is the full order
std::vector<std::vector<char>> order_from_chains(const extraction& ex) {
  int r = (int)ex.rotations.size();
  std::vector<std::vector<int>> succ(r);
  auto add_edges = [&](const std::vector<std::vector<int>>& chains) {
    for (auto& ch : chains)
      for (size_t k = 0; k + 1 < ch.size(); ++k) succ[ch[k]].push_back(ch[k + 1]);
  };
  add_edges(ex.student_chain);
  add_edges(ex.school_chain);
  std::vector<bits> reach(r, make_bits(r));
  // elim_seq is a linear extension; sweep it backwards
  for (int k = (int)ex.elim_seq.size() - 1; k >= 0; --k) {
    int i = ex.elim_seq[k];
    set_bit(reach[i], i);
    for (int j : succ[i]) or_into(reach[i], reach[j]);
  }
  std::vector<std::vector<char>> leq(r, std::vector<char>(r, 0));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) leq[i][j] = get_bit(reach[i], j);
  return leq;
}

// reference semantics: forbidding one rotation and eliminating greedily
// leaves exactly the rotations that cannot precede it
std::vector<std::vector<char>> order_greedy(const Instance& unit, const RankTable& rt,
                                            const extraction& ex) {
  int r = (int)ex.rotations.size();
  std::map<std::vector<std::pair<int, int>>, int> id_of;
  for (auto& rot : ex.rotations) id_of.emplace(rot.plus, rot.id);
  std::vector<std::vector<char>> leq(r, std::vector<char>(r, 0));
  for (int f = 0; f < r; ++f) {
    auto run = [&](bool ascending) {
      std::vector<char> eliminated(r, 0);
      Matching m = ex.m0;
      for (;;) {
        auto exp = exposed_unit(unit, rt, m);
        int pick = -1;
        for (auto& rho : exp) {
          int id = id_of.at(rho.plus);
          if (id == f) continue;
          if (pick == -1 || (ascending ? id < pick : id > pick)) pick = id;
        }
        if (pick == -1) break;
        eliminated[pick] = 1;
        for (auto& rho : exp)
          if (id_of.at(rho.plus) == pick)
            for (auto& [a, b] : rho.minus) m.assign[a] = b;
      }
      return eliminated;
    };
    auto elim = run(true);
    if (elim != run(false))
      throw std::logic_error("forbidden-rotation fixpoint depends on order");
    for (int j = 0; j < r; ++j) leq[f][j] = !elim[j];
  }
  return leq;
}

std::vector<std::vector<int>> hasse_covers(const std::vector<std::vector<char>>& leq) {
  int r = (int)leq.size();
  std::vector<bits> strict(r, make_bits(r));
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (i != j && leq[i][j]) set_bit(strict[i], j);
  std::vector<std::vector<int>> covers(r);
  for (int i = 0; i < r; ++i) {
    bits cand = strict[i];
    for (int j = 0; j < r; ++j)
      if (get_bit(strict[i], j))
        for (size_t w = 0; w < cand.size(); ++w) cand[w] &= ~strict[j][w];
    for (int j = 0; j < r; ++j)
      if (get_bit(cand, j)) covers[i].push_back(j);
  }
  return covers;
}

struct built_parts {
  UnitCapacityClone cl;
  bool cloned = false;
  Instance unit;  // the instance extraction ran on
  RankTable unit_rt;
  extraction ex;
};

built_parts run_extraction(const Instance& inst) {
  if (auto e = inst.validate()) throw std::invalid_argument(*e);
  built_parts bp;
  bp.cloned = !all_unit(inst);
  if (bp.cloned) {
    bp.cl = clone_to_unit_capacity(inst);
    bp.unit = bp.cl.unit;
  } else {
    bp.unit = inst;
  }
  bp.unit_rt = RankTable::build(bp.unit);
  bp.ex = extract(bp.unit, bp.unit_rt, true);
  auto down = extract(bp.unit, bp.unit_rt, false);
  if (key_set(bp.ex.rotations) != key_set(down.rotations))
    throw std::logic_error("rotation set depends on elimination order");
  return bp;
}

std::vector<Rotation> project_all(const built_parts& bp) {
  if (!bp.cloned) return bp.ex.rotations;
  std::vector<Rotation> out;
  for (auto& r : bp.ex.rotations) {
    auto p = project_rotation(bp.cl, r);
    if (p.plus.empty())
      throw std::logic_error("clone rotation projects to nothing");
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

std::vector<Rotation> exposed_rotations(const Instance& inst, const Matching& m) {
  auto rep = is_stable(inst, m);
  if (!rep) throw std::invalid_argument("matching is not stable: " + rep.detail);
  auto rt = RankTable::build(inst);
  if (all_unit(inst)) return exposed_unit(inst, rt, m);
  auto cl = clone_to_unit_capacity(inst);
  auto crt = RankTable::build(cl.unit);
  auto lifted = lift_to_clone(inst, rt, cl, m);
  std::vector<Rotation> out;
  for (auto& r : exposed_unit(cl.unit, crt, lifted)) {
    auto p = project_rotation(cl, r);
    if (p.plus.empty())
      throw std::logic_error("clone rotation projects to nothing");
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const Rotation& x, const Rotation& y) { return x.plus[0] < y.plus[0]; });
  return out;
}

Matching eliminate(const Instance& inst, const Matching& m, const Rotation& rho) {
  bool found = false;
  for (auto& r : exposed_rotations(inst, m))
    if (r.plus == rho.plus && r.minus == rho.minus) found = true;
  if (!found) throw std::invalid_argument("rotation is not exposed in the matching");
  Matching out = m;
  for (auto& [a, b] : rho.minus) out.assign[a] = b;
  return out;
}

std::vector<Rotation> all_rotations(const Instance& inst) {
  auto bp = run_extraction(inst);
  return project_all(bp);
}

RotationOrder rotation_order(const Instance& inst, OrderAlgo algo) {
  return build_rotation_system(inst, algo).order;
}

UpSet upset_of(const Instance& inst, const RotationOrder& order, const Matching& m) {
  auto rep = is_stable(inst, m);
  if (!rep) throw std::invalid_argument("matching is not stable: " + rep.detail);
  std::map<std::vector<std::pair<int, int>>, int> id_of;
  for (auto& r : order.rotations) id_of.emplace(r.plus, r.id);
  Matching cur = deferred_acceptance(inst, Side::students);
  UpSet out;
  for (;;) {
    bool moved = false;
    for (auto& rho : exposed_rotations(inst, cur)) {
      // a rotation still holding one of its departing pairs in m stays out
      bool in_target = true;
      for (auto& [a, b] : rho.plus)
        if (m.assign[a] == b) in_target = false;
      if (!in_target) continue;
      out.members.push_back(id_of.at(rho.plus));
      for (auto& [a, b] : rho.minus) cur.assign[a] = b;
      moved = true;
      break;
    }
    if (!moved) break;
  }
  if (!(cur == m)) throw std::logic_error("matching unreachable by elimination");
  std::sort(out.members.begin(), out.members.end());
  return out;
}

Matching matching_of(const Instance& inst, const RotationOrder& order, const UpSet& r) {
  for (int j : r.members) {
    if (j < 0 || j >= order.size()) throw std::invalid_argument("unknown rotation id");
    for (int i = 0; i < order.size(); ++i)
      if (order.leq[i][j] && !r.contains(i))
        throw std::invalid_argument("rotation set is not upper-closed");
  }
  std::map<std::vector<std::pair<int, int>>, int> id_of;
  for (auto& rot : order.rotations) id_of.emplace(rot.plus, rot.id);
  Matching cur = deferred_acceptance(inst, Side::students);
  size_t done = 0;
  while (done < r.members.size()) {
    bool moved = false;
    for (auto& rho : exposed_rotations(inst, cur)) {
      if (!r.contains(id_of.at(rho.plus))) continue;
      for (auto& [a, b] : rho.minus) cur.assign[a] = b;
      ++done;
      moved = true;
      break;
    }
    if (!moved) throw std::logic_error("upper-closed set not realizable");
  }
  return cur;
}

std::vector<UpSet> enumerate_upsets(const RotationOrder& order, long long limit) {
  int r = order.size();
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> frontier{{}};
  seen.insert({});
  std::vector<UpSet> out{UpSet{}};
  while (!frontier.empty()) {
    std::vector<std::vector<int>> next_frontier;
    for (auto& s : frontier) {
      for (int j = 0; j < r; ++j) {
        if (std::binary_search(s.begin(), s.end(), j)) continue;
        bool ok = true;
        for (int i = 0; i < r && ok; ++i)
          if (order.before(i, j) && !std::binary_search(s.begin(), s.end(), i)) ok = false;
        if (!ok) continue;
        auto grown = s;
        grown.insert(std::lower_bound(grown.begin(), grown.end(), j), j);
        if (!seen.insert(grown).second) continue;
        if ((long long)seen.size() > limit)
          throw std::runtime_error("upper-closed set count exceeds the limit");
        out.push_back(UpSet{grown});
        next_frontier.push_back(std::move(grown));
      }
    }
    frontier = std::move(next_frontier);
  }
  std::sort(out.begin(), out.end(), [](const UpSet& x, const UpSet& y) {
    if (x.members.size() != y.members.size()) return x.members.size() < y.members.size();
    return x.members < y.members;
  });
  return out;
}

Matching RotationSystem::realize(const UpSet& r) const {
  std::vector<char> in(order.size(), 0);
  for (int id : r.members) in[id] = 1;
  Matching out = m0;
  for (int a = 0; a < inst.n_students(); ++a) {
    int last = -1;
    for (int id : student_chain[a]) {
      if (!in[id]) break;
      last = id;
    }
    if (last < 0) continue;
    for (auto& [sa, sb] : order.rotations[last].minus)
      if (sa == a) out.assign[a] = sb;
  }
  return out;
}

UpSet RotationSystem::upset(const Matching& m) const {
  std::set<int> members;
  for (int a = 0; a < inst.n_students(); ++a) {
    if (m.assign[a] == m0.assign[a]) continue;
    int end = -1;
    for (int k = 0; k < (int)student_chain[a].size(); ++k) {
      auto& rot = order.rotations[student_chain[a][k]];
      for (auto& [sa, sb] : rot.minus)
        if (sa == a && sb == m.assign[a]) end = k;
    }
    if (end < 0) throw std::invalid_argument("matching is not stable");
    for (int k = 0; k <= end; ++k) members.insert(student_chain[a][k]);
  }
  return UpSet{std::vector<int>(members.begin(), members.end())};
}

RotationSystem build_rotation_system(const Instance& inst, OrderAlgo algo) {
  auto bp = run_extraction(inst);
  RotationSystem sys;
  sys.inst = inst;
  sys.rt = RankTable::build(inst);
  sys.m0 = deferred_acceptance(inst, Side::students);
  sys.mz = deferred_acceptance(inst, Side::schools);
  sys.order.rotations = project_all(bp);
  if (algo == OrderAlgo::automatic)
    algo = sys.order.size() <= 40 ? OrderAlgo::greedy : OrderAlgo::clone_digraph;
  sys.order.leq = algo == OrderAlgo::greedy
                      ? order_greedy(bp.unit, bp.unit_rt, bp.ex)
                      : order_from_chains(bp.ex);
  sys.order.covers = hasse_covers(sys.order.leq);
  sys.student_chain.resize(inst.n_students());
  for (int id : bp.ex.elim_seq)
    for (int a : sys.order.rotations[id].students()) sys.student_chain[a].push_back(id);
  return sys;
}

}  // namespace stablecut
