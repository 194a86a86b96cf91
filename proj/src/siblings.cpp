#include "stablecut/siblings.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

namespace stablecut {

namespace {

// minimum-id linear extension of the elimination order
std::vector<int> chain_order(const RotationOrder& order) {
  int n = order.size();
  std::vector<int> indeg(n, 0);
  for (int i = 0; i < n; ++i)
    for (int j : order.covers[i]) ++indeg[j];
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(i);
  std::vector<int> out;
  out.reserve(n);
  while (!ready.empty()) {
    int i = ready.top();
    ready.pop();
    out.push_back(i);
    for (int j : order.covers[i])
      if (--indeg[j] == 0) ready.push(j);
  }
  if ((int)out.size() != n) throw std::logic_error("rotation order contains a cycle");
  return out;
}

void check_pair(const Instance& inst, int a, int abar) {
  if (a < 0 || a >= inst.n_students() || abar < 0 || abar >= inst.n_students())
    throw std::invalid_argument("sibling index out of range");
  if (a == abar) throw std::invalid_argument("sibling pair members must differ");
}

void check_acts(const Instance& inst, const ActivityStructure& acts) {
  if ((int)acts.group_of.size() != inst.n_schools() ||
      (int)acts.eligible.size() != inst.n_students())
    throw std::invalid_argument("activity structure does not match the market");
}

// school -> (rotation switching co-location on, rotation switching it off);
// each school's interval is contiguous along every maximal chain and bounded
// by the same two rotations, so one scan recovers all of them
std::map<int, std::pair<int, int>> colocation_events(const RotationOrder& order,
                                                     const Matching& m0,
                                                     const std::vector<int>& chain,
                                                     int a, int abar) {
  std::vector<int> assign = m0.assign;
  auto shared = [&]() {
    return assign[a] != OUTSIDE && assign[a] == assign[abar] ? assign[a] : -1;
  };
  if (shared() != -1)
    throw std::invalid_argument("student-optimal matching already co-locates the pair");
  std::map<int, std::pair<int, int>> events;
  int cur = -1;
  for (int id : chain) {
    for (const auto& [x, b] : order.rotations[id].minus) assign[x] = b;
    int nxt = shared();
    if (nxt == cur) continue;
    if (cur != -1) events[cur].second = id;
    if (nxt != -1 && !events.emplace(nxt, std::pair<int, int>{id, -1}).second)
      throw std::logic_error("co-location interval visited twice");
    cur = nxt;
  }
  if (cur != -1)
    throw std::invalid_argument("student-pessimal matching already co-locates the pair");
  return events;
}

std::pair<std::string, std::string> fresh_dummy_ids(const Instance& inst, int& tag) {
  for (;; ++tag) {
    std::string ds = "_d" + std::to_string(tag);
    std::string ss = "_s" + std::to_string(tag);
    if (inst.student_index(ds) == -1 && inst.school_index(ss) == -1) {
      ++tag;
      return {ds, ss};
    }
  }
}

// pries a off b at the student-optimal end: a now prefers the new school to
// b, the dummy wants b first, and b slots the dummy right below its intake
MsssNormalization::Step split_at_top(Instance& inst, int a, int b, const Matching& m0,
                                     int& tag) {
  auto [did, sid] = fresh_dummy_ids(inst, tag);
  int nd = inst.n_students(), ns = inst.n_schools();
  const auto& pb = inst.school_pref[b];
  int a_worst = -1, worst_pos = -1;
  for (int x = 0; x < nd; ++x) {
    if (m0.assign[x] != b) continue;
    int pos = (int)(std::find(pb.begin(), pb.end(), x) - pb.begin());
    if (pos > worst_pos) {
      worst_pos = pos;
      a_worst = x;
    }
  }
  inst.student_ids.push_back(did);
  inst.school_ids.push_back(sid);
  inst.quota.push_back(1);
  for (int x = 0; x < nd; ++x) {
    auto& px = inst.student_pref[x];
    if (x == a)
      px.insert(std::find(px.begin(), px.end(), b), ns);
    else
      px.push_back(ns);
  }
  std::vector<int> pd = {b, ns, OUTSIDE};
  for (int y = 0; y < ns; ++y)
    if (y != b) pd.push_back(y);
  inst.student_pref.push_back(std::move(pd));
  for (int y = 0; y < ns; ++y) {
    auto& py = inst.school_pref[y];
    if (y == b)
      py.insert(std::next(std::find(py.begin(), py.end(), a_worst)), nd);
    else
      py.push_back(nd);
  }
  std::vector<int> ps = {nd, a, OUTSIDE};
  for (int x = 0; x < nd; ++x)
    if (x != a) ps.push_back(x);
  inst.school_pref.push_back(std::move(ps));
  return {nd, ns, a, b};
}

// mirror construction at the student-pessimal end, applied to the sibling
// the school ranks lower. every roster mate ranked below that sibling must
// leave with it, one dummy pair each, or the exiled sibling blocks through
// a worse mate left behind; the dummies enter b's list as a block right
// above the exiled sibling, best displaced student first
void split_at_bottom(Instance& inst, int a, int abar, int b, const Matching& mz,
                     std::vector<MsssNormalization::Step>& steps, int& tag) {
  std::vector<int> rank(inst.n_students());
  {
    const auto& pb = inst.school_pref[b];
    for (int y = 0; y < inst.n_students(); ++y)
      rank[y] = (int)(std::find(pb.begin(), pb.end(), y) - pb.begin());
  }
  int x = rank[a] > rank[abar] ? a : abar;
  std::vector<int> displaced;
  for (int y = 0; y < inst.n_students(); ++y)
    if (mz.assign[y] == b && rank[y] >= rank[x]) displaced.push_back(y);
  std::sort(displaced.begin(), displaced.end(),
            [&](int u, int v) { return rank[u] < rank[v]; });
  for (int y : displaced) {
    auto [did, sid] = fresh_dummy_ids(inst, tag);
    int nd = inst.n_students(), ns = inst.n_schools();
    inst.student_ids.push_back(did);
    inst.school_ids.push_back(sid);
    inst.quota.push_back(1);
    for (int u = 0; u < nd; ++u) {
      auto& pu = inst.student_pref[u];
      if (u == y)
        pu.insert(std::next(std::find(pu.begin(), pu.end(), b)), ns);
      else
        pu.push_back(ns);
    }
    std::vector<int> pd = {ns, b, OUTSIDE};
    for (int v = 0; v < ns; ++v)
      if (v != b) pd.push_back(v);
    inst.student_pref.push_back(std::move(pd));
    for (int v = 0; v < ns; ++v) {
      auto& pv = inst.school_pref[v];
      if (v == b)
        pv.insert(std::find(pv.begin(), pv.end(), x), nd);
      else
        pv.push_back(nd);
    }
    std::vector<int> ps = {y, nd, OUTSIDE};
    for (int u = 0; u < nd; ++u)
      if (u != y) ps.push_back(u);
    inst.school_pref.push_back(std::move(ps));
    steps.push_back({nd, ns, y, b});
  }
}

// first activity position the student reaches at or past l, as an
// implied-rotation endpoint
struct activity_walk {
  int start = -1;            // position at the student-optimal matching
  std::map<int, int> entry;  // position -> rotation first reaching it
};

activity_walk walk_positions(const RotationOrder& order, const std::vector<int>& chain,
                             const Matching& m0, const ActivityStructure& acts,
                             const std::map<int, int>& pos_of, int student) {
  activity_walk w;
  if (m0.assign[student] == OUTSIDE) return w;  // never matched, never moves
  w.start = pos_of.at(acts.group_of[m0.assign[student]]);
  int prev = w.start;
  for (int id : chain) {
    for (const auto& [x, b] : order.rotations[id].minus) {
      if (x != student) continue;
      int pos = pos_of.at(acts.group_of[b]);
      if (pos == prev) continue;  // capacity shuffle within one activity
      if (pos < prev) throw std::logic_error("activity positions regressed along the chain");
      w.entry.emplace(pos, id);
      prev = pos;
    }
  }
  return w;
}

int entry_at_or_after(const activity_walk& w, int l) {
  auto it = w.entry.lower_bound(l);
  return it == w.entry.end() ? IRP_INFTY : it->second;
}

std::set<int> stable_positions(const activity_walk& w) {
  std::set<int> out;
  if (w.start == -1) return out;
  out.insert(w.start);
  for (const auto& [l, id] : w.entry) out.insert(l);
  return out;
}

}  // namespace

std::optional<std::string> SiblingInstance::validate() const {
  if (auto err = base.validate()) return err;
  std::vector<char> used(base.n_students(), 0);
  for (size_t i = 0; i < pairs.size(); ++i) {
    auto [a, abar] = pairs[i];
    if (a < 0 || a >= base.n_students() || abar < 0 || abar >= base.n_students())
      return "pair " + std::to_string(i) + " references a student out of range";
    if (a == abar) return "pair " + std::to_string(i) + " repeats one student";
    if (used[a] || used[abar]) return "pair " + std::to_string(i) + " reuses a paired student";
    used[a] = used[abar] = 1;
  }
  return std::nullopt;
}

ActivityStructure ActivityStructure::of(const Instance& inst, std::vector<std::string> names,
                                        std::vector<std::vector<int>> classes,
                                        const std::vector<std::pair<int, int>>& same_order_pairs) {
  if (names.size() != classes.size())
    throw std::invalid_argument("one name per activity required");
  ActivityStructure acts;
  acts.names = std::move(names);
  acts.classes = std::move(classes);
  acts.group_of.assign(inst.n_schools(), -1);
  for (int g = 0; g < acts.size(); ++g) {
    if (acts.classes[g].empty())
      throw std::invalid_argument("activity " + acts.names[g] + " offers no class");
    for (int b : acts.classes[g]) {
      if (b < 0 || b >= inst.n_schools())
        throw std::invalid_argument("activity " + acts.names[g] + " lists an unknown school");
      if (acts.group_of[b] != -1)
        throw std::invalid_argument("school " + inst.school_ids[b] + " appears in two activities");
      acts.group_of[b] = g;
    }
  }
  for (int b = 0; b < inst.n_schools(); ++b)
    if (acts.group_of[b] == -1)
      throw std::invalid_argument("school " + inst.school_ids[b] + " belongs to no activity");
  acts.eligible.assign(inst.n_students(), std::vector<int>(acts.size(), -1));
  for (int x = 0; x < inst.n_students(); ++x) {
    for (int b : inst.student_pref[x]) {
      if (b == OUTSIDE) break;
      int g = acts.group_of[b];
      if (acts.eligible[x][g] != -1)
        throw std::invalid_argument("student " + inst.student_ids[x] +
                                    " ranks two classes of one activity");
      acts.eligible[x][g] = b;
    }
  }
  for (auto [a, abar] : same_order_pairs) {
    check_pair(inst, a, abar);
    if (!acts.orders_agree(inst, a, abar))
      throw std::invalid_argument("siblings " + inst.student_ids[a] + " and " +
                                  inst.student_ids[abar] + " rank activities differently");
  }
  return acts;
}

std::vector<int> ActivityStructure::ranked_activities(const Instance& inst, int student) const {
  std::vector<int> out;
  for (int b : inst.student_pref[student]) {
    if (b == OUTSIDE) break;
    out.push_back(group_of[b]);
  }
  return out;
}

bool ActivityStructure::orders_agree(const Instance& inst, int a, int abar) const {
  return ranked_activities(inst, a) == ranked_activities(inst, abar);
}

Matching MsssNormalization::lift(const Matching& m) const {
  Matching out = m;
  for (const auto& st : steps) {
    if ((int)out.assign.size() != st.dummy_student)
      throw std::invalid_argument("matching size does not fit the normalization");
    out.assign.push_back(st.dummy_school);
  }
  return out;
}

Matching MsssNormalization::restrict(const Matching& m) const {
  Matching out = m;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    if ((int)out.assign.size() != it->dummy_student + 1)
      throw std::invalid_argument("matching size does not fit the normalization");
    int got = out.assign[it->dummy_student];
    if (got == it->anchor_school) {
      // the dummy displaced the moved student onto the dummy school
      if (out.assign[it->moved_student] != it->dummy_school)
        throw std::invalid_argument("matching is not stable in the normalized market");
      out.assign[it->moved_student] = it->anchor_school;
    } else if (got != it->dummy_school) {
      throw std::invalid_argument("matching is not stable in the normalized market");
    }
    out.assign.pop_back();
  }
  return out;
}

MsssNormalization normalize_msss(const SiblingInstance& si) {
  if (auto err = si.validate()) throw std::invalid_argument(*err);
  MsssNormalization out;
  out.normalized = si;
  int tag = 0;
  // each sweep either fixes at least one lattice end or is the last; fixed
  // ends never regress, so the sweep count is bounded
  int budget = 2 * (int)si.pairs.size() + 1;
  for (bool changed = true; changed;) {
    changed = false;
    if (--budget < 0) throw std::logic_error("normalization failed to converge");
    for (auto [a, abar] : out.normalized.pairs) {
      Instance& inst = out.normalized.base;
      Matching m0 = deferred_acceptance(inst, Side::students);
      if (m0.assign[a] != OUTSIDE && m0.assign[a] == m0.assign[abar]) {
        out.steps.push_back(split_at_top(inst, a, m0.assign[a], m0, tag));
        changed = true;
      }
      Matching mz = deferred_acceptance(inst, Side::schools);
      if (mz.assign[abar] != OUTSIDE && mz.assign[abar] == mz.assign[a]) {
        split_at_bottom(inst, a, abar, mz.assign[abar], mz, out.steps, tag);
        changed = true;
      }
    }
  }
  if (auto err = out.normalized.base.validate())
    throw std::logic_error("normalization produced an invalid market: " + *err);
  return out;
}

std::optional<std::pair<int, int>> rho_in_out(const Instance& inst, const RotationOrder& order,
                                              int a, int abar, int b) {
  check_pair(inst, a, abar);
  if (b < 0 || b >= inst.n_schools()) throw std::invalid_argument("school out of range");
  Matching m0 = deferred_acceptance(inst, Side::students);
  auto events = colocation_events(order, m0, chain_order(order), a, abar);
  auto it = events.find(b);
  if (it == events.end()) return std::nullopt;
  return it->second;
}

MsssResult solve_msss(const SiblingInstance& si) {
  if (auto err = si.validate()) throw std::invalid_argument(*err);
  Matching home = deferred_acceptance(si.base, Side::students);
  bool all_home = true;
  for (auto [a, abar] : si.pairs)
    all_home = all_home && home.assign[a] != OUTSIDE && home.assign[a] == home.assign[abar];
  if (all_home) return {home, 0};

  MsssNormalization norm = normalize_msss(si);
  const Instance& inst = norm.normalized.base;
  RotationSystem sys = build_rotation_system(inst);
  MetaRotationResult meta = meta_rotations(inst, sys.order, SublatticeSpec::all());
  const MetaRotationPartition& part = *meta.partition;
  std::vector<int> chain = chain_order(sys.order);
  int n = sys.order.size();

  std::vector<CutDigraphBundle> bundles;
  for (auto [a, abar] : norm.normalized.pairs) {
    auto events = colocation_events(sys.order, sys.m0, chain, a, abar);
    std::set<int> rin, rout;
    for (const auto& [b, io] : events) {
      rin.insert(io.first);
      rout.insert(io.second);
    }
    // separation drops by one when co-location turns on, rises when it turns
    // off; a rotation doing both in one step cancels out
    std::vector<Rat> d1(n, Rat(0));
    for (int r : rout)
      if (!rin.count(r)) d1[r] = 1;
    for (int r : rin)
      if (!rout.count(r)) d1[r] = -1;
    ObjectiveSpec tables = ObjectiveSpec::tables(
        std::move(d1), std::vector<std::vector<Rat>>(n, std::vector<Rat>(n, Rat(0))), Rat(1));
    bundles.push_back(build_cut_digraph(inst, sys.order, part, tables));
  }
  MinimizeResult res = minimize_bundle(
      inst, sys.order, part, conic_combine(bundles, std::vector<Rat>(bundles.size(), Rat(1))));
  // the backward map may re-seat a displaced sibling next to its twin, so
  // count separations on the restored matching rather than the cut value
  Matching out = norm.restrict(res.argmin);
  int separated = 0;
  for (auto [a, abar] : si.pairs)
    separated += out.assign[a] == OUTSIDE || out.assign[a] != out.assign[abar];
  return {out, separated};
}

CutDigraphBundle irp_digraph(const Instance&, const RotationOrder& order, const IrpSpec& spec) {
  int n = order.size();
  auto is_rot = [n](int v) { return v >= 0 && v < n; };
  for (int v : {spec.theta, spec.theta_bar})
    if (!is_rot(v) && v != IRP_EMPTY && v != IRP_INFTY)
      throw std::invalid_argument("implied-rotation endpoint is neither a rotation nor a sentinel");
  if (!is_rot(spec.theta) && !is_rot(spec.theta_bar))
    throw std::invalid_argument("implied rotation needs at least one rotation endpoint");

  CutDigraphBundle out;
  out.network.n_vertices = n + 2;
  out.theta_of_vertex.assign(n + 2, -1);
  for (int r = 0; r < n; ++r) out.theta_of_vertex[CutDigraphBundle::vertex_of(r)] = r;
  for (int x = 0; x < n; ++x)
    for (int y : order.covers[x])
      out.network.arcs.push_back(
          {CutDigraphBundle::vertex_of(y), CutDigraphBundle::vertex_of(x), Cap::infinite()});

  Cap one = Cap::of(Rat(1));
  if (is_rot(spec.theta) && is_rot(spec.theta_bar)) {
    if (spec.theta != spec.theta_bar) {  // one rotation moving both is vacuous
      out.network.arcs.push_back(
          {CutDigraphBundle::vertex_of(spec.theta), CutDigraphBundle::vertex_of(spec.theta_bar), one});
      out.network.arcs.push_back(
          {CutDigraphBundle::vertex_of(spec.theta_bar), CutDigraphBundle::vertex_of(spec.theta), one});
    }
  } else if (spec.theta == IRP_EMPTY || spec.theta_bar == IRP_EMPTY) {
    int rot = is_rot(spec.theta) ? spec.theta : spec.theta_bar;
    out.network.arcs.push_back({out.network.source, CutDigraphBundle::vertex_of(rot), one});
  } else {
    int rot = is_rot(spec.theta) ? spec.theta : spec.theta_bar;
    out.network.arcs.push_back({CutDigraphBundle::vertex_of(rot), out.network.sink, one});
  }
  return out;
}

std::vector<IrpSpec> mssp_pair_family(const Instance& inst, const RotationOrder& order,
                                      const ActivityStructure& acts, int a, int abar) {
  check_pair(inst, a, abar);
  check_acts(inst, acts);
  if (!acts.orders_agree(inst, a, abar))
    throw std::invalid_argument("siblings rank activities differently");
  std::vector<int> common = acts.ranked_activities(inst, a);
  std::map<int, int> pos_of;
  for (int l = 0; l < (int)common.size(); ++l) pos_of[common[l]] = l;

  Matching m0 = deferred_acceptance(inst, Side::students);
  std::vector<int> chain = chain_order(order);
  activity_walk wa = walk_positions(order, chain, m0, acts, pos_of, a);
  activity_walk wb = walk_positions(order, chain, m0, acts, pos_of, abar);
  std::set<int> la = stable_positions(wa), lb = stable_positions(wb);
  std::vector<int> both;
  std::set_intersection(la.begin(), la.end(), lb.begin(), lb.end(), std::back_inserter(both));
  if ((int)both.size() < 2)
    throw std::invalid_argument("pair shares fewer than two stable activities");

  std::vector<IrpSpec> fam;
  if (wa.start != wb.start) {
    // the trailing member has to climb at least to the leader's first stop
    if (wa.start < wb.start)
      fam.push_back({entry_at_or_after(wa, wb.start), IRP_EMPTY});
    else
      fam.push_back({IRP_EMPTY, entry_at_or_after(wb, wa.start)});
  }
  std::set<int> levels;
  for (const auto& [l, id] : wa.entry) levels.insert(l);
  for (const auto& [l, id] : wb.entry) levels.insert(l);
  for (int l : levels) fam.push_back({entry_at_or_after(wa, l), entry_at_or_after(wb, l)});

  for (const IrpSpec& s : fam)
    if (s.theta < 0 && s.theta_bar < 0)
      throw std::logic_error("implied-rotation family degenerated");
  return fam;
}

std::optional<Matching> solve_mssp(const Instance& inst, const ActivityStructure& acts,
                                   const std::vector<std::pair<int, int>>& pairs) {
  if (auto err = SiblingInstance{inst, pairs}.validate()) throw std::invalid_argument(*err);
  check_acts(inst, acts);
  for (auto [a, abar] : pairs)
    if (!acts.orders_agree(inst, a, abar))
      throw std::invalid_argument("siblings " + inst.student_ids[a] + " and " +
                                  inst.student_ids[abar] + " rank activities differently");

  RotationSystem sys = build_rotation_system(inst);
  MetaRotationResult meta = meta_rotations(inst, sys.order, SublatticeSpec::all());
  const MetaRotationPartition& part = *meta.partition;
  std::vector<int> chain = chain_order(sys.order);

  std::vector<CutDigraphBundle> bundles;
  for (auto [a, abar] : pairs) {
    std::vector<int> common = acts.ranked_activities(inst, a);
    std::map<int, int> pos_of;
    for (int l = 0; l < (int)common.size(); ++l) pos_of[common[l]] = l;
    activity_walk wa = walk_positions(sys.order, chain, sys.m0, acts, pos_of, a);
    activity_walk wb = walk_positions(sys.order, chain, sys.m0, acts, pos_of, abar);
    std::set<int> la = stable_positions(wa), lb = stable_positions(wb);
    std::vector<int> both;
    std::set_intersection(la.begin(), la.end(), lb.begin(), lb.end(), std::back_inserter(both));
    if (both.empty()) return std::nullopt;  // no activity hosts them in any stable matching
    if (both.size() == 1) {
      // only one shared stop: charge any placement away from it
      std::map<std::pair<int, int>, Rat> w;
      for (int l = 0; l < (int)common.size(); ++l) {
        if (l == both[0]) continue;
        w[{a, acts.eligible[a][common[l]]}] = 1;
        w[{abar, acts.eligible[abar][common[l]]}] = 1;
      }
      if (w.empty()) continue;  // single ranked activity, already pinned together
      ObjectiveSpec tables = differentials(inst, sys.order, part, ObjectiveSpec::linear(std::move(w)));
      bundles.push_back(build_cut_digraph(inst, sys.order, part, tables));
      continue;
    }
    for (const IrpSpec& spec : mssp_pair_family(inst, sys.order, acts, a, abar))
      bundles.push_back(irp_digraph(inst, sys.order, spec));
  }
  if (bundles.empty()) return sys.m0;
  MinimizeResult res = minimize_bundle(
      inst, sys.order, part, conic_combine(bundles, std::vector<Rat>(bundles.size(), Rat(1))));
  if (res.value != 0) return std::nullopt;
  return res.argmin;
}

std::optional<Matching> solve_msdp_bruteforce(const Instance& inst, const ActivityStructure& acts,
                                              const std::vector<std::pair<int, int>>& pairs,
                                              long long limit) {
  if (auto err = SiblingInstance{inst, pairs}.validate()) throw std::invalid_argument(*err);
  check_acts(inst, acts);
  RotationOrder order = rotation_order(inst);
  std::vector<UpSet> ups;
  try {
    ups = enumerate_upsets(order, limit);
  } catch (const std::runtime_error&) {
    throw std::runtime_error("market exceeds " + std::to_string(limit) +
                             " stable matchings; placing siblings who rank activities in "
                             "different orders is NP-complete, so only capped enumeration "
                             "is available");
  }
  for (const UpSet& r : ups) {
    Matching m = matching_of(inst, order, r);
    bool ok = true;
    for (auto [a, abar] : pairs) {
      if (m.assign[a] == OUTSIDE || m.assign[abar] == OUTSIDE ||
          acts.group_of[m.assign[a]] != acts.group_of[m.assign[abar]]) {
        ok = false;
        break;
      }
    }
    if (ok) return m;
  }
  return std::nullopt;
}

}  // namespace stablecut
