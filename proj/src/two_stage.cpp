#include "stablecut/two_stage.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <set>
#include <stdexcept>
#include <tuple>

namespace stablecut {

namespace {

std::optional<AgentMap> try_agent_map(const Instance& agg, const Instance& sub,
                                      std::string* err) {
  std::map<std::string, int> sidx, bidx;
  for (int i = 0; i < agg.n_students(); ++i) sidx.emplace(agg.student_ids[i], i);
  for (int i = 0; i < agg.n_schools(); ++i) bidx.emplace(agg.school_ids[i], i);
  AgentMap out;
  for (const auto& id : sub.student_ids) {
    auto it = sidx.find(id);
    if (it == sidx.end()) {
      if (err) *err = "student " + id + " is not in the aggregate";
      return std::nullopt;
    }
    out.student_to_agg.push_back(it->second);
  }
  for (const auto& id : sub.school_ids) {
    auto it = bidx.find(id);
    if (it == bidx.end()) {
      if (err) *err = "school " + id + " is not in the aggregate";
      return std::nullopt;
    }
    out.school_to_agg.push_back(it->second);
  }
  return out;
}

// defect of one sub-instance against the aggregate; student rows only, since
// school rows never enter the rank bookkeeping
std::optional<std::string> sub_defect(const Instance& agg, const Instance& sub,
                                      const std::string& label) {
  if (auto e = sub.validate()) return label + ": " + *e;
  std::string err;
  auto am = try_agent_map(agg, sub, &err);
  if (!am) return label + ": " + err;
  std::set<int> present(am->school_to_agg.begin(), am->school_to_agg.end());
  for (int la = 0; la < sub.n_students(); ++la) {
    std::vector<int> local;
    for (int x : sub.student_pref[la]) {
      if (x == OUTSIDE) break;
      local.push_back(am->school_to_agg[x]);
    }
    std::vector<int> expected;
    for (int x : agg.student_pref[am->student_to_agg[la]]) {
      if (x == OUTSIDE) break;
      if (present.count(x)) expected.push_back(x);
    }
    if (local != expected)
      return label + ": student " + sub.student_ids[la] +
             " does not restrict the aggregate order";
  }
  return std::nullopt;
}

std::optional<std::string> cost_key_defect(const Instance& agg, const CostMap& c,
                                           const std::string& label) {
  for (const auto& [key, v] : c) {
    auto [a, b] = key;
    (void)v;
    if (a == OUTSIDE && b == OUTSIDE) return label + ": key pairs the outside option with itself";
    if (a != OUTSIDE && (a < 0 || a >= agg.n_students())) return label + ": student index out of range";
    if (b != OUTSIDE && (b < 0 || b >= agg.n_schools())) return label + ": school index out of range";
  }
  return std::nullopt;
}

Rat pos_part(const Rat& v) { return v > 0 ? v : Rat(0); }

// rank or replacement weight of an aggregate (student, school or OUTSIDE) pair
struct RankOrWeight {
  RankTable rt;
  const CostMap* w = nullptr;

  RankOrWeight(const Instance& agg, const std::optional<CostMap>& weight)
      : rt(RankTable::build(agg)), w(weight ? &*weight : nullptr) {}

  Rat operator()(int a, int b) const {
    if (!w) return Rat(rt.of_student(a, b));
    auto it = w->find({a, b});
    if (it == w->end())
      throw std::invalid_argument("weight table misses a needed pair");
    return it->second;
  }
};

// first-stage partner per aggregate student index; -2 marks students outside I
std::vector<int> first_partner_by_agg(const Instance& agg, const Instance& first,
                                      const AgentMap& fm, const Matching& m_first) {
  if ((int)m_first.assign.size() != first.n_students())
    throw std::invalid_argument("first-stage matching size mismatch");
  std::vector<int> out(agg.n_students(), -2);
  for (int a = 0; a < first.n_students(); ++a) {
    int b = m_first.assign[a];
    out[fm.student_to_agg[a]] = b == OUTSIDE ? OUTSIDE : fm.school_to_agg[b];
  }
  return out;
}

bool zero_tables(const ObjectiveSpec& t) {
  if (t.value_at_top != 0) return false;
  for (const auto& v : t.d1)
    if (v != 0) return false;
  for (const auto& row : t.d2)
    for (const auto& v : row)
      if (v != 0) return false;
  return true;
}

using InstanceKey = std::tuple<std::vector<std::string>, std::vector<std::string>,
                               std::vector<int>, std::vector<std::vector<int>>,
                               std::vector<std::vector<int>>>;

InstanceKey instance_key(const Instance& inst) {
  return {inst.student_ids, inst.school_ids, inst.quota, inst.student_pref, inst.school_pref};
}

using BigFloat = boost::multiprecision::cpp_bin_float_100;

BigFloat to_big(const Rat& r) {
  return BigFloat(boost::multiprecision::numerator(r)) /
         BigFloat(boost::multiprecision::denominator(r));
}

ExpTwoStageResult solve_explicit(const TwoStageInstance& ts, std::vector<Scenario> scenarios) {
  if (auto e = ts.validate()) throw std::invalid_argument(*e);
  Rat psum = 0;
  for (const auto& sc : scenarios) psum += sc.prob;
  if (psum != 1)
    throw std::invalid_argument("scenario probabilities sum to " + rat_to_string(psum) +
                                ", not 1");

  UnionInstance u = disjoint_union(ts, scenarios);
  PsiMap psi = psi_map(u);
  auto mr = meta_rotations(u.inst, u.sys.order, SublatticeSpec::all());
  const MetaRotationPartition& part = *mr.partition;

  // one linear bundle per stage plus one coupling bundle per moving student
  std::vector<CutDigraphBundle> bundles;
  std::vector<Rat> coeffs;
  auto linear_tables = [&](const CostMap& c, int L) {
    CostMap w;
    std::vector<int> agg_student(ts.aggregate.n_students(), -1);
    std::vector<int> agg_school(ts.aggregate.n_schools(), -1);
    for (int ua : u.student_of[L]) agg_student[u.student_agg[ua]] = ua;
    for (int ub : u.school_of[L]) agg_school[u.school_agg[ub]] = ub;
    for (const auto& [key, v] : c) {
      auto [a, b] = key;
      if (a == OUTSIDE || agg_student[a] < 0) continue;  // billed as a constant below
      if (b == OUTSIDE)
        w[{agg_student[a], OUTSIDE}] = v;
      else if (agg_school[b] >= 0)
        w[{agg_student[a], agg_school[b]}] = v;
    }
    ObjectiveSpec t =
        differentials(u.inst, u.sys.order, part, ObjectiveSpec::linear(std::move(w)));
    // rural hospitals keeps the unmatched agents fixed, so the charges the
    // linear weights cannot carry are the same for every stable matching
    const Instance& src = L == 0 ? ts.first : scenarios[L - 1].inst;
    Matching top = project(u, u.sys.m0, L);
    Rat full = cost_value(ts.aggregate, src, c, top);
    Rat carried = 0;
    for (int la = 0; la < src.n_students(); ++la) {
      int b = top.assign[la];
      auto it = c.find({u.student_agg[u.student_of[L][la]],
                        b == OUTSIDE ? OUTSIDE : u.school_agg[u.school_of[L][b]]});
      if (it != c.end()) carried += it->second;
    }
    t.value_at_top += full - carried;
    return t;
  };

  bundles.push_back(build_cut_digraph(u.inst, u.sys.order, part, linear_tables(ts.c1, 0)));
  coeffs.push_back(1);
  for (int k = 0; k < (int)scenarios.size(); ++k) {
    bundles.push_back(build_cut_digraph(u.inst, u.sys.order, part, linear_tables(ts.c2, k + 1)));
    coeffs.push_back(scenarios[k].prob);
    if (ts.lambda == 0) continue;
    for (int a = 0; a < ts.aggregate.n_students(); ++a) {
      ObjectiveSpec t3 = f3_tables(u, psi, ts, a, k + 1);
      if (zero_tables(t3)) continue;
      bundles.push_back(build_cut_digraph(u.inst, u.sys.order, part, t3));
      coeffs.push_back(ts.lambda * scenarios[k].prob);
    }
  }

  CutDigraphBundle combined = conic_combine(bundles, coeffs);
  MinimizeResult res = minimize_bundle(u.inst, u.sys.order, part, combined);

  ExpTwoStageResult out;
  out.first_stage = project(u, res.argmin, 0);
  for (int k = 0; k < (int)scenarios.size(); ++k)
    out.second_stage.push_back(project(u, res.argmin, k + 1));
  out.value = cost_value(ts.aggregate, ts.first, ts.c1, out.first_stage);
  for (int k = 0; k < (int)scenarios.size(); ++k) {
    out.value += scenarios[k].prob *
                 (cost_value(ts.aggregate, scenarios[k].inst, ts.c2, out.second_stage[k]) +
                  dissatisfaction(ts, out.first_stage, out.second_stage[k], scenarios[k].inst));
  }
  out.scenarios = std::move(scenarios);
  out.mincut = std::move(res);
  return out;
}

// deduplicated scenario list with empirical probabilities
std::vector<Scenario> empirical_scenarios(std::vector<Instance> draws, long long total,
                                          const std::string& prefix) {
  std::vector<Scenario> out;
  std::map<InstanceKey, int> index_of;
  for (auto& s : draws) {
    Rat share(Int(1), Int(total));
    auto key = instance_key(s);
    auto it = index_of.find(key);
    if (it == index_of.end()) {
      index_of.emplace(std::move(key), (int)out.size());
      out.push_back({prefix + std::to_string(out.size()), std::move(s), share});
    } else {
      out[it->second].prob += share;
    }
  }
  return out;
}

}  // namespace

AgentMap AgentMap::of(const Instance& agg, const Instance& sub) {
  std::string err;
  auto out = try_agent_map(agg, sub, &err);
  if (!out) throw std::invalid_argument(err);
  return *out;
}

std::optional<std::string> TwoStageInstance::validate() const {
  if (auto e = aggregate.validate()) return "aggregate: " + *e;
  if (auto e = sub_defect(aggregate, first, "first stage")) return e;
  Rat psum = 0;
  for (size_t k = 0; k < scenarios.size(); ++k) {
    const Scenario& sc = scenarios[k];
    std::string label =
        "scenario " + (sc.name.empty() ? std::to_string(k) : sc.name);
    if (auto e = sub_defect(aggregate, sc.inst, label)) return e;
    if (sc.prob < 0 || sc.prob > 1) return label + ": probability out of range";
    psum += sc.prob;
  }
  if (!scenarios.empty() && psum != 1)
    return "scenario probabilities sum to " + rat_to_string(psum) + ", not 1";
  if (lambda < 0) return "lambda must be non-negative";
  if (auto e = cost_key_defect(aggregate, c1, "c1")) return e;
  if (auto e = cost_key_defect(aggregate, c2, "c2")) return e;
  if (weight) {
    for (const auto& [key, v] : *weight) {
      auto [a, b] = key;
      (void)v;
      if (a < 0 || a >= aggregate.n_students()) return "weight: student index out of range";
      if (b != OUTSIDE && (b < 0 || b >= aggregate.n_schools()))
        return "weight: school index out of range";
    }
    // weights may not improve down a list, otherwise drops can go negative
    for (int a = 0; a < aggregate.n_students(); ++a) {
      std::optional<Rat> prev, at_outside;
      for (int x : aggregate.student_pref[a]) {
        auto it = weight->find({a, x});
        if (!at_outside) {
          if (it == weight->end())
            return "weight: no entry for " + aggregate.student_ids[a] + " and " +
                   (x == OUTSIDE ? std::string("the outside option") : aggregate.school_ids[x]);
          if (prev && it->second < *prev)
            return "weight: " + aggregate.student_ids[a] + " has a decreasing entry";
          prev = it->second;
          if (x == OUTSIDE) at_outside = it->second;
        } else if (it != weight->end() && it->second < *at_outside) {
          return "weight: " + aggregate.student_ids[a] +
                 " values an unacceptable school above the outside option";
        }
      }
    }
  }
  return std::nullopt;
}

Rat cost_value(const Instance& agg, const Instance& sub, const CostMap& c, const Matching& m) {
  if ((int)m.assign.size() != sub.n_students())
    throw std::invalid_argument("matching size mismatch");
  AgentMap am = AgentMap::of(agg, sub);
  Rat total = 0;
  std::vector<char> filled(sub.n_schools(), 0);
  for (int a = 0; a < sub.n_students(); ++a) {
    int b = m.assign[a];
    if (b != OUTSIDE) filled[b] = 1;
    auto it = c.find({am.student_to_agg[a], b == OUTSIDE ? OUTSIDE : am.school_to_agg[b]});
    if (it != c.end()) total += it->second;
  }
  for (int b = 0; b < sub.n_schools(); ++b) {
    if (filled[b]) continue;
    auto it = c.find({OUTSIDE, am.school_to_agg[b]});
    if (it != c.end()) total += it->second;
  }
  return total;
}

UnionInstance disjoint_union(const TwoStageInstance& ts, const std::vector<Scenario>& scenarios) {
  if (auto e = ts.aggregate.validate()) throw std::invalid_argument("aggregate: " + *e);
  if (auto e = sub_defect(ts.aggregate, ts.first, "first stage")) throw std::invalid_argument(*e);
  for (size_t k = 0; k < scenarios.size(); ++k) {
    std::string label =
        "scenario " + (scenarios[k].name.empty() ? std::to_string(k) : scenarios[k].name);
    if (auto e = sub_defect(ts.aggregate, scenarios[k].inst, label))
      throw std::invalid_argument(*e);
  }

  UnionInstance u;
  std::vector<const Instance*> parts{&ts.first};
  for (const auto& sc : scenarios) parts.push_back(&sc.inst);
  int n_parts = (int)parts.size();
  u.student_of.resize(n_parts);
  u.school_of.resize(n_parts);
  for (int L = 0; L < n_parts; ++L) {
    const Instance& p = *parts[L];
    AgentMap am = AgentMap::of(ts.aggregate, p);
    for (int a = 0; a < p.n_students(); ++a) {
      u.student_of[L].push_back((int)u.inst.student_ids.size());
      u.inst.student_ids.push_back(p.student_ids[a] + "~" + std::to_string(L));
      u.student_src.push_back(L);
      u.student_orig.push_back(a);
      u.student_agg.push_back(am.student_to_agg[a]);
    }
    for (int b = 0; b < p.n_schools(); ++b) {
      u.school_of[L].push_back((int)u.inst.school_ids.size());
      u.inst.school_ids.push_back(p.school_ids[b] + "~" + std::to_string(L));
      u.inst.quota.push_back(p.quota[b]);
      u.school_src.push_back(L);
      u.school_orig.push_back(b);
      u.school_agg.push_back(am.school_to_agg[b]);
    }
  }
  int nu_students = u.inst.n_students(), nu_schools = u.inst.n_schools();
  for (int ua = 0; ua < nu_students; ++ua) {
    int L = u.student_src[ua];
    std::vector<int> row;
    for (int x : parts[L]->student_pref[u.student_orig[ua]])
      row.push_back(x == OUTSIDE ? OUTSIDE : u.school_of[L][x]);
    for (int ub = 0; ub < nu_schools; ++ub)
      if (u.school_src[ub] != L) row.push_back(ub);
    u.inst.student_pref.push_back(std::move(row));
  }
  for (int ub = 0; ub < nu_schools; ++ub) {
    int L = u.school_src[ub];
    std::vector<int> row;
    for (int x : parts[L]->school_pref[u.school_orig[ub]])
      row.push_back(x == OUTSIDE ? OUTSIDE : u.student_of[L][x]);
    for (int ua = 0; ua < nu_students; ++ua)
      if (u.student_src[ua] != L) row.push_back(ua);
    u.inst.school_pref.push_back(std::move(row));
  }
  if (auto e = u.inst.validate()) throw std::logic_error("union instance malformed: " + *e);

  // componentwise lattice: each part contributes its own rotations and order
  u.sys.inst = u.inst;
  u.sys.rt = RankTable::build(u.inst);
  u.sys.m0.assign.assign(nu_students, OUTSIDE);
  u.sys.mz.assign.assign(nu_students, OUTSIDE);
  u.sys.student_chain.resize(nu_students);
  std::vector<int> offset(n_parts, 0);
  int total = 0;
  std::vector<RotationSystem> sub;
  for (int L = 0; L < n_parts; ++L) {
    sub.push_back(build_rotation_system(*parts[L]));
    offset[L] = total;
    total += sub[L].order.size();
  }
  for (int L = 0; L < n_parts; ++L) {
    for (int la = 0; la < parts[L]->n_students(); ++la) {
      int ua = u.student_of[L][la];
      int b0 = sub[L].m0.assign[la], bz = sub[L].mz.assign[la];
      u.sys.m0.assign[ua] = b0 == OUTSIDE ? OUTSIDE : u.school_of[L][b0];
      u.sys.mz.assign[ua] = bz == OUTSIDE ? OUTSIDE : u.school_of[L][bz];
      for (int rid : sub[L].student_chain[la])
        u.sys.student_chain[ua].push_back(offset[L] + rid);
    }
    for (const Rotation& rho : sub[L].order.rotations) {
      Rotation lifted;
      lifted.id = offset[L] + rho.id;
      for (auto [a, b] : rho.plus) lifted.plus.push_back({u.student_of[L][a], u.school_of[L][b]});
      for (auto [a, b] : rho.minus)
        lifted.minus.push_back({u.student_of[L][a], u.school_of[L][b]});
      u.sys.order.rotations.push_back(std::move(lifted));
      u.rot_src.push_back(L);
      u.rot_orig.push_back(rho.id);
    }
  }
  u.sys.order.leq.assign(total, std::vector<char>(total, 0));
  u.sys.order.covers.resize(total);
  for (int L = 0; L < n_parts; ++L) {
    int r = sub[L].order.size();
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < r; ++j)
        u.sys.order.leq[offset[L] + i][offset[L] + j] = sub[L].order.leq[i][j];
      for (int j : sub[L].order.covers[i])
        u.sys.order.covers[offset[L] + i].push_back(offset[L] + j);
    }
  }
  return u;
}

Matching project(const UnionInstance& u, const Matching& m, int part) {
  if (part < 0 || part >= u.n_parts()) throw std::invalid_argument("unknown part");
  if ((int)m.assign.size() != u.inst.n_students())
    throw std::invalid_argument("matching size mismatch");
  Matching out;
  out.assign.assign(u.student_of[part].size(), OUTSIDE);
  for (int la = 0; la < (int)u.student_of[part].size(); ++la) {
    int ub = m.assign[u.student_of[part][la]];
    if (ub == OUTSIDE) continue;
    if (u.school_src[ub] != part) throw std::invalid_argument("matching crosses parts");
    out.assign[la] = u.school_orig[ub];
  }
  return out;
}

Matching lift(const UnionInstance& u, const std::vector<Matching>& parts) {
  if ((int)parts.size() != u.n_parts())
    throw std::invalid_argument("one matching per part required");
  Matching out;
  out.assign.assign(u.inst.n_students(), OUTSIDE);
  for (int L = 0; L < u.n_parts(); ++L) {
    if (parts[L].assign.size() != u.student_of[L].size())
      throw std::invalid_argument("matching size mismatch in part " + std::to_string(L));
    for (int la = 0; la < (int)u.student_of[L].size(); ++la) {
      int lb = parts[L].assign[la];
      if (lb != OUTSIDE) out.assign[u.student_of[L][la]] = u.school_of[L][lb];
    }
  }
  return out;
}

PsiMap psi_map(const UnionInstance& u) {
  PsiMap psi;
  int n = u.inst.n_students();
  psi.ladder.resize(n);
  psi.step.resize(u.sys.order.size());
  for (int ua = 0; ua < n; ++ua) {
    psi.ladder[ua].push_back(u.sys.m0.assign[ua]);
    int j = 0;
    for (int rid : u.sys.student_chain[ua]) {
      int next = -2;
      for (auto [a, b] : u.sys.order.rotations[rid].minus)
        if (a == ua) next = b;
      if (next == -2) throw std::logic_error("chain rotation does not move its student");
      psi.ladder[ua].push_back(next);
      psi.step[rid].push_back({ua, ++j});
    }
  }
  return psi;
}

Rat dissatisfaction(const TwoStageInstance& ts, const Matching& m_first,
                    const Matching& m_scen, const Instance& scen) {
  AgentMap fm = AgentMap::of(ts.aggregate, ts.first);
  AgentMap sm = AgentMap::of(ts.aggregate, scen);
  if ((int)m_scen.assign.size() != scen.n_students())
    throw std::invalid_argument("scenario matching size mismatch");
  RankOrWeight rw(ts.aggregate, ts.weight);
  std::vector<int> first_partner = first_partner_by_agg(ts.aggregate, ts.first, fm, m_first);
  Rat total = 0;
  for (int la = 0; la < scen.n_students(); ++la) {
    int a = sm.student_to_agg[la];
    if (first_partner[a] == -2) continue;
    int b = m_scen.assign[la];
    total += pos_part(rw(a, b == OUTSIDE ? OUTSIDE : sm.school_to_agg[b]) -
                      rw(a, first_partner[a]));
  }
  return ts.lambda * total;
}

SecondStageResult second_stage_best(const TwoStageInstance& ts, const Matching& m_first,
                                    const Instance& scen) {
  AgentMap fm = AgentMap::of(ts.aggregate, ts.first);
  AgentMap sm = AgentMap::of(ts.aggregate, scen);
  RankOrWeight rw(ts.aggregate, ts.weight);
  std::vector<int> first_partner = first_partner_by_agg(ts.aggregate, ts.first, fm, m_first);
  CostMap w;
  for (int la = 0; la < scen.n_students(); ++la) {
    int a = sm.student_to_agg[la];
    auto charge = [&](int lb, int agg_b) {
      Rat v = 0;
      auto it = ts.c2.find({a, agg_b});
      if (it != ts.c2.end()) v += it->second;
      if (first_partner[a] != -2)
        v += ts.lambda * pos_part(rw(a, agg_b) - rw(a, first_partner[a]));
      if (v != 0) w[{la, lb}] = v;
    };
    for (int x : scen.student_pref[la]) {
      if (x == OUTSIDE) break;
      charge(x, sm.school_to_agg[x]);
    }
    charge(OUTSIDE, OUTSIDE);
  }
  auto sys = build_rotation_system(scen);
  auto res = minimize(scen, sys.order, SublatticeSpec::all(), ObjectiveSpec::linear(std::move(w)));
  SecondStageResult out;
  out.matching = std::move(res.argmin);
  out.value = cost_value(ts.aggregate, scen, ts.c2, out.matching) +
              dissatisfaction(ts, m_first, out.matching, scen);
  return out;
}

Rat evaluate_first_stage(const TwoStageInstance& ts, const std::vector<Scenario>& scenarios,
                         const Matching& m_first) {
  Rat total = cost_value(ts.aggregate, ts.first, ts.c1, m_first);
  for (const auto& sc : scenarios)
    total += sc.prob * second_stage_best(ts, m_first, sc.inst).value;
  return total;
}

Rat interval_overlap(const Rat& x, const Rat& y, const Rat& z, const Rat& w) {
  return pos_part(z - y) + pos_part(w - x) - pos_part(z - x) - pos_part(w - y);
}

ObjectiveSpec f3_tables(const UnionInstance& u, const PsiMap& psi, const TwoStageInstance& ts,
                        int agg_student, int part) {
  if (part <= 0 || part >= u.n_parts())
    throw std::invalid_argument("part must name a scenario");
  if (agg_student < 0 || agg_student >= ts.aggregate.n_students())
    throw std::invalid_argument("unknown student");
  int n_rot = u.sys.order.size();
  std::vector<Rat> d1(n_rot, Rat(0));
  std::vector<std::vector<Rat>> d2(n_rot, std::vector<Rat>(n_rot, Rat(0)));
  int ua_first = -1, ua_scen = -1;
  for (int ua = 0; ua < u.inst.n_students(); ++ua) {
    if (u.student_agg[ua] != agg_student) continue;
    if (u.student_src[ua] == 0) ua_first = ua;
    if (u.student_src[ua] == part) ua_scen = ua;
  }
  if (ua_first < 0 || ua_scen < 0)
    return ObjectiveSpec::tables(std::move(d1), std::move(d2), Rat(0));

  RankOrWeight rw(ts.aggregate, ts.weight);
  auto value_of = [&](int ub) {
    return rw(agg_student, ub == OUTSIDE ? OUTSIDE : u.school_agg[ub]);
  };
  std::vector<Rat> ri, rj;
  for (int b : psi.ladder[ua_first]) ri.push_back(value_of(b));
  for (int b : psi.ladder[ua_scen]) rj.push_back(value_of(b));
  const auto& chain_i = u.sys.student_chain[ua_first];
  const auto& chain_j = u.sys.student_chain[ua_scen];
  for (size_t s = 0; s < chain_i.size(); ++s)
    d1[chain_i[s]] = pos_part(rj[0] - ri[s + 1]) - pos_part(rj[0] - ri[s]);
  for (size_t t = 0; t < chain_j.size(); ++t)
    d1[chain_j[t]] = pos_part(rj[t + 1] - ri[0]) - pos_part(rj[t] - ri[0]);
  for (size_t s = 0; s < chain_i.size(); ++s)
    for (size_t t = 0; t < chain_j.size(); ++t) {
      Rat v = interval_overlap(ri[s], ri[s + 1], rj[t], rj[t + 1]);
      d2[chain_i[s]][chain_j[t]] = v;
      d2[chain_j[t]][chain_i[s]] = v;
    }
  return ObjectiveSpec::tables(std::move(d1), std::move(d2), pos_part(rj[0] - ri[0]));
}

ExpTwoStageResult solve_exp_2sto(const TwoStageInstance& ts) {
  return solve_explicit(ts, ts.scenarios);
}

Int sample_count(const TwoStageInstance& ts, const Rat& epsilon, const Rat& alpha) {
  if (epsilon <= 0) throw std::invalid_argument("epsilon must be positive");
  if (alpha <= 0 || alpha >= 1) throw std::invalid_argument("alpha must lie in (0,1)");
  if (auto e = ts.validate()) throw std::invalid_argument(*e);
  Rat max_c2 = 0;
  for (const auto& [key, v] : ts.c2) {
    (void)key;
    Rat av = v < 0 ? -v : v;
    if (av > max_c2) max_c2 = av;
  }
  Rat base = Rat(4) * ts.aggregate.n_students() * (max_c2 + ts.lambda * ts.aggregate.n_schools());
  BigFloat log_factor =
      BigFloat(std::max(ts.aggregate.n_students(), ts.aggregate.n_schools())) *
          log(BigFloat("3.88")) -
      log(to_big(alpha));
  BigFloat value = to_big(base * base) * log_factor / to_big(epsilon * epsilon);
  Int k = ceil(value).convert_to<Int>();
  return k < 1 ? Int(1) : k;
}

SaaResult solve_saa(const TwoStageInstance& ts, const Rat& epsilon, const Rat& alpha,
                    unsigned seed, std::optional<long long> budget) {
  if (!ts.sampler) throw std::invalid_argument("sampling mode requires a sampler");
  SaaResult out;
  out.k_required = sample_count(ts, epsilon, alpha);
  Int draw = out.k_required;
  if (budget) {
    if (*budget < 1) throw std::invalid_argument("budget must be positive");
    if (draw > *budget) {
      draw = *budget;
      out.guarantee_void = true;
    }
  }
  if (draw > Int(1) << 32)
    throw std::invalid_argument("sample count " + out.k_required.str() + " needs a budget");
  out.k_used = draw.convert_to<long long>();
  std::mt19937 rng(seed);
  std::vector<Instance> draws;
  draws.reserve((size_t)out.k_used);
  for (long long i = 0; i < out.k_used; ++i) draws.push_back(ts.sampler(rng));
  ExpTwoStageResult res =
      solve_explicit(ts, empirical_scenarios(std::move(draws), out.k_used, "sample"));
  out.first_stage = std::move(res.first_stage);
  out.value = std::move(res.value);
  out.sampled = std::move(res.scenarios);
  out.second_stage = std::move(res.second_stage);
  return out;
}

ExpTwoStageResult hindsight_best(const TwoStageInstance& ts,
                                 const std::vector<Instance>& realized) {
  if (realized.empty()) throw std::invalid_argument("at least one realized scenario required");
  return solve_explicit(
      ts, empirical_scenarios(realized, (long long)realized.size(), "realized"));
}

}  // namespace stablecut
