#include "stablecut/framework.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace stablecut {

SublatticeSpec SublatticeSpec::where(const Instance& inst,
                                     const std::function<bool(const Matching&)>& keep,
                                     long long limit) {
  auto order = rotation_order(inst);
  SublatticeSpec out;
  out.mode = Mode::explicit_list;
  for (const auto& u : enumerate_upsets(order, limit)) {
    Matching m = matching_of(inst, order, u);
    if (keep(m)) out.matchings.push_back(std::move(m));
  }
  return out;
}

namespace {

// eliminated-in-F signature per rotation, one bit per family member
std::vector<std::vector<char>> family_signatures(const Instance& inst,
                                                 const RotationOrder& order,
                                                 const std::vector<Matching>& family) {
  std::vector<std::vector<char>> sig(order.size(), std::vector<char>(family.size(), 0));
  for (size_t m = 0; m < family.size(); ++m) {
    for (int id : upset_of(inst, order, family[m]).members) sig[id][m] = 1;
  }
  return sig;
}

std::vector<int> merged_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

MetaRotationResult meta_rotations(const Instance& inst, const RotationOrder& order,
                                  const SublatticeSpec& feasible) {
  MetaRotationPartition part;
  int n = order.size();
  if (feasible.mode == SublatticeSpec::Mode::all) {
    part.proper.resize(n);
    part.rep.resize(n);
    for (int i = 0; i < n; ++i) {
      part.proper[i] = {i};
      part.rep[i] = i;
    }
    part.cleq = order.leq;
    part.covers = order.covers;
    return {std::move(part), std::nullopt};
  }

  if (feasible.matchings.empty())
    throw std::invalid_argument("feasible family must not be empty");
  for (const auto& m : feasible.matchings) {
    if (auto rep = is_stable(inst, m); !rep)
      throw std::invalid_argument("feasible family member is not stable: " + rep.detail);
  }
  std::vector<Matching> family = feasible.matchings;
  std::sort(family.begin(), family.end());
  family.erase(std::unique(family.begin(), family.end()), family.end());

  // join/meet closure, any violation certifies non-representability
  std::set<Matching> lookup(family.begin(), family.end());
  for (size_t i = 0; i < family.size(); ++i) {
    for (size_t j = i + 1; j < family.size(); ++j) {
      Matching join = lattice_op(inst, LatticeOp::join, family[i], family[j]);
      if (!lookup.count(join))
        return {std::nullopt,
                SublatticeCertificate{family[i], family[j], std::move(join), true}};
      Matching meet = lattice_op(inst, LatticeOp::meet, family[i], family[j]);
      if (!lookup.count(meet))
        return {std::nullopt,
                SublatticeCertificate{family[i], family[j], std::move(meet), false}};
    }
  }

  auto sig = family_signatures(inst, order, family);
  auto always = std::vector<char>(family.size(), 1);
  auto never = std::vector<char>(family.size(), 0);
  std::map<std::vector<char>, std::vector<int>> buckets;
  for (int i = 0; i < n; ++i) {
    if (sig[i] == always)
      part.theta0.push_back(i);
    else if (sig[i] == never)
      part.thetaz.push_back(i);
    else
      buckets[sig[i]].push_back(i);
  }
  std::vector<std::vector<char>> class_sig;
  for (auto& [s, ids] : buckets) {
    part.proper.push_back(ids);  // bucket members already ascend
    class_sig.push_back(s);
  }
  // deterministic class ids: ascending lowest rotation id
  std::vector<int> perm(part.proper.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = (int)i;
  std::sort(perm.begin(), perm.end(),
            [&](int x, int y) { return part.proper[x][0] < part.proper[y][0]; });
  std::vector<std::vector<int>> proper;
  std::vector<std::vector<char>> sigs;
  for (int p : perm) {
    proper.push_back(std::move(part.proper[p]));
    sigs.push_back(std::move(class_sig[p]));
  }
  part.proper = std::move(proper);
  for (const auto& cls : part.proper) part.rep.push_back(cls[0]);

  int k = part.n_classes();
  part.cleq.assign(k, std::vector<char>(k, 0));
  for (int x = 0; x < k; ++x) {
    for (int y = 0; y < k; ++y) {
      // x precedes y when every family member eliminating y eliminates x
      bool implied = true;
      for (size_t m = 0; m < family.size() && implied; ++m)
        if (sigs[y][m] && !sigs[x][m]) implied = false;
      part.cleq[x][y] = implied;
    }
  }
  part.covers.assign(k, {});
  for (int x = 0; x < k; ++x) {
    for (int y = 0; y < k; ++y) {
      if (!part.before(x, y)) continue;
      bool direct = true;
      for (int z = 0; z < k && direct; ++z)
        if (part.before(x, z) && part.before(z, y)) direct = false;
      if (direct) part.covers[x].push_back(y);
    }
  }
  return {std::move(part), std::nullopt};
}

UpSet rotation_upset(const MetaRotationPartition& part, const std::vector<int>& classes) {
  UpSet r;
  r.members = part.theta0;
  for (int c : classes) {
    if (c < 0 || c >= part.n_classes()) throw std::invalid_argument("unknown class index");
    r.members = merged_sorted(r.members, part.proper[c]);
  }
  return r;
}

std::vector<int> class_upset(const MetaRotationPartition& part, const UpSet& r) {
  std::set<int> in(r.members.begin(), r.members.end());
  for (int id : part.theta0)
    if (!in.count(id)) throw std::invalid_argument("rotation set misses theta-zero");
  for (int id : part.thetaz)
    if (in.count(id)) throw std::invalid_argument("rotation set touches theta-z");
  std::vector<int> classes;
  size_t seen = part.theta0.size();
  for (int c = 0; c < part.n_classes(); ++c) {
    size_t hits = 0;
    for (int id : part.proper[c]) hits += in.count(id);
    if (hits != 0 && hits != part.proper[c].size())
      throw std::invalid_argument("rotation set splits a meta-rotation");
    if (hits != 0) {
      classes.push_back(c);
      seen += hits;
    }
  }
  if (seen != in.size()) throw std::invalid_argument("rotation set has unknown members");
  return classes;
}

Matching matching_of_classes(const Instance& inst, const RotationOrder& order,
                             const MetaRotationPartition& part,
                             const std::vector<int>& classes) {
  return matching_of(inst, order, rotation_upset(part, classes));
}

ObjectiveSpec ObjectiveSpec::of(std::function<Rat(const Matching&)> f) {
  ObjectiveSpec s;
  s.mode = Mode::oracle;
  s.eval = std::move(f);
  return s;
}

ObjectiveSpec ObjectiveSpec::linear(std::map<std::pair<int, int>, Rat> w) {
  ObjectiveSpec s;
  s.mode = Mode::linear;
  s.weights = std::move(w);
  return s;
}

ObjectiveSpec ObjectiveSpec::tables(std::vector<Rat> first, std::vector<std::vector<Rat>> second,
                                    Rat at_top) {
  ObjectiveSpec s;
  s.mode = Mode::structured;
  s.d1 = std::move(first);
  s.d2 = std::move(second);
  s.value_at_top = std::move(at_top);
  return s;
}

Rat ObjectiveSpec::value(const Matching& m) const {
  if (mode == Mode::oracle) return eval(m);
  if (mode == Mode::linear) {
    Rat total = 0;
    for (int a = 0; a < (int)m.assign.size(); ++a) {
      auto it = weights.find({a, m.assign[a]});
      if (it != weights.end()) total += it->second;
    }
    return total;
  }
  throw std::logic_error("differential tables have no pointwise value");
}

namespace {

void validate_tables(const ObjectiveSpec& t, int k) {
  if ((int)t.d1.size() != k || (int)t.d2.size() != k)
    throw std::invalid_argument("differential table size mismatch");
  for (int i = 0; i < k; ++i) {
    if ((int)t.d2[i].size() != k)
      throw std::invalid_argument("differential table size mismatch");
    if (t.d2[i][i] != 0)
      throw std::invalid_argument("second-order diagonal must be zero");
    for (int j = 0; j < k; ++j)
      if (t.d2[i][j] != t.d2[j][i])
        throw std::invalid_argument("second-order table must be symmetric");
  }
}

}  // namespace

ObjectiveSpec differentials(const Instance& inst, const RotationOrder& order,
                            const MetaRotationPartition& part, const ObjectiveSpec& f) {
  int k = part.n_classes();
  if (f.mode == ObjectiveSpec::Mode::structured) {
    validate_tables(f, k);
    return f;
  }
  ObjectiveSpec out;
  out.mode = ObjectiveSpec::Mode::structured;
  out.d1.assign(k, Rat(0));
  out.d2.assign(k, std::vector<Rat>(k, Rat(0)));
  out.value_at_top = f.value(matching_of_classes(inst, order, part, {}));

  if (f.mode == ObjectiveSpec::Mode::linear) {
    // eliminating a class moves its students from plus to minus pairs
    for (int c = 0; c < k; ++c) {
      for (int id : part.proper[c]) {
        const Rotation& rho = order.rotations[id];
        for (auto [a, b] : rho.minus) {
          auto it = f.weights.find({a, b});
          if (it != f.weights.end()) out.d1[c] += it->second;
        }
        for (auto [a, b] : rho.plus) {
          auto it = f.weights.find({a, b});
          if (it != f.weights.end()) out.d1[c] -= it->second;
        }
      }
    }
    return out;
  }

  // strict predecessor classes, the frame below which c is the next move
  std::vector<std::vector<int>> pred(k);
  for (int c = 0; c < k; ++c)
    for (int p = 0; p < k; ++p)
      if (part.before(p, c)) pred[c].push_back(p);

  std::map<std::vector<int>, Rat> memo;
  auto value_at = [&](std::vector<int> classes) -> Rat {
    auto it = memo.find(classes);
    if (it != memo.end()) return it->second;
    Rat v = f.value(matching_of_classes(inst, order, part, classes));
    memo.emplace(std::move(classes), v);
    return v;
  };
  auto with = [&](const std::vector<int>& base, int extra) {
    return merged_sorted(base, std::vector<int>{extra});
  };

  for (int c = 0; c < k; ++c) out.d1[c] = value_at(with(pred[c], c)) - value_at(pred[c]);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      Rat v = value_at(merged_sorted(with(pred[i], i), pred[j])) +
              value_at(merged_sorted(pred[i], with(pred[j], j))) -
              value_at(merged_sorted(pred[i], pred[j])) -
              value_at(merged_sorted(with(pred[i], i), with(pred[j], j)));
      out.d2[i][j] = v;
      out.d2[j][i] = v;
    }
  }
  return out;
}

Rat expansion_value(const ObjectiveSpec& tables, const std::vector<int>& classes) {
  if (tables.mode != ObjectiveSpec::Mode::structured)
    throw std::logic_error("expansion needs differential tables");
  Rat v = tables.value_at_top;
  for (int c : classes) v += tables.d1[c];
  for (size_t i = 0; i < classes.size(); ++i)
    for (size_t j = i + 1; j < classes.size(); ++j) v -= tables.d2[classes[i]][classes[j]];
  return v;
}

CutDigraphBundle build_cut_digraph(const Instance& inst, const RotationOrder& order,
                                   const MetaRotationPartition& part,
                                   const ObjectiveSpec& tables, std::optional<Rat> gamma) {
  (void)inst;
  if (tables.mode != ObjectiveSpec::Mode::structured)
    throw std::invalid_argument("cut digraph needs differential tables");
  int k = part.n_classes();
  validate_tables(tables, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (tables.d2[i][j] < 0)
        throw std::invalid_argument("negative second-order differential, not representable");

  std::vector<Rat> raw(k);  // sink capacity before the gamma shift
  for (int i = 0; i < k; ++i) {
    Rat row = 0;
    for (int j = 0; j < k; ++j)
      if (j != i) row += tables.d2[i][j];
    raw[i] = tables.d1[i] - row / 2;
  }
  Rat g = 0;
  for (int i = 0; i < k; ++i) g = std::max(g, Rat(-raw[i]));
  if (gamma) {
    if (*gamma < g)
      throw std::invalid_argument("gamma below the feasible minimum " + rat_to_string(g));
    g = *gamma;
  }

  CutDigraphBundle bundle;
  bundle.gamma = g;
  bundle.constant = -tables.value_at_top + g * k;
  auto& net = bundle.network;
  net.n_vertices = 2 + order.size();
  bundle.theta_of_vertex.assign(net.n_vertices, -1);
  for (int id : part.theta0) bundle.theta_of_vertex[CutDigraphBundle::vertex_of(id)] = -2;
  for (int id : part.thetaz) bundle.theta_of_vertex[CutDigraphBundle::vertex_of(id)] = -3;
  for (int c = 0; c < k; ++c)
    for (int id : part.proper[c]) bundle.theta_of_vertex[CutDigraphBundle::vertex_of(id)] = c;

  auto v = [](int id) { return CutDigraphBundle::vertex_of(id); };
  auto inf = [&](int tail, int head) { net.arcs.push_back({tail, head, Cap::infinite()}); };
  auto fin = [&](int tail, int head, const Rat& c) { net.arcs.push_back({tail, head, Cap::of(c)}); };

  // members of one class stay on one cut side
  auto clique = [&](const std::vector<int>& cls) {
    for (size_t p = 0; p < cls.size(); ++p)
      for (size_t q = p + 1; q < cls.size(); ++q) {
        inf(v(cls[p]), v(cls[q]));
        inf(v(cls[q]), v(cls[p]));
      }
  };
  clique(part.theta0);
  clique(part.thetaz);
  for (int c = 0; c < k; ++c) clique(part.proper[c]);

  // class order: eliminating a later class forces every earlier one
  for (int x = 0; x < k; ++x)
    for (int y : part.covers[x]) inf(v(part.rep[y]), v(part.rep[x]));

  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j) fin(v(part.rep[i]), v(part.rep[j]), tables.d2[i][j] / 2);

  if (!part.theta0.empty()) inf(net.source, v(part.theta0.front()));
  if (!part.thetaz.empty()) inf(v(part.thetaz.front()), net.sink);
  for (int i = 0; i < k; ++i) {
    fin(v(part.rep[i]), net.sink, raw[i] + g);
    fin(net.source, v(part.rep[i]), g);
  }
  return bundle;
}

bool is_linearizable(const ObjectiveSpec& tables,
                     std::optional<NegativePairCertificate>* witness) {
  if (tables.mode != ObjectiveSpec::Mode::structured)
    throw std::logic_error("linearizability needs differential tables");
  for (int i = 0; i < (int)tables.d2.size(); ++i) {
    for (int j = i + 1; j < (int)tables.d2[i].size(); ++j) {
      if (tables.d2[i][j] != 0) {
        if (witness) *witness = NegativePairCertificate{i, j, tables.d2[i][j]};
        return false;
      }
    }
  }
  return true;
}

std::string RepresentabilityReport::describe() const {
  std::ostringstream os;
  switch (verdict) {
    case Verdict::representable:
      os << "representable";
      break;
    case Verdict::consistent_with_representable:
      os << "consistent with representable (sampled check)";
      break;
    case Verdict::not_representable:
      os << "not representable";
      break;
  }
  if (sublattice_failure) {
    os << ": feasible family misses the "
       << (sublattice_failure->join ? "join" : "meet") << " of two members";
  } else if (negative_pair) {
    os << ": second-order differential of classes " << negative_pair->theta << " and "
       << negative_pair->theta_prime << " is " << rat_to_string(negative_pair->value);
  } else if (expansion_failure) {
    os << ": expansion predicts " << rat_to_string(expansion_failure->approx_value)
       << " where the objective is " << rat_to_string(expansion_failure->f_value);
  }
  return os.str();
}

namespace {

// feasible family as class upsets, paired with realized matchings
std::vector<std::pair<std::vector<int>, Matching>> feasible_members(
    const Instance& inst, const RotationOrder& order, const SublatticeSpec& feasible,
    const MetaRotationPartition& part, long long cap) {
  std::vector<std::pair<std::vector<int>, Matching>> out;
  if (feasible.mode == SublatticeSpec::Mode::all) {
    for (const auto& u : enumerate_upsets(order, cap))
      out.emplace_back(class_upset(part, u), matching_of(inst, order, u));
  } else {
    std::vector<Matching> family = feasible.matchings;
    std::sort(family.begin(), family.end());
    family.erase(std::unique(family.begin(), family.end()), family.end());
    for (const auto& m : family)
      out.emplace_back(class_upset(part, upset_of(inst, order, m)), m);
  }
  return out;
}

}  // namespace

RepresentabilityReport check_representability(const Instance& inst,
                                              const RotationOrder& order,
                                              const SublatticeSpec& feasible,
                                              const ObjectiveSpec& f, CheckMode mode) {
  RepresentabilityReport report;
  auto mr = meta_rotations(inst, order, feasible);
  if (mr.failure) {
    report.verdict = RepresentabilityReport::Verdict::not_representable;
    report.sublattice_failure = std::move(mr.failure);
    return report;
  }
  const auto& part = *mr.partition;
  report.partition = part;
  ObjectiveSpec tables = differentials(inst, order, part, f);
  report.tables = tables;

  int k = part.n_classes();
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (tables.d2[i][j] < 0) {
        report.verdict = RepresentabilityReport::Verdict::not_representable;
        report.negative_pair = NegativePairCertificate{i, j, tables.d2[i][j]};
        return report;
      }
    }
  }

  bool pointwise = f.mode != ObjectiveSpec::Mode::structured;
  if (mode.exact && pointwise) {
    auto members = feasible_members(inst, order, feasible, part, mode.enumeration_cap);
    Rat best;
    bool have_best = false;
    std::vector<const Matching*> minima;
    for (const auto& [classes, m] : members) {
      Rat fv = f.value(m);
      Rat av = expansion_value(tables, classes);
      if (fv != av) {
        report.verdict = RepresentabilityReport::Verdict::not_representable;
        report.expansion_failure = ExpansionCertificate{m, fv, av};
        return report;
      }
      if (!have_best || fv < best) {
        best = fv;
        have_best = true;
        minima.clear();
      }
      if (fv == best) minima.push_back(&m);
    }
    // minima of a representable objective close under meet and join
    std::set<Matching> min_set;
    for (auto* m : minima) min_set.insert(*m);
    for (size_t i = 0; i < minima.size() && report.minima_closed; ++i) {
      for (size_t j = i + 1; j < minima.size() && report.minima_closed; ++j) {
        if (!min_set.count(lattice_op(inst, LatticeOp::meet, *minima[i], *minima[j])) ||
            !min_set.count(lattice_op(inst, LatticeOp::join, *minima[i], *minima[j])))
          report.minima_closed = false;
      }
    }
    report.verdict = RepresentabilityReport::Verdict::representable;
  } else if (pointwise && mode.samples > 0) {
    std::mt19937 rng(mode.seed);
    auto members = feasible.mode == SublatticeSpec::Mode::explicit_list
                       ? feasible_members(inst, order, feasible, part, mode.enumeration_cap)
                       : std::vector<std::pair<std::vector<int>, Matching>>{};
    for (int s = 0; s < mode.samples; ++s) {
      std::vector<int> classes;
      Matching m;
      if (feasible.mode == SublatticeSpec::Mode::explicit_list) {
        auto& pick = members[rng() % members.size()];
        classes = pick.first;
        m = pick.second;
      } else {
        std::vector<char> in(k, 0);
        for (int c = 0; c < k; ++c) in[c] = rng() % 2;
        // close upward: a class drags every earlier one in
        for (int c = 0; c < k; ++c)
          if (in[c])
            for (int p = 0; p < k; ++p)
              if (part.before(p, c)) in[p] = 1;
        for (int c = 0; c < k; ++c)
          if (in[c]) classes.push_back(c);
        m = matching_of_classes(inst, order, part, classes);
      }
      Rat fv = f.value(m);
      Rat av = expansion_value(tables, classes);
      if (fv != av) {
        report.verdict = RepresentabilityReport::Verdict::not_representable;
        report.expansion_failure = ExpansionCertificate{std::move(m), fv, av};
        return report;
      }
    }
    report.verdict = RepresentabilityReport::Verdict::consistent_with_representable;
  } else {
    // structured input carries its own expansion, nothing left to compare
    report.verdict = RepresentabilityReport::Verdict::representable;
  }
  report.bundle = build_cut_digraph(inst, order, part, tables);
  return report;
}

CutDigraphBundle conic_combine(const std::vector<CutDigraphBundle>& bundles,
                               const std::vector<Rat>& coeffs) {
  if (bundles.empty() || bundles.size() != coeffs.size())
    throw std::invalid_argument("one coefficient per bundle required");
  for (const auto& c : coeffs)
    if (c < 0) throw std::invalid_argument("conic coefficients must be non-negative");
  for (const auto& b : bundles) {
    if (b.network.n_vertices != bundles[0].network.n_vertices ||
        b.theta_of_vertex != bundles[0].theta_of_vertex)
      throw std::invalid_argument("bundles describe different feasible structures");
  }
  CutDigraphBundle out;
  out.theta_of_vertex = bundles[0].theta_of_vertex;
  out.network.n_vertices = bundles[0].network.n_vertices;
  for (size_t i = 0; i < bundles.size(); ++i) {
    out.gamma += coeffs[i] * bundles[i].gamma;
    out.constant += coeffs[i] * bundles[i].constant;
  }
  // the infinite skeleton encodes feasibility, shared across the family
  std::set<std::pair<int, int>> skeleton;
  for (const auto& b : bundles)
    for (const auto& a : b.network.arcs)
      if (a.cap.inf) skeleton.insert({a.tail, a.head});
  for (auto [tail, head] : skeleton) out.network.arcs.push_back({tail, head, Cap::infinite()});
  for (size_t i = 0; i < bundles.size(); ++i) {
    for (const auto& a : bundles[i].network.arcs) {
      if (a.cap.inf) continue;
      out.network.arcs.push_back({a.tail, a.head, Cap::of(Rat(coeffs[i] * a.cap.v))});
    }
  }
  return out;
}

MinimizeResult minimize_bundle(const Instance& inst, const RotationOrder& order,
                               const MetaRotationPartition& part,
                               const CutDigraphBundle& bundle) {
  MinimizeResult res;
  res.bundle = bundle;
  res.cut = solve_min_cut(bundle.network);
  if (res.cut.infinite) throw std::logic_error("cut digraph admits no feasible matching");
  for (int c = 0; c < part.n_classes(); ++c)
    if (res.cut.source_side[CutDigraphBundle::vertex_of(part.rep[c])]) res.classes.push_back(c);
  res.argmin = matching_of_classes(inst, order, part, res.classes);
  res.value = res.cut.value - bundle.constant;
  return res;
}

MinimizeResult minimize(const Instance& inst, const RotationOrder& order,
                        const SublatticeSpec& feasible, const ObjectiveSpec& f) {
  auto mr = meta_rotations(inst, order, feasible);
  if (mr.failure)
    throw std::invalid_argument("feasible family is not a sublattice, cannot minimize");
  const auto& part = *mr.partition;
  ObjectiveSpec tables = differentials(inst, order, part, f);
  CutDigraphBundle bundle = build_cut_digraph(inst, order, part, tables);
  return minimize_bundle(inst, order, part, bundle);
}

}  // namespace stablecut
