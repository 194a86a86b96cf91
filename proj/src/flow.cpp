#include "stablecut/flow.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <stdexcept>
#include <utility>

namespace stablecut {

Cap& Cap::operator+=(const Cap& o) {
  if (o.inf) {
    inf = true;
    v = 0;
  } else if (!inf) {
    v += o.v;
  }
  return *this;
}

std::string cap_to_string(const Cap& c) { return c.inf ? "inf" : rat_to_string(c.v); }

FlowNetwork merge_parallel_arcs(const FlowNetwork& net) {
  FlowNetwork out;
  out.n_vertices = net.n_vertices;
  out.source = net.source;
  out.sink = net.sink;
  std::map<std::pair<int, int>, int> slot;
  for (auto& a : net.arcs) {
    if (a.tail == a.head) continue;  // a self-loop never crosses a cut
    auto [it, fresh] = slot.try_emplace({a.tail, a.head}, (int)out.arcs.size());
    if (fresh) out.arcs.push_back({a.tail, a.head, Cap::of(0)});
    out.arcs[it->second].cap += a.cap;
  }
  std::erase_if(out.arcs, [](const Arc& a) { return !a.cap.inf && a.cap.v == 0; });
  return out;
}

namespace {

struct dinic {
  struct edge {
    int to;
    Int cap;
    int rev;
  };
  std::vector<std::vector<edge>> g;
  std::vector<int> level, iter;

  explicit dinic(int n) : g(n), level(n), iter(n) {}

  void add(int u, int v, Int c) {
    g[u].push_back({v, std::move(c), (int)g[v].size()});
    g[v].push_back({u, 0, (int)g[u].size() - 1});
  }
  bool bfs(int s, int t) {
    std::fill(level.begin(), level.end(), -1);
    std::queue<int> q;
    level[s] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (auto& e : g[u])
        if (e.cap > 0 && level[e.to] < 0) {
          level[e.to] = level[u] + 1;
          q.push(e.to);
        }
    }
    return level[t] >= 0;
  }
  Int dfs(int u, int t, Int f) {
    if (u == t) return f;
    for (int& i = iter[u]; i < (int)g[u].size(); ++i) {
      auto& e = g[u][i];
      if (e.cap > 0 && level[u] < level[e.to]) {
        Int d = dfs(e.to, t, std::min(f, e.cap));
        if (d > 0) {
          e.cap -= d;
          g[e.to][e.rev].cap += d;
          return d;
        }
      }
    }
    return 0;
  }
  Int run(int s, int t, const Int& limit) {
    Int total = 0;
    while (bfs(s, t)) {
      std::fill(iter.begin(), iter.end(), 0);
      for (;;) {
        Int f = dfs(s, t, limit);
        if (f == 0) break;
        total += f;
      }
    }
    return total;
  }
};

}  // namespace

CutResult solve_min_cut(const FlowNetwork& net) {
  CutResult res;
  res.merged = merge_parallel_arcs(net);
  auto& m = res.merged;
  int n = m.n_vertices;
  if (n < 2 || m.source == m.sink || m.source < 0 || m.source >= n || m.sink < 0 ||
      m.sink >= n)
    throw std::invalid_argument("flow network: bad source/sink");

  // common denominator so the solver works on integers
  Int lcm = 1;
  for (auto& a : m.arcs) {
    if (a.tail < 0 || a.tail >= n || a.head < 0 || a.head >= n)
      throw std::invalid_argument("flow network: vertex out of range");
    if (a.head == m.source) throw std::invalid_argument("flow network: arc into source");
    if (a.tail == m.sink) throw std::invalid_argument("flow network: arc out of sink");
    if (!a.cap.inf) {
      if (a.cap.v < 0) throw std::invalid_argument("flow network: negative capacity");
      Int d = denominator(a.cap.v);
      lcm = lcm / gcd(lcm, d) * d;
    }
  }
  std::vector<Int> scaled(m.arcs.size());
  Int big_m = 1;
  for (size_t i = 0; i < m.arcs.size(); ++i)
    if (!m.arcs[i].cap.inf) {
      scaled[i] = numerator(m.arcs[i].cap.v) * (lcm / denominator(m.arcs[i].cap.v));
      big_m += scaled[i];
    }
  for (size_t i = 0; i < m.arcs.size(); ++i)
    if (m.arcs[i].cap.inf) scaled[i] = big_m;

  dinic d(n);
  std::vector<std::pair<int, int>> where(m.arcs.size());  // (tail, slot in g[tail])
  for (size_t i = 0; i < m.arcs.size(); ++i) {
    where[i] = {m.arcs[i].tail, (int)d.g[m.arcs[i].tail].size()};
    d.add(m.arcs[i].tail, m.arcs[i].head, scaled[i]);
  }
  Int total = d.run(m.source, m.sink, big_m);

  if (total >= big_m) {
    res.infinite = true;
  } else {
    res.value = Rat(total, lcm);
  }
  res.flow.resize(m.arcs.size());
  for (size_t i = 0; i < m.arcs.size(); ++i)
    res.flow[i] = Rat(scaled[i] - d.g[where[i].first][where[i].second].cap, lcm);

  res.source_side.assign(n, 0);
  res.source_side[m.source] = 1;
  std::queue<int> q;
  q.push(m.source);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (auto& e : d.g[u])
      if (e.cap > 0 && !res.source_side[e.to]) {
        res.source_side[e.to] = 1;
        q.push(e.to);
      }
  }
  return res;
}

Cap cut_capacity(const FlowNetwork& net, const std::vector<char>& source_side) {
  if ((int)source_side.size() != net.n_vertices)
    throw std::invalid_argument("cut_capacity: side size mismatch");
  Cap total = Cap::of(0);
  for (auto& a : net.arcs)
    if (source_side[a.tail] && !source_side[a.head]) total += a.cap;
  return total;
}

}  // namespace stablecut
