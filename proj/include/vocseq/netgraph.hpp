#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <vector>

#include "vocseq/rng.hpp"
#include "vocseq/seq.hpp"

namespace vocseq {

/// Directed weighted syllable-transition graph for one behavioral context.
struct TransitionGraph {
  Context context = Context::Isolation;
  std::vector<int> nodes;                             // sorted syllable labels
  std::map<std::pair<int, int>, std::int64_t> edges;  // (src, dst) -> count
  std::int64_t support = 0;                           // total transition count
};

/// Edge (u, v) weight = count of adjacent pairs u -> v within sequences;
/// transitions never cross sequence boundaries.
inline TransitionGraph build_transition_graph(const std::vector<SymbolSequence>& seqs) {
  if (seqs.empty()) throw std::invalid_argument("build_transition_graph: empty input");
  TransitionGraph g;
  g.context = seqs.front().context;
  std::set<int> nodes;
  for (const auto& s : seqs) {
    for (int x : s.symbols) nodes.insert(x);
    for (std::size_t i = 0; i + 1 < s.symbols.size(); ++i) {
      g.edges[{s.symbols[i], s.symbols[i + 1]}]++;
      g.support++;
    }
  }
  g.nodes.assign(nodes.begin(), nodes.end());
  return g;
}

// ---------------------------------------------------------------------------
// Undirected simple projection and basic metrics
// ---------------------------------------------------------------------------

/// Undirected simple graph as adjacency sets over 0..n-1.
struct SimpleGraph {
  int n = 0;
  std::vector<std::set<int>> adj;

  std::int64_t edge_count() const {
    std::int64_t m = 0;
    for (const auto& a : adj) m += static_cast<std::int64_t>(a.size());
    return m / 2;
  }
  bool has_edge(int u, int v) const { return adj[u].count(v) > 0; }
  void add_edge(int u, int v) {
    adj[u].insert(v);
    adj[v].insert(u);
  }
  void remove_edge(int u, int v) {
    adj[u].erase(v);
    adj[v].erase(u);
  }
  std::vector<std::pair<int, int>> edge_list() const {
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u) {
      for (int v : adj[u]) {
        if (u < v) edges.emplace_back(u, v);
      }
    }
    return edges;
  }
};

/// Drops self-loops and collapses directions/weights. Returns the simple
/// graph and the fraction of transition mass that sat on self-loops.
inline std::pair<SimpleGraph, double> undirected_projection(const TransitionGraph& g) {
  SimpleGraph sg;
  sg.n = static_cast<int>(g.nodes.size());
  sg.adj.resize(sg.n);
  std::map<int, int> index;
  for (int i = 0; i < sg.n; ++i) index[g.nodes[i]] = i;
  std::int64_t self_mass = 0;
  for (const auto& [edge, w] : g.edges) {
    if (edge.first == edge.second) {
      self_mass += w;
      continue;
    }
    sg.add_edge(index.at(edge.first), index.at(edge.second));
  }
  const double self_frac = g.support > 0 ? static_cast<double>(self_mass) / static_cast<double>(g.support) : 0.0;
  return {sg, self_frac};
}

inline double graph_density(const SimpleGraph& g) {
  if (g.n < 2) return 0.0;
  return 2.0 * static_cast<double>(g.edge_count()) / (static_cast<double>(g.n) * (g.n - 1));
}

inline double local_clustering(const SimpleGraph& g, int v) {
  const auto& nb = g.adj[v];
  const std::size_t deg = nb.size();
  if (deg < 2) return 0.0;
  std::int64_t links = 0;
  for (auto it = nb.begin(); it != nb.end(); ++it) {
    auto jt = it;
    for (++jt; jt != nb.end(); ++jt) {
      if (g.has_edge(*it, *jt)) links++;
    }
  }
  return 2.0 * static_cast<double>(links) / (static_cast<double>(deg) * (deg - 1));
}

/// Mean local clustering coefficient (0 for nodes of degree < 2).
inline double average_clustering(const SimpleGraph& g) {
  if (g.n == 0) return 0.0;
  double total = 0.0;
  for (int v = 0; v < g.n; ++v) total += local_clustering(g, v);
  return total / g.n;
}

// ---------------------------------------------------------------------------
// Maximal cliques (Bron-Kerbosch with pivoting)
// ---------------------------------------------------------------------------

namespace detail {

inline void bron_kerbosch(const SimpleGraph& g, std::vector<int>& r, std::set<int> p, std::set<int> x,
                          std::vector<std::vector<int>>& out) {
  if (p.empty() && x.empty()) {
    out.push_back(r);
    return;
  }
  // pivot: vertex of P union X with most neighbors in P
  int pivot = -1;
  std::size_t best = 0;
  for (const auto& candidates : {p, x}) {
    for (int u : candidates) {
      std::size_t cnt = 0;
      for (int w : g.adj[u]) cnt += p.count(w);
      if (pivot < 0 || cnt > best) {
        pivot = u;
        best = cnt;
      }
    }
  }
  std::vector<int> expand;
  for (int v : p) {
    if (pivot < 0 || !g.has_edge(pivot, v)) expand.push_back(v);
  }
  for (int v : expand) {
    std::set<int> p2, x2;
    for (int w : g.adj[v]) {
      if (p.count(w)) p2.insert(w);
      if (x.count(w)) x2.insert(w);
    }
    r.push_back(v);
    bron_kerbosch(g, r, std::move(p2), std::move(x2), out);
    r.pop_back();
    p.erase(v);
    x.insert(v);
  }
}

}  // namespace detail

inline std::vector<std::vector<int>> maximal_cliques(const SimpleGraph& g) {
  std::vector<std::vector<int>> out;
  std::set<int> p;
  for (int v = 0; v < g.n; ++v) p.insert(v);
  std::vector<int> r;
  detail::bron_kerbosch(g, r, std::move(p), {}, out);
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Paths, rewiring references, small-world coefficients
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<int> largest_component(const SimpleGraph& g) {
  std::vector<int> comp(g.n, -1);
  int best_id = -1, best_size = 0, n_comps = 0;
  for (int s = 0; s < g.n; ++s) {
    if (comp[s] >= 0) continue;
    int size = 0;
    std::queue<int> q;
    q.push(s);
    comp[s] = n_comps;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      size++;
      for (int v : g.adj[u]) {
        if (comp[v] < 0) {
          comp[v] = n_comps;
          q.push(v);
        }
      }
    }
    if (size > best_size) {
      best_size = size;
      best_id = n_comps;
    }
    n_comps++;
  }
  std::vector<int> members;
  for (int v = 0; v < g.n; ++v) {
    if (comp[v] == best_id) members.push_back(v);
  }
  return members;
}

}  // namespace detail

/// Mean unweighted shortest-path length over the largest connected component.
inline std::optional<double> mean_shortest_path(const SimpleGraph& g) {
  const auto members = detail::largest_component(g);
  if (members.size() < 2) return std::nullopt;
  std::vector<char> in_cc(g.n, 0);
  for (int v : members) in_cc[v] = 1;
  double total = 0.0;
  std::int64_t pairs = 0;
  std::vector<int> dist(g.n);
  for (int s : members) {
    std::fill(dist.begin(), dist.end(), -1);
    std::queue<int> q;
    q.push(s);
    dist[s] = 0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : g.adj[u]) {
        if (in_cc[v] && dist[v] < 0) {
          dist[v] = dist[u] + 1;
          q.push(v);
        }
      }
    }
    for (int v : members) {
      if (v != s) {
        total += dist[v];
        pairs++;
      }
    }
  }
  return total / static_cast<double>(pairs);
}

/// Degree-preserving randomization by double-edge swaps. Every accepted swap
/// keeps the graph simple; the degree sequence is conserved exactly.
inline SimpleGraph degree_preserving_rewire(const SimpleGraph& g, std::int64_t attempts, Rng& rng) {
  SimpleGraph out = g;
  auto edges = out.edge_list();
  if (edges.size() < 2) return out;
  for (std::int64_t it = 0; it < attempts; ++it) {
    const std::size_t e1 = rng.index(edges.size());
    const std::size_t e2 = rng.index(edges.size());
    if (e1 == e2) continue;
    auto [a, b] = edges[e1];
    auto [c, d] = edges[e2];
    if (rng.below(2) == 1) std::swap(c, d);  // both swap orientations reachable
    if (a == c || a == d || b == c || b == d) continue;
    if (out.has_edge(a, d) || out.has_edge(c, b)) continue;
    out.remove_edge(a, b);
    out.remove_edge(c, d);
    out.add_edge(a, d);
    out.add_edge(c, b);
    edges[e1] = {a, d};
    edges[e2] = {c, b};
  }
  return out;
}

/// Greedy latticization: double-edge swaps are accepted only when they reduce
/// the total ring distance of the edges under a fixed circular node ordering,
/// pushing the graph toward a ring-lattice of the same degree sequence.
inline SimpleGraph latticize(const SimpleGraph& g, std::int64_t attempts, Rng& rng) {
  SimpleGraph out = g;
  auto edges = out.edge_list();
  if (edges.size() < 2) return out;
  const auto ring_dist = [&](int u, int v) {
    const int d = std::abs(u - v);
    return std::min(d, out.n - d);
  };
  for (std::int64_t it = 0; it < attempts; ++it) {
    const std::size_t e1 = rng.index(edges.size());
    const std::size_t e2 = rng.index(edges.size());
    if (e1 == e2) continue;
    auto [a, b] = edges[e1];
    auto [c, d] = edges[e2];
    if (rng.below(2) == 1) std::swap(c, d);
    if (a == c || a == d || b == c || b == d) continue;
    if (out.has_edge(a, d) || out.has_edge(c, b)) continue;
    const int before = ring_dist(a, b) + ring_dist(c, d);
    const int after = ring_dist(a, d) + ring_dist(c, b);
    if (after >= before) continue;
    out.remove_edge(a, b);
    out.remove_edge(c, d);
    out.add_edge(a, d);
    out.add_edge(c, b);
    edges[e1] = {a, d};
    edges[e2] = {c, b};
  }
  return out;
}

struct GraphMetrics {
  std::int64_t support = 0;
  std::optional<double> sigma;  // (C/C_rand) / (L/L_rand)
  std::optional<double> omega;  // L_rand/L - C/C_latt
  int n_big_clique = 0;         // size of the largest maximal clique
  std::int64_t n_all_cliques = 0;
  double density = 0.0;
  double avg_clustering = 0.0;
  double self_loop_fraction = 0.0;
};

/// Structural metrics of one transition graph, computed on the undirected
/// simple projection. Small-world references average over n_rand
/// degree-preserving rewirings (10 m swap attempts each) and n_rand greedy
/// latticizations; sigma/omega are absent when the graph is too small or the
/// references are degenerate.
inline GraphMetrics graph_metrics(const TransitionGraph& g, std::uint64_t seed, int n_rand = 20) {
  auto [sg, self_frac] = undirected_projection(g);
  if (sg.n < 2) throw std::invalid_argument("graph_metrics: need >= 2 nodes after simplification");
  GraphMetrics out;
  out.support = g.support;
  out.self_loop_fraction = self_frac;
  out.density = graph_density(sg);
  out.avg_clustering = average_clustering(sg);
  const auto cliques = maximal_cliques(sg);
  out.n_all_cliques = static_cast<std::int64_t>(cliques.size());
  for (const auto& c : cliques) out.n_big_clique = std::max(out.n_big_clique, static_cast<int>(c.size()));

  const std::int64_t m = sg.edge_count();
  const auto l_opt = mean_shortest_path(sg);
  const auto lcc = detail::largest_component(sg);
  if (m < 2 || !l_opt || lcc.size() < 4) return out;  // references undefined
  const double c_orig = out.avg_clustering;
  const double l_orig = *l_opt;

  double c_rand = 0.0, l_rand = 0.0, c_latt = 0.0;
  int rand_ok = 0, latt_ok = 0;
  for (int r = 0; r < n_rand; ++r) {
    Rng rng_r(derive_seed(seed, "rewire", r));
    const SimpleGraph rewired = degree_preserving_rewire(sg, 10 * m, rng_r);
    const auto lr = mean_shortest_path(rewired);
    if (lr) {
      c_rand += average_clustering(rewired);
      l_rand += *lr;
      rand_ok++;
    }
    Rng rng_l(derive_seed(seed, "lattice", r));
    const SimpleGraph latt = latticize(sg, 20 * m, rng_l);
    c_latt += average_clustering(latt);
    latt_ok++;
  }
  if (rand_ok == 0 || latt_ok == 0) return out;
  c_rand /= rand_ok;
  l_rand /= rand_ok;
  c_latt /= latt_ok;
  if (c_rand > 0.0 && l_orig > 0.0 && l_rand > 0.0) {
    out.sigma = (c_orig / c_rand) / (l_orig / l_rand);
  }
  if (c_latt > 0.0 && l_orig > 0.0) {
    out.omega = l_rand / l_orig - c_orig / c_latt;
  }
  return out;
}

/// One GraphMetrics row per context (Support, sigma, omega, # Big Clique,
/// # All Clique, Density, Avg C). Per-graph failures surface as rows with the
/// optional cells absent.
inline std::map<Context, GraphMetrics> small_world_sweep(const std::map<Context, TransitionGraph>& graphs,
                                                         std::uint64_t seed, int n_rand = 20) {
  std::map<Context, GraphMetrics> out;
  for (const auto& [ctx, g] : graphs) {
    try {
      out[ctx] = graph_metrics(g, derive_seed(seed, std::string(to_string(ctx))), n_rand);
    } catch (const std::invalid_argument&) {
      GraphMetrics m;  // too small for any structural metric
      m.support = g.support;
      auto [sg, self_frac] = undirected_projection(g);
      m.self_loop_fraction = self_frac;
      m.density = graph_density(sg);
      m.avg_clustering = average_clustering(sg);
      out[ctx] = m;
    }
  }
  return out;
}

}  // namespace vocseq
