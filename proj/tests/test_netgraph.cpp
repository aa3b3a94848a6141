#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "vocseq/netgraph.hpp"
#include "vocseq/rng.hpp"

using namespace vocseq;

namespace {

SymbolSequence make_seq(std::vector<int> symbols, Context ctx = Context::Feeding) {
  SymbolSequence s;
  s.seq_id = "s";
  s.emitter_id = "e";
  s.context = ctx;
  s.symbols = std::move(symbols);
  return s;
}

SimpleGraph complete_graph(int n) {
  SimpleGraph g;
  g.n = n;
  g.adj.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
  }
  return g;
}

SimpleGraph path_graph(int n) {
  SimpleGraph g;
  g.n = n;
  g.adj.resize(n);
  for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1);
  return g;
}

/// Circulant ring lattice: each node connects to its k/2 nearest on each side.
TransitionGraph ring_lattice(int n, int k) {
  TransitionGraph g;
  g.context = Context::Feeding;
  for (int i = 0; i < n; ++i) g.nodes.push_back(i);
  for (int i = 0; i < n; ++i) {
    for (int d = 1; d <= k / 2; ++d) {
      g.edges[{i, (i + d) % n}] = 1;
      g.support += 1;
    }
  }
  return g;
}

TransitionGraph erdos_renyi(int n, double p, std::uint64_t seed) {
  TransitionGraph g;
  g.context = Context::Feeding;
  for (int i = 0; i < n; ++i) g.nodes.push_back(i);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) {
        g.edges[{i, j}] = 1;
        g.support += 1;
      }
    }
  }
  return g;
}

// brute-force maximal cliques: all vertex subsets, clique + maximality check
std::set<std::vector<int>> brute_force_cliques(const SimpleGraph& g) {
  std::set<std::vector<int>> out;
  const int n = g.n;
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> verts;
    for (int v = 0; v < n; ++v) {
      if (mask & (1 << v)) verts.push_back(v);
    }
    bool clique = true;
    for (std::size_t a = 0; a < verts.size() && clique; ++a) {
      for (std::size_t b = a + 1; b < verts.size() && clique; ++b) {
        if (!g.has_edge(verts[a], verts[b])) clique = false;
      }
    }
    if (!clique) continue;
    bool maximal = true;
    for (int v = 0; v < n && maximal; ++v) {
      if (mask & (1 << v)) continue;
      bool extends = true;
      for (int u : verts) {
        if (!g.has_edge(u, v)) {
          extends = false;
          break;
        }
      }
      if (extends) maximal = false;
    }
    if (maximal) out.insert(verts);
  }
  return out;
}

}  // namespace

TEST_CASE("transition graph counts adjacent pairs") {
  const auto g = build_transition_graph({make_seq({1, 2, 1, 2})});
  REQUIRE(g.support == 3);
  REQUIRE(g.edges.at({1, 2}) == 2);
  REQUIRE(g.edges.at({2, 1}) == 1);

  const auto loops = build_transition_graph({make_seq({5, 5, 5})});
  REQUIRE(loops.edges.at({5, 5}) == 2);

  // no cross-sequence edges; support is the sum of len-1
  const auto two = build_transition_graph({make_seq({1, 2}), make_seq({3, 4, 5})});
  REQUIRE(two.support == 3);
  REQUIRE(two.edges.count({2, 3}) == 0);
}

TEST_CASE("transition graph support equals sum of sequence lengths minus one") {
  Rng rng(1);
  std::vector<SymbolSequence> seqs;
  std::int64_t expected = 0;
  for (int i = 0; i < 20; ++i) {
    std::vector<int> symbols;
    const int len = 1 + static_cast<int>(rng.index(30));
    for (int t = 0; t < len; ++t) symbols.push_back(static_cast<int>(rng.index(6)));
    expected += len - 1;
    seqs.push_back(make_seq(std::move(symbols)));
  }
  REQUIRE(build_transition_graph(seqs).support == expected);
}

TEST_CASE("complete graph metrics") {
  const auto g = complete_graph(5);
  REQUIRE(graph_density(g) == Catch::Approx(1.0));
  REQUIRE(average_clustering(g) == Catch::Approx(1.0));
  const auto cliques = maximal_cliques(g);
  REQUIRE(cliques.size() == 1);
  REQUIRE(cliques[0].size() == 5);
}

TEST_CASE("path graph metrics") {
  const auto g = path_graph(4);
  REQUIRE(graph_density(g) == Catch::Approx(0.5));  // 2*3/(4*3)
  REQUIRE(average_clustering(g) == Catch::Approx(0.0));
  const auto cliques = maximal_cliques(g);
  REQUIRE(cliques.size() == 3);  // the three edges
  for (const auto& c : cliques) REQUIRE(c.size() == 2);
}

TEST_CASE("triangle with pendant: local clustering by the definitional formula") {
  SimpleGraph g;
  g.n = 4;
  g.adj.resize(4);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(0, 2);
  g.add_edge(0, 3);
  // C(0) = 1/3 (one closed pair of three), C(1) = C(2) = 1, C(3) = 0
  REQUIRE(local_clustering(g, 0) == Catch::Approx(1.0 / 3.0));
  REQUIRE(local_clustering(g, 1) == Catch::Approx(1.0));
  REQUIRE(local_clustering(g, 3) == 0.0);
  REQUIRE(average_clustering(g) == Catch::Approx((1.0 / 3.0 + 1.0 + 1.0 + 0.0) / 4.0));
}

TEST_CASE("bron-kerbosch equals subset brute force on random graphs") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + static_cast<int>(rng.index(9));  // up to 12
    SimpleGraph g;
    g.n = n;
    g.adj.resize(n);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (rng.uniform() < 0.4) g.add_edge(i, j);
      }
    }
    const auto got = maximal_cliques(g);
    const std::set<std::vector<int>> got_set(got.begin(), got.end());
    REQUIRE(got_set == brute_force_cliques(g));
  }
}

TEST_CASE("degree-preserving rewiring conserves the degree sequence exactly") {
  const auto [sg, _] = undirected_projection(erdos_renyi(30, 0.2, 3));
  std::vector<std::size_t> before;
  for (const auto& a : sg.adj) before.push_back(a.size());
  Rng rng(4);
  const auto rewired = degree_preserving_rewire(sg, 10 * sg.edge_count(), rng);
  std::vector<std::size_t> after;
  for (const auto& a : rewired.adj) after.push_back(a.size());
  REQUIRE(before == after);
  // and it actually changed something
  REQUIRE(rewired.edge_list() != sg.edge_list());
}

TEST_CASE("latticization never decreases clustering on a random graph") {
  const auto [sg, _] = undirected_projection(erdos_renyi(40, 0.15, 5));
  Rng rng(6);
  const auto latt = latticize(sg, 20 * sg.edge_count(), rng);
  REQUIRE(average_clustering(latt) >= average_clustering(sg) - 0.05);
  std::vector<std::size_t> before, after;
  for (const auto& a : sg.adj) before.push_back(a.size());
  for (const auto& a : latt.adj) after.push_back(a.size());
  REQUIRE(before == after);
}

TEST_CASE("ring lattice has strongly negative omega") {
  const auto g = ring_lattice(50, 4);
  const auto metrics = graph_metrics(g, 42);
  REQUIRE(metrics.omega.has_value());
  REQUIRE(*metrics.omega < -0.5);
  REQUIRE(metrics.avg_clustering == Catch::Approx(0.5));  // 3(k-2)/(4(k-1)) at k=4
}

TEST_CASE("random graph has strongly positive omega") {
  const auto g = erdos_renyi(50, 0.2, 7);
  const auto metrics = graph_metrics(g, 43);
  REQUIRE(metrics.omega.has_value());
  REQUIRE(*metrics.omega > 0.5);
}

TEST_CASE("graph metrics are deterministic given the seed") {
  const auto g = erdos_renyi(30, 0.15, 8);
  const auto a = graph_metrics(g, 99);
  const auto b = graph_metrics(g, 99);
  REQUIRE(a.sigma == b.sigma);
  REQUIRE(a.omega == b.omega);
  REQUIRE(a.density == b.density);
  REQUIRE(a.avg_clustering == b.avg_clustering);
}

TEST_CASE("density and clustering are invariant under node relabeling") {
  const auto g = erdos_renyi(20, 0.3, 9);
  TransitionGraph relabeled;
  relabeled.context = g.context;
  relabeled.support = g.support;
  for (int v : g.nodes) relabeled.nodes.push_back(1000 - v);
  for (const auto& [e, w] : g.edges) relabeled.edges[{1000 - e.first, 1000 - e.second}] = w;
  const auto ma = graph_metrics(g, 1);
  const auto mb = graph_metrics(relabeled, 1);
  REQUIRE(ma.density == Catch::Approx(mb.density).margin(1e-15));
  REQUIRE(ma.avg_clustering == Catch::Approx(mb.avg_clustering).margin(1e-15));
  REQUIRE(ma.n_big_clique == mb.n_big_clique);
  REQUIRE(ma.n_all_cliques == mb.n_all_cliques);
}

TEST_CASE("self-loop-dominated graphs report absent small-world coefficients") {
  // Isolation-style: one syllable repeated, plus a second barely-connected node
  const auto g = build_transition_graph({make_seq({1, 1, 1, 1, 1, 1}), make_seq({1, 2})});
  const auto metrics = graph_metrics(g, 5);
  REQUIRE_FALSE(metrics.sigma.has_value());
  REQUIRE_FALSE(metrics.omega.has_value());
  REQUIRE(metrics.self_loop_fraction > 0.5);
  REQUIRE(metrics.avg_clustering == 0.0);

  // a single-node graph cannot be simplified meaningfully
  const auto tiny = build_transition_graph({make_seq({3, 3, 3})});
  REQUIRE_THROWS_AS(graph_metrics(tiny, 1), std::invalid_argument);
}

TEST_CASE("small world sweep emits one row per context with absent cells on failure") {
  std::map<Context, TransitionGraph> graphs;
  graphs[Context::MatingProtest] = erdos_renyi(30, 0.3, 11);
  graphs[Context::Isolation] = build_transition_graph({make_seq({1, 1, 1, 1}, Context::Isolation)});
  const auto sweep = small_world_sweep(graphs, 17);
  REQUIRE(sweep.size() == 2);
  REQUIRE(sweep.at(Context::MatingProtest).sigma.has_value());
  REQUIRE_FALSE(sweep.at(Context::Isolation).sigma.has_value());
  REQUIRE(sweep.at(Context::Isolation).support == 3);
}
