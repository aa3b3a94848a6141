#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "vocseq/mathutil.hpp"
#include "vocseq/maxrep.hpp"
#include "vocseq/stats.hpp"
#include "vocseq/synth.hpp"

using namespace vocseq;

TEST_CASE("gen_markov with identity matrix emits constant sequences") {
  const std::vector<std::vector<double>> identity = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const auto seqs = gen_markov(identity, {0, 0, 1}, 5, 4, 9, 3);
  for (const auto& s : seqs) {
    for (int x : s.symbols) REQUIRE(x == 2);
  }
}

TEST_CASE("gen_markov empirical transition counts match the matrix") {
  const std::vector<std::vector<double>> p = {{0.7, 0.2, 0.1}, {0.1, 0.6, 0.3}, {0.3, 0.3, 0.4}};
  const auto seqs = gen_markov(p, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 100, 1000, 1001, 8);
  std::map<std::pair<int, int>, double> counts;
  std::map<int, double> from;
  for (const auto& s : seqs) {
    for (std::size_t i = 0; i + 1 < s.symbols.size(); ++i) {
      counts[{s.symbols[i], s.symbols[i + 1]}]++;
      from[s.symbols[i]]++;
    }
  }
  for (int u = 0; u < 3; ++u) {
    for (int v = 0; v < 3; ++v) {
      REQUIRE(counts[{u, v}] / from[u] == Catch::Approx(p[u][v]).margin(0.01));
    }
  }
}

TEST_CASE("gen_markov is reproducible and validates inputs") {
  const std::vector<std::vector<double>> p = {{0.5, 0.5}, {0.5, 0.5}};
  const auto a = gen_markov(p, {0.5, 0.5}, 10, 5, 20, 42);
  const auto b = gen_markov(p, {0.5, 0.5}, 10, 5, 20, 42);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].symbols == b[i].symbols);
  REQUIRE_THROWS_AS(gen_markov({{0.5, 0.4}, {0.5, 0.5}}, {0.5, 0.5}, 1, 5, 5, 1), std::invalid_argument);
}

TEST_CASE("gen_powerlaw_ints respects xmin and round-trips through the fit") {
  for (double alpha : {2.5, 1.79}) {
    const auto sample = gen_powerlaw_ints(alpha, 3, 10000, 55);
    for (auto x : sample) REQUIRE(x >= 3);
    const auto fit = fit_powerlaw(sample, 3);
    REQUIRE(fit.alpha == Catch::Approx(alpha).margin(0.1));
  }
}

TEST_CASE("associative corpus matches its target unigram distributions") {
  const auto corpus = gen_context_corpus(CorpusMode::associative, 4, 8, 400, 240, 260, 77);
  REQUIRE(corpus.context_unigrams.size() == 4);
  std::map<Context, std::vector<double>> counts;
  std::map<Context, double> totals;
  for (const auto& s : corpus.seqs) {
    auto& c = counts[s.context];
    if (c.empty()) c.assign(8, 0.0);
    for (int x : s.symbols) {
      c[x]++;
      totals[s.context]++;
    }
  }
  for (int ci = 0; ci < 4; ++ci) {
    const Context ctx = kAllContexts[ci];
    const auto& target = corpus.context_unigrams[ci];
    double kl = 0.0;
    for (int k = 0; k < 8; ++k) {
      const double emp = counts[ctx][k] / totals[ctx];
      if (emp > 0.0) kl += emp * std::log(emp / target[k]);
    }
    REQUIRE(kl < 0.01);
  }
}

TEST_CASE("combinatorial corpus has indistinguishable pooled unigrams") {
  const auto corpus = gen_context_corpus(CorpusMode::combinatorial, 4, 8, 400, 240, 260, 99);
  REQUIRE(corpus.context_transitions.size() == 4);
  // chi-square homogeneity test of symbol counts across contexts
  std::map<Context, std::vector<double>> counts;
  for (const auto& s : corpus.seqs) {
    auto& c = counts[s.context];
    if (c.empty()) c.assign(8, 0.0);
    for (int x : s.symbols) c[x]++;
  }
  std::vector<double> col_totals(8, 0.0);
  double grand = 0.0;
  for (const auto& [_, c] : counts) {
    for (int k = 0; k < 8; ++k) {
      col_totals[k] += c[k];
      grand += c[k];
    }
  }
  double stat = 0.0;
  for (const auto& [_, c] : counts) {
    double row_total = 0.0;
    for (double v : c) row_total += v;
    for (int k = 0; k < 8; ++k) {
      const double expected = row_total * col_totals[k] / grand;
      stat += (c[k] - expected) * (c[k] - expected) / expected;
    }
  }
  const double dof = (4 - 1) * (8 - 1);
  REQUIRE(chi2_sf(stat, dof) > 0.05);

  // transition rows are proper distributions with uniform stationary law
  for (const auto& p : corpus.context_transitions) {
    for (const auto& row : p) {
      double s = 0.0;
      for (double v : row) s += v;
      REQUIRE(s == Catch::Approx(1.0).margin(1e-12));
    }
    for (int v = 0; v < 8; ++v) {
      double col = 0.0;
      for (int u = 0; u < 8; ++u) col += p[u][v];
      REQUIRE(col == Catch::Approx(1.0).margin(1e-12));  // doubly stochastic
    }
  }
}

TEST_CASE("context corpora are reproducible for a fixed seed") {
  for (CorpusMode mode : {CorpusMode::associative, CorpusMode::combinatorial}) {
    const auto a = gen_context_corpus(mode, 2, 8, 20, 10, 20, 5);
    const auto b = gen_context_corpus(mode, 2, 8, 20, 10, 20, 5);
    REQUIRE(a.seqs.size() == b.seqs.size());
    for (std::size_t i = 0; i < a.seqs.size(); ++i) REQUIRE(a.seqs[i].symbols == b.seqs[i].symbols);
  }
}

TEST_CASE("planted motif appears with at least the planted support") {
  const auto planted = gen_planted_repeats(20, 8, 60, 11);
  const auto repeats = maximal_repeats(planted.seqs);
  bool found = false;
  for (const auto& r : repeats) {
    if (r.pattern == planted.motif) {
      found = true;
      REQUIRE(r.support >= 60);
    }
  }
  REQUIRE(found);
}

TEST_CASE("a motif inserted once is not a repeat") {
  const auto planted = gen_planted_repeats(20, 10, 1, 13, 10, 300);
  const auto repeats = maximal_repeats(planted.seqs);
  for (const auto& r : repeats) {
    REQUIRE(r.pattern != planted.motif);
  }
}

TEST_CASE("background-only corpora have only short chance repeats") {
  const auto planted = gen_planted_repeats(30, 8, 0, 17, 40, 500);
  const auto repeats = maximal_repeats(planted.seqs);
  // expected longest chance repeat ~ 2 log_30(20000) ~ 6; allow generous slack
  for (const auto& r : repeats) {
    REQUIRE(r.length() <= 8);
  }
}

TEST_CASE("gen_test_audio produces the requested bursts deterministically") {
  AudioSynthSpec spec;
  spec.duration_s = 0.1;
  spec.noise_rms = 0.01;
  spec.bursts = {{0.02, 0.01, 5000.0, 0.5}};
  const auto a = gen_test_audio(spec, 50000.0, 3);
  const auto b = gen_test_audio(spec, 50000.0, 3);
  REQUIRE(a.samples == b.samples);
  REQUIRE(a.samples.size() == 5000);

  // energy concentrated in the burst window
  double burst_energy = 0.0, rest_energy = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const double t = static_cast<double>(i) / 50000.0;
    (t >= 0.02 && t < 0.03 ? burst_energy : rest_energy) += a.samples[i] * a.samples[i];
  }
  REQUIRE(burst_energy > 100.0 * rest_energy);

  AudioSynthSpec silent;
  silent.duration_s = 0.01;
  const auto z = gen_test_audio(silent, 50000.0, 1);
  for (double v : z.samples) REQUIRE(v == 0.0);
}
