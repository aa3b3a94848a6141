#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vocseq/audio.hpp"
#include "vocseq/rng.hpp"
#include "vocseq/seq.hpp"

namespace vocseq {

// ---------------------------------------------------------------------------
// Seeded generators used as ground-truth oracles for the statistical claims.
// Every generator is a pure function of (parameters, seed).
// ---------------------------------------------------------------------------

/// First-order Markov sequences from a row-stochastic transition matrix.
inline std::vector<SymbolSequence> gen_markov(const std::vector<std::vector<double>>& transition,
                                              const std::vector<double>& init, int n_seqs, int len_lo,
                                              int len_hi, std::uint64_t seed,
                                              Context context = Context::Feeding,
                                              const std::string& emitter = "synth") {
  const std::size_t k = transition.size();
  if (k == 0 || init.size() != k) throw std::invalid_argument("gen_markov: bad matrix/init shapes");
  const auto check_dist = [&](const std::vector<double>& row) {
    if (row.size() != k) throw std::invalid_argument("gen_markov: matrix must be square");
    double s = 0.0;
    for (double p : row) {
      if (p < 0.0) throw std::invalid_argument("gen_markov: negative probability");
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("gen_markov: rows must sum to 1");
  };
  check_dist(init);
  for (const auto& row : transition) check_dist(row);
  if (len_lo < 1 || len_hi < len_lo) throw std::invalid_argument("gen_markov: bad length range");

  Rng rng(seed);
  std::vector<SymbolSequence> out;
  out.reserve(n_seqs);
  for (int i = 0; i < n_seqs; ++i) {
    SymbolSequence s;
    s.seq_id = emitter + "-" + std::string(to_string(context)) + "-" + std::to_string(i);
    s.emitter_id = emitter;
    s.context = context;
    const int len = rng.int_in(len_lo, len_hi);
    int state = static_cast<int>(rng.categorical(init));
    s.symbols.push_back(state);
    for (int t = 1; t < len; ++t) {
      state = static_cast<int>(rng.categorical(transition[state]));
      s.symbols.push_back(state);
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Discrete power-law sample via x = floor((xmin - 1/2)(1 - u)^(-1/(alpha-1)) + 1/2).
inline std::vector<std::int64_t> gen_powerlaw_ints(double alpha, std::int64_t xmin, int n, std::uint64_t seed) {
  if (alpha <= 1.0) throw std::invalid_argument("gen_powerlaw_ints: alpha must be > 1");
  if (xmin < 1) throw std::invalid_argument("gen_powerlaw_ints: xmin must be >= 1");
  Rng rng(seed);
  std::vector<std::int64_t> out;
  out.reserve(n);
  const double base = static_cast<double>(xmin) - 0.5;
  const double expo = -1.0 / (alpha - 1.0);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    out.push_back(static_cast<std::int64_t>(std::floor(base * std::pow(1.0 - u, expo) + 0.5)));
  }
  return out;
}

/// Geometric-tail sample: p(x) = (1 - e^-lambda) e^(-lambda (x - xmin)).
inline std::vector<std::int64_t> gen_geometric_ints(double lambda, std::int64_t xmin, int n, std::uint64_t seed) {
  if (lambda <= 0.0) throw std::invalid_argument("gen_geometric_ints: lambda must be > 0");
  Rng rng(seed);
  std::vector<std::int64_t> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform_pos();
    out.push_back(xmin + static_cast<std::int64_t>(std::floor(-std::log(u) / lambda)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Context corpora for the HP1 methodology checks.
// ---------------------------------------------------------------------------

enum class CorpusMode { associative, combinatorial };

struct SynthCorpus {
  std::vector<SymbolSequence> seqs;
  // associative: target per-context unigram distributions
  std::vector<std::vector<double>> context_unigrams;
  // combinatorial: per-context transition matrices (uniform stationary law)
  std::vector<std::vector<std::vector<double>>> context_transitions;
};

/// Associative mode: contexts differ only in their unigram mixes — nested
/// uniform supports of growing size — so richness/entropy-style predictors
/// separate them while symbols stay i.i.d. within a sequence.
///
/// Combinatorial mode: identical uniform unigram marginals in every context;
/// context c follows a single-cycle permutation mixed with uniform noise at a
/// context-specific level eps_c, so contexts differ only in how deterministic
/// their transitions are. A within-sequence shuffle turns all of them into
/// the same i.i.d. uniform source, erasing every separating signal.
inline SynthCorpus gen_context_corpus(CorpusMode mode, int n_contexts, int alphabet, int n_seqs,
                                      int len_lo, int len_hi, std::uint64_t seed) {
  if (alphabet < 4) throw std::invalid_argument("gen_context_corpus: alphabet must be >= 4");
  if (n_contexts < 2 || n_contexts > static_cast<int>(kAllContexts.size())) {
    throw std::invalid_argument("gen_context_corpus: n_contexts must be in [2, 8]");
  }
  if (n_seqs < n_contexts) throw std::invalid_argument("gen_context_corpus: need >= 1 sequence per context");

  SynthCorpus out;
  if (mode == CorpusMode::associative) {
    for (int c = 0; c < n_contexts; ++c) {
      const int support = std::max(2, (alphabet * (c + 1)) / n_contexts);
      std::vector<double> w(alphabet, 0.0);
      for (int i = 0; i < support; ++i) w[i] = 1.0 / support;
      out.context_unigrams.push_back(std::move(w));
    }
    Rng rng(derive_seed(seed, "associative"));
    for (int i = 0; i < n_seqs; ++i) {
      const int c = i % n_contexts;
      SymbolSequence s;
      s.seq_id = "assoc-" + std::to_string(i);
      s.emitter_id = "synth";
      s.context = kAllContexts[c];
      const int len = rng.int_in(len_lo, len_hi);
      for (int t = 0; t < len; ++t) s.symbols.push_back(static_cast<int>(rng.categorical(out.context_unigrams[c])));
      out.seqs.push_back(std::move(s));
    }
    return out;
  }

  Rng perm_rng(derive_seed(seed, "combinatorial-perms"));
  std::vector<std::vector<int>> cycles;
  while (static_cast<int>(cycles.size()) < n_contexts) {
    std::vector<int> order(alphabet);
    for (int i = 0; i < alphabet; ++i) order[i] = i;
    perm_rng.shuffle(order);
    std::vector<int> next(alphabet);
    for (int i = 0; i < alphabet; ++i) next[order[i]] = order[(i + 1) % alphabet];
    if (std::find(cycles.begin(), cycles.end(), next) == cycles.end()) cycles.push_back(std::move(next));
  }
  for (int c = 0; c < n_contexts; ++c) {
    const double eps = 0.05 + 0.7 * static_cast<double>(c) / (n_contexts - 1);
    std::vector<std::vector<double>> p(alphabet, std::vector<double>(alphabet, eps / alphabet));
    for (int u = 0; u < alphabet; ++u) p[u][cycles[c][u]] += 1.0 - eps;
    out.context_transitions.push_back(std::move(p));
  }
  const std::vector<double> uniform_init(alphabet, 1.0 / alphabet);
  Rng rng(derive_seed(seed, "combinatorial"));
  for (int i = 0; i < n_seqs; ++i) {
    const int c = i % n_contexts;
    SymbolSequence s;
    s.seq_id = "comb-" + std::to_string(i);
    s.emitter_id = "synth";
    s.context = kAllContexts[c];
    const int len = rng.int_in(len_lo, len_hi);
    int state = static_cast<int>(rng.categorical(uniform_init));
    s.symbols.push_back(state);
    for (int t = 1; t < len; ++t) {
      state = static_cast<int>(rng.categorical(out.context_transitions[c][state]));
      s.symbols.push_back(state);
    }
    out.seqs.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Planted-repeat corpora for the maximal-repeat oracle.
// ---------------------------------------------------------------------------

struct PlantedCorpus {
  std::vector<SymbolSequence> seqs;
  std::vector<int> motif;
};

/// Random background sequences with a fixed motif overwritten at
/// n_insertions non-overlapping slots. The motif occurs at least
/// n_insertions times and (for n_insertions >= 2) is a maximal repeat.
inline PlantedCorpus gen_planted_repeats(int base_alphabet, int motif_len, int n_insertions,
                                         std::uint64_t seed, int n_seqs = 50, int seq_len = 400,
                                         Context context = Context::Fighting) {
  if (base_alphabet < 2) throw std::invalid_argument("gen_planted_repeats: alphabet must be >= 2");
  if (motif_len < 1 || motif_len > seq_len) throw std::invalid_argument("gen_planted_repeats: bad motif length");
  Rng rng(seed);
  PlantedCorpus out;
  for (int i = 0; i < motif_len; ++i) out.motif.push_back(static_cast<int>(rng.index(base_alphabet)));
  for (int i = 0; i < n_seqs; ++i) {
    SymbolSequence s;
    s.seq_id = "planted-" + std::to_string(i);
    s.emitter_id = "synth";
    s.context = context;
    for (int t = 0; t < seq_len; ++t) s.symbols.push_back(static_cast<int>(rng.index(base_alphabet)));
    out.seqs.push_back(std::move(s));
  }
  std::vector<std::vector<std::pair<int, int>>> used(n_seqs);  // [start, end) per sequence
  for (int ins = 0; ins < n_insertions; ++ins) {
    const int si = ins % n_seqs;
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const int pos = static_cast<int>(rng.index(seq_len - motif_len + 1));
      bool overlap = false;
      for (const auto& [a, b] : used[si]) {
        if (pos < b && pos + motif_len > a) overlap = true;
      }
      if (overlap) continue;
      for (int t = 0; t < motif_len; ++t) out.seqs[si].symbols[pos + t] = out.motif[t];
      used[si].emplace_back(pos, pos + motif_len);
      placed = true;
    }
    if (!placed) throw std::runtime_error("gen_planted_repeats: could not place motif (corpus too dense)");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic audio with known onset/offset ground truth.
// ---------------------------------------------------------------------------

struct ToneBurst {
  double onset_s = 0.0;
  double duration_s = 0.0;
  double freq_hz = 0.0;
  double amplitude = 0.0;
};

struct AudioSynthSpec {
  double duration_s = 1.0;
  double noise_rms = 0.0;  // white Gaussian noise floor
  std::vector<ToneBurst> bursts;
};

/// Deterministic synthetic recording: tone bursts (with 1 ms cosine edge
/// ramps inside the burst) over an optional white noise floor.
inline AudioClip gen_test_audio(const AudioSynthSpec& spec, double sample_rate, std::uint64_t seed) {
  if (sample_rate <= 0.0) throw std::invalid_argument("gen_test_audio: bad sample rate");
  const std::size_t n = static_cast<std::size_t>(std::llround(spec.duration_s * sample_rate));
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.samples.assign(n, 0.0);
  if (spec.noise_rms > 0.0) {
    Rng rng(seed);
    for (auto& s : clip.samples) s = spec.noise_rms * rng.normal();
  }
  const double ramp_s = 0.001;
  for (const auto& b : spec.bursts) {
    const std::int64_t start = std::llround(b.onset_s * sample_rate);
    const std::int64_t stop = std::llround((b.onset_s + b.duration_s) * sample_rate);
    const double ramp_n = std::max(1.0, ramp_s * sample_rate);
    for (std::int64_t t = std::max<std::int64_t>(0, start); t < std::min<std::int64_t>(n, stop); ++t) {
      const double local = static_cast<double>(t - start);
      const double remain = static_cast<double>(stop - 1 - t);
      double env = 1.0;
      if (local < ramp_n) env = 0.5 - 0.5 * std::cos(M_PI * local / ramp_n);
      if (remain < ramp_n) env = std::min(env, 0.5 - 0.5 * std::cos(M_PI * remain / ramp_n));
      clip.samples[t] += b.amplitude * env * std::sin(2.0 * M_PI * b.freq_hz * local / sample_rate);
    }
  }
  return clip;
}

}  // namespace vocseq
