#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vocseq {

// The eight analyzed behavioral contexts. Recordings annotated as Generic,
// Sleeping or Unknown are excluded at ingest and never reach this enum.
enum class Context {
  MatingProtest,
  Fighting,
  ThreatLike,
  Biting,
  Feeding,
  Grooming,
  Kissing,
  Isolation,
};

inline constexpr std::array<Context, 8> kAllContexts = {
    Context::MatingProtest, Context::Fighting, Context::ThreatLike, Context::Biting,
    Context::Feeding,       Context::Grooming, Context::Kissing,    Context::Isolation,
};

inline std::string_view to_string(Context c) {
  switch (c) {
    case Context::MatingProtest: return "MatingProtest";
    case Context::Fighting: return "Fighting";
    case Context::ThreatLike: return "ThreatLike";
    case Context::Biting: return "Biting";
    case Context::Feeding: return "Feeding";
    case Context::Grooming: return "Grooming";
    case Context::Kissing: return "Kissing";
    case Context::Isolation: return "Isolation";
  }
  return "?";
}

namespace detail {
inline std::string canon_label(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}
}  // namespace detail

/// Tolerant context parsing ("Mating protest", "mating_protest", "Threat-like", ...).
inline std::optional<Context> parse_context(std::string_view s) {
  const std::string c = detail::canon_label(s);
  if (c == "matingprotest" || c == "matingprotests") return Context::MatingProtest;
  if (c == "fighting") return Context::Fighting;
  if (c == "threatlike" || c == "threat") return Context::ThreatLike;
  if (c == "biting") return Context::Biting;
  if (c == "feeding") return Context::Feeding;
  if (c == "grooming") return Context::Grooming;
  if (c == "kissing") return Context::Kissing;
  if (c == "isolation") return Context::Isolation;
  return std::nullopt;
}

/// Contexts excluded from analysis ("were excluded due to ambiguity").
inline bool is_excluded_context(std::string_view s) {
  const std::string c = detail::canon_label(s);
  return c == "general" || c == "generic" || c == "sleeping" || c == "unknown";
}

struct SymbolSequence {
  std::string seq_id;
  std::string emitter_id;
  Context context = Context::Isolation;
  std::vector<int> symbols;
};

// ---------------------------------------------------------------------------
// Context model: add-alpha smoothed unigram / bigram / conditional tables,
// estimated per behavioral context and globally over the whole corpus.
// ---------------------------------------------------------------------------

struct ModelTables {
  std::vector<double> unigram;       // K; p(s)
  std::vector<double> bigram_joint;  // K*K; p_trans(u,v), row-major u*K+v
  std::vector<double> cond;          // K*K; p_cond(v|u) rows summing to 1
  // Second-order bigram chain: p(next symbol z | preceding bigram (u,v)).
  // Only observed bigrams get a row; unobserved bigrams fall back to uniform.
  std::unordered_map<std::int64_t, std::vector<double>> bigram_chain;
  std::int64_t n_transition_types = 0;  // distinct observed bigrams (feature e)
  std::int64_t n_symbol_tokens = 0;
  std::int64_t n_bigram_tokens = 0;
};

class ContextModel {
 public:
  double alpha = 0.5;
  std::vector<int> alphabet;  // sorted distinct symbols of the whole corpus
  std::unordered_map<int, int> symbol_index;
  ModelTables global;
  std::map<Context, ModelTables> per_context;

  int k() const { return static_cast<int>(alphabet.size()); }

  int index_of(int symbol) const {
    auto it = symbol_index.find(symbol);
    if (it == symbol_index.end()) throw std::invalid_argument("ContextModel: symbol not in alphabet");
    return it->second;
  }

  const ModelTables& tables(Context c) const {
    auto it = per_context.find(c);
    if (it == per_context.end()) throw std::invalid_argument("ContextModel: context not modeled");
    return it->second;
  }

  bool covers(Context c) const { return per_context.count(c) > 0; }

  double unigram(const ModelTables& t, int sym) const { return t.unigram[index_of(sym)]; }
  double bigram(const ModelTables& t, int u, int v) const {
    return t.bigram_joint[static_cast<std::size_t>(index_of(u)) * alphabet.size() + index_of(v)];
  }
  double cond(const ModelTables& t, int v_given, int u) const {
    return t.cond[static_cast<std::size_t>(index_of(u)) * alphabet.size() + index_of(v_given)];
  }
  /// p(z | bigram (u,v)); uniform over the alphabet when (u,v) was never observed.
  double bigram_chain(const ModelTables& t, int z, int u, int v) const {
    const std::int64_t key = static_cast<std::int64_t>(index_of(u)) * k() + index_of(v);
    auto it = t.bigram_chain.find(key);
    if (it == t.bigram_chain.end()) return 1.0 / k();
    return it->second[static_cast<std::size_t>(index_of(z))];
  }
};

namespace detail {

struct RawCounts {
  std::vector<std::int64_t> uni;                                  // K
  std::vector<std::int64_t> bi;                                   // K*K
  std::unordered_map<std::int64_t, std::vector<std::int64_t>> tri;  // (u,v) -> counts over z
  std::int64_t n_tokens = 0;
  std::int64_t n_bigrams = 0;
};

inline void accumulate(RawCounts& c, const std::vector<int>& idx_symbols, int k) {
  if (c.uni.empty()) {
    c.uni.assign(k, 0);
    c.bi.assign(static_cast<std::size_t>(k) * k, 0);
  }
  for (std::size_t i = 0; i < idx_symbols.size(); ++i) {
    c.uni[idx_symbols[i]]++;
    c.n_tokens++;
    if (i + 1 < idx_symbols.size()) {
      c.bi[static_cast<std::size_t>(idx_symbols[i]) * k + idx_symbols[i + 1]]++;
      c.n_bigrams++;
    }
    if (i + 2 < idx_symbols.size()) {
      const std::int64_t key = static_cast<std::int64_t>(idx_symbols[i]) * k + idx_symbols[i + 1];
      auto& row = c.tri[key];
      if (row.empty()) row.assign(k, 0);
      row[idx_symbols[i + 2]]++;
    }
  }
}

inline ModelTables finalize(const RawCounts& c, int k, double alpha) {
  ModelTables t;
  if (c.uni.empty()) throw std::invalid_argument("build_context_model: empty corpus");
  t.n_symbol_tokens = c.n_tokens;
  t.n_bigram_tokens = c.n_bigrams;
  t.unigram.resize(k);
  {
    const double denom = static_cast<double>(c.n_tokens) + alpha * k;
    if (!(denom > 0.0)) throw std::invalid_argument("build_context_model: empty corpus");
    for (int i = 0; i < k; ++i) t.unigram[i] = (static_cast<double>(c.uni[i]) + alpha) / denom;
  }
  t.bigram_joint.resize(static_cast<std::size_t>(k) * k);
  {
    const double denom = static_cast<double>(c.n_bigrams) + alpha * k * k;
    for (std::size_t i = 0; i < t.bigram_joint.size(); ++i) {
      t.bigram_joint[i] = denom > 0.0 ? (static_cast<double>(c.bi[i]) + alpha) / denom : 0.0;
    }
  }
  t.cond.resize(static_cast<std::size_t>(k) * k);
  for (int u = 0; u < k; ++u) {
    std::int64_t row_total = 0;
    for (int v = 0; v < k; ++v) row_total += c.bi[static_cast<std::size_t>(u) * k + v];
    const double denom = static_cast<double>(row_total) + alpha * k;
    for (int v = 0; v < k; ++v) {
      const std::size_t at = static_cast<std::size_t>(u) * k + v;
      if (denom > 0.0) {
        t.cond[at] = (static_cast<double>(c.bi[at]) + alpha) / denom;
      } else {
        t.cond[at] = 1.0 / k;  // alpha == 0 and symbol u never has a successor
      }
    }
  }
  for (const auto& [key, row] : c.tri) {
    std::int64_t row_total = 0;
    for (auto n : row) row_total += n;
    const double denom = static_cast<double>(row_total) + alpha * k;
    std::vector<double> probs(k);
    for (int z = 0; z < k; ++z) {
      probs[z] = denom > 0.0 ? (static_cast<double>(row[z]) + alpha) / denom : 1.0 / k;
    }
    t.bigram_chain.emplace(key, std::move(probs));
  }
  std::int64_t types = 0;
  for (auto n : c.bi) {
    if (n > 0) types++;
  }
  t.n_transition_types = types;
  return t;
}

}  // namespace detail

/// Estimates context and global probability tables from a labeled corpus.
/// Smoothing is add-alpha over the corpus-wide observed alphabet, so with
/// alpha > 0 every table entry is strictly positive.
inline ContextModel build_context_model(const std::vector<SymbolSequence>& seqs, double alpha = 0.5) {
  if (seqs.empty()) throw std::invalid_argument("build_context_model: empty corpus");
  if (alpha < 0.0) throw std::invalid_argument("build_context_model: alpha must be >= 0");
  ContextModel m;
  m.alpha = alpha;
  std::set<int> alpha_set;
  for (const auto& s : seqs) {
    if (s.symbols.empty()) throw std::invalid_argument("build_context_model: empty sequence " + s.seq_id);
    alpha_set.insert(s.symbols.begin(), s.symbols.end());
  }
  m.alphabet.assign(alpha_set.begin(), alpha_set.end());
  for (std::size_t i = 0; i < m.alphabet.size(); ++i) m.symbol_index[m.alphabet[i]] = static_cast<int>(i);
  const int k = m.k();

  detail::RawCounts global_counts;
  std::map<Context, detail::RawCounts> ctx_counts;
  for (const auto& s : seqs) {
    std::vector<int> idx(s.symbols.size());
    for (std::size_t i = 0; i < s.symbols.size(); ++i) idx[i] = m.symbol_index.at(s.symbols[i]);
    detail::accumulate(global_counts, idx, k);
    detail::accumulate(ctx_counts[s.context], idx, k);
  }
  m.global = detail::finalize(global_counts, k, alpha);
  for (const auto& [ctx, counts] : ctx_counts) m.per_context[ctx] = detail::finalize(counts, k, alpha);
  return m;
}

// ---------------------------------------------------------------------------
// The 18 sequence predictors (ids a..r). Product-form predictors are computed
// and reported in log2 space; entropies are in bits.
// ---------------------------------------------------------------------------

struct FeatureVector {
  double a = 0;  // syllable richness: distinct symbol types
  double b = 0;  // sequence length
  double c = 0;  // bigram transition tokens (length - 1)
  double d = 0;  // linearity index a/c (0 when c == 0)
  double e = 0;  // distinct transition types in the context corpus
  double f = 0;  // entropy of the sequence's own symbol distribution
  double g = 0;  // log2 prod of context unigram p(s_i)
  double h = 0;  // log2 prod of context joint bigram p_trans(B_i)
  double i = 0;  // versatility a/b
  double j = 0;  // entropy of the sequence's own bigram distribution
  double k = 0;  // log2 prod of global joint bigram p_trans(B_i)
  double l = 0;  // mean p_cond * log2 p_cond over transitions (context)
  double m = 0;  // mean p_trans * log2 p_trans over transitions (global)
  double n = 0;  // log2 chain: p(s_1) * prod p_cond(s_i | s_{i-1}) (context)
  double o = 0;  // log2 prod of context conditional p_cond(v_i | u_i)
  double p = 0;  // log2 prod of global conditional p_cond(v_i | u_i)
  double q = 0;  // log2 chain: p_trans(B_1) * prod p(B_i | B_{i-1}) (context)
  double r = 0;  // sequence perplexity: geometric-mean inverse conditional prob

  static constexpr int kCount = 18;

  std::array<double, kCount> as_array() const {
    return {a, b, c, d, e, f, g, h, i, j, k, l, m, n, o, p, q, r};
  }

  static const std::array<std::string, kCount>& names() {
    static const std::array<std::string, kCount> kNames = {
        "a", "b", "c", "d", "e", "f", "g", "h", "i", "j", "k", "l", "m", "n", "o", "p", "q", "r"};
    return kNames;
  }
};

namespace detail {

inline double entropy_bits_from_counts(const std::map<std::int64_t, std::int64_t>& counts, double total) {
  double h = 0.0;
  for (const auto& [_, n] : counts) {
    if (n <= 0) continue;
    const double p = static_cast<double>(n) / total;
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace detail

/// Computes the 18 predictors of one sequence under a fitted model.
/// Throws when a required probability is zero (possible only with alpha == 0).
inline FeatureVector features(const SymbolSequence& seq, const ContextModel& model) {
  if (seq.symbols.empty()) throw std::invalid_argument("features: empty sequence");
  if (!model.covers(seq.context)) throw std::invalid_argument("features: model does not cover context");
  const ModelTables& ctx = model.tables(seq.context);
  const ModelTables& glob = model.global;
  const auto& s = seq.symbols;
  const std::size_t len = s.size();

  const auto safe_log2 = [](double v) {
    if (!(v > 0.0)) throw std::domain_error("features: zero probability (alpha == 0 with unseen event)");
    return std::log2(v);
  };

  FeatureVector out;
  std::map<std::int64_t, std::int64_t> sym_counts;
  for (int x : s) sym_counts[x]++;
  out.a = static_cast<double>(sym_counts.size());
  out.b = static_cast<double>(len);
  out.c = static_cast<double>(len - 1);
  out.d = out.c > 0 ? out.a / out.c : 0.0;
  out.e = static_cast<double>(ctx.n_transition_types);
  out.f = detail::entropy_bits_from_counts(sym_counts, out.b);
  out.i = out.a / out.b;

  // summed over the (sorted) count map, not the sequence, so the value is
  // bit-identical under within-sequence permutation
  double g = 0.0;
  for (const auto& [sym, count] : sym_counts) {
    g += static_cast<double>(count) * safe_log2(model.unigram(ctx, static_cast<int>(sym)));
  }
  out.g = g;

  std::map<std::int64_t, std::int64_t> bigram_counts;
  double h = 0.0, k = 0.0, l = 0.0, m = 0.0, o = 0.0, p = 0.0;
  for (std::size_t t = 0; t + 1 < len; ++t) {
    const int u = s[t], v = s[t + 1];
    bigram_counts[static_cast<std::int64_t>(model.index_of(u)) * model.k() + model.index_of(v)]++;
    const double ctx_joint = model.bigram(ctx, u, v);
    const double glob_joint = model.bigram(glob, u, v);
    const double ctx_cond = model.cond(ctx, v, u);
    const double glob_cond = model.cond(glob, v, u);
    h += safe_log2(ctx_joint);
    k += safe_log2(glob_joint);
    o += safe_log2(ctx_cond);
    p += safe_log2(glob_cond);
    l += ctx_cond * safe_log2(ctx_cond);
    m += glob_joint * safe_log2(glob_joint);
  }
  out.h = h;
  out.k = k;
  out.o = o;
  out.p = p;
  if (len > 1) {
    out.j = detail::entropy_bits_from_counts(bigram_counts, out.c);
    out.l = l / out.c;
    out.m = m / out.c;
  }

  // Conditional symbol chain; the first symbol has no predecessor and uses the
  // context unigram.
  double chain = safe_log2(model.unigram(ctx, s[0]));
  for (std::size_t t = 1; t < len; ++t) chain += safe_log2(model.cond(ctx, s[t], s[t - 1]));
  out.n = chain;
  // Perplexity over the same n = len conditional factors: geometric-mean
  // inverse probability, computed in log space.
  out.r = std::exp2(-chain / out.b);

  // Second-order bigram chain; the first bigram uses its joint probability.
  if (len > 1) {
    double q = safe_log2(model.bigram(ctx, s[0], s[1]));
    for (std::size_t t = 2; t < len; ++t) {
      q += safe_log2(model.bigram_chain(ctx, s[t], s[t - 2], s[t - 1]));
    }
    out.q = q;
  }
  return out;
}

// ---------------------------------------------------------------------------

/// One labeled syllable. Rows with the same recording_id form one vocalization.
struct LabelRow {
  std::string syllable_id;
  std::string recording_id;
  double onset_s = 0.0;
  double offset_s = 0.0;
  std::string emitter_id;
  Context context = Context::Isolation;
  int cluster_label = 0;
};

/// Groups labeled syllables into one SymbolSequence per recording, symbols in
/// onset order. Emitter and context are inherited from the rows; a recording
/// with mixed contexts is rejected.
inline std::vector<SymbolSequence> encode(std::vector<LabelRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const LabelRow& x, const LabelRow& y) {
    if (x.recording_id != y.recording_id) return x.recording_id < y.recording_id;
    return x.onset_s < y.onset_s;
  });
  std::vector<SymbolSequence> out;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    SymbolSequence s;
    s.seq_id = rows[i].recording_id;
    s.emitter_id = rows[i].emitter_id;
    s.context = rows[i].context;
    while (j < rows.size() && rows[j].recording_id == rows[i].recording_id) {
      if (rows[j].context != s.context) {
        throw std::invalid_argument("encode: mixed contexts within recording " + rows[i].recording_id);
      }
      s.symbols.push_back(rows[j].cluster_label);
      ++j;
    }
    out.push_back(std::move(s));
    i = j;
  }
  return out;
}

/// Per-context symbol counts and normalized frequencies over the global
/// alphabet; input to the HP2 rank-sum comparisons and to plotting.
struct FrequencyTable {
  std::vector<int> alphabet;
  std::map<Context, std::vector<std::int64_t>> counts;
  std::map<Context, std::vector<double>> frequencies;
};

inline FrequencyTable syllable_frequency_table(const std::vector<SymbolSequence>& seqs) {
  FrequencyTable out;
  std::set<int> alpha_set;
  for (const auto& s : seqs) alpha_set.insert(s.symbols.begin(), s.symbols.end());
  out.alphabet.assign(alpha_set.begin(), alpha_set.end());
  std::unordered_map<int, std::size_t> idx;
  for (std::size_t i = 0; i < out.alphabet.size(); ++i) idx[out.alphabet[i]] = i;
  for (const auto& s : seqs) {
    auto& row = out.counts[s.context];
    if (row.empty()) row.assign(out.alphabet.size(), 0);
    for (int x : s.symbols) row[idx.at(x)]++;
  }
  for (const auto& [ctx, row] : out.counts) {
    std::int64_t total = 0;
    for (auto n : row) total += n;
    std::vector<double> freq(row.size(), 0.0);
    if (total > 0) {
      for (std::size_t i = 0; i < row.size(); ++i) freq[i] = static_cast<double>(row[i]) / static_cast<double>(total);
    }
    out.frequencies[ctx] = std::move(freq);
  }
  return out;
}

}  // namespace vocseq
