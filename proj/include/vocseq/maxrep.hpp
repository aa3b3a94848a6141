#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vocseq/seq.hpp"

namespace vocseq {

/// A subsequence occurring >= 2 times that cannot be extended left or right
/// without losing occurrences.
struct MaximalRepeat {
  std::vector<int> pattern;
  std::int64_t support = 0;

  int length() const { return static_cast<int>(pattern.size()); }

  friend bool operator==(const MaximalRepeat& a, const MaximalRepeat& b) {
    return a.support == b.support && a.pattern == b.pattern;
  }
  friend bool operator<(const MaximalRepeat& a, const MaximalRepeat& b) {
    if (a.pattern != b.pattern) return a.pattern < b.pattern;
    return a.support < b.support;
  }
};

struct MrInventory {
  Context context = Context::Isolation;
  std::vector<MaximalRepeat> repeats;
  std::int64_t min_support = 2;
};

// ---------------------------------------------------------------------------
// Suffix array by prefix doubling with radix sort, O(n log n). Input must be
// non-negative dense-ish ranks; callers remap symbols first.
// ---------------------------------------------------------------------------

inline std::vector<int> suffix_array(const std::vector<int>& text) {
  const int n = static_cast<int>(text.size());
  std::vector<int> sa(n), rank_of(n), tmp(n);
  std::iota(sa.begin(), sa.end(), 0);

  // initial ranks = dense ranks of the symbols themselves
  {
    std::vector<int> sorted(text);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (int i = 0; i < n; ++i) {
      rank_of[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), text[i]) - sorted.begin());
    }
  }

  std::vector<int> cnt;
  std::vector<int> sa2(n);
  for (int k = 1;; k <<= 1) {
    // sort by (rank[i], rank[i+k]) using two counting-sort passes
    const auto second_key = [&](int i) { return i + k < n ? rank_of[i + k] + 1 : 0; };
    const int max_rank = n + 1;
    cnt.assign(max_rank + 1, 0);
    for (int i = 0; i < n; ++i) cnt[second_key(i)]++;
    for (int i = 1; i <= max_rank; ++i) cnt[i] += cnt[i - 1];
    for (int i = n - 1; i >= 0; --i) sa2[--cnt[second_key(sa[i])]] = sa[i];

    cnt.assign(max_rank + 1, 0);
    for (int i = 0; i < n; ++i) cnt[rank_of[i]]++;
    for (int i = 1; i <= max_rank; ++i) cnt[i] += cnt[i - 1];
    for (int i = n - 1; i >= 0; --i) sa[--cnt[rank_of[sa2[i]]]] = sa2[i];

    tmp[sa[0]] = 0;
    for (int i = 1; i < n; ++i) {
      const bool same = rank_of[sa[i]] == rank_of[sa[i - 1]] && second_key(sa[i]) == second_key(sa[i - 1]);
      tmp[sa[i]] = tmp[sa[i - 1]] + (same ? 0 : 1);
    }
    rank_of.swap(tmp);
    if (rank_of[sa[n - 1]] == n - 1) break;
  }
  return sa;
}

/// Kasai LCP array: lcp[i] = lcp(text[sa[i-1]..], text[sa[i]..]), lcp[0] = 0.
inline std::vector<int> lcp_array(const std::vector<int>& text, const std::vector<int>& sa) {
  const int n = static_cast<int>(text.size());
  std::vector<int> inv(n), lcp(n, 0);
  for (int i = 0; i < n; ++i) inv[sa[i]] = i;
  int h = 0;
  for (int i = 0; i < n; ++i) {
    if (inv[i] > 0) {
      const int j = sa[inv[i] - 1];
      while (i + h < n && j + h < n && text[i + h] == text[j + h]) ++h;
      lcp[inv[i]] = h;
      if (h > 0) --h;
    } else {
      h = 0;
    }
  }
  return lcp;
}

namespace detail {

struct CorpusText {
  std::vector<int> text;      // remapped symbols and unique sentinels
  std::vector<int> alphabet;  // remap index -> original symbol
  int n_symbols = 0;          // values < n_symbols are real symbols
};

// Concatenates sequences with a unique sentinel after each one. Sentinels are
// unique, so no repeated pattern can contain one and repeats never span two
// sequences.
inline CorpusText build_corpus_text(const std::vector<SymbolSequence>& corpus) {
  CorpusText out;
  std::vector<int> sorted;
  for (const auto& s : corpus) {
    sorted.insert(sorted.end(), s.symbols.begin(), s.symbols.end());
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  out.alphabet = sorted;
  out.n_symbols = static_cast<int>(sorted.size());
  int next_sentinel = out.n_symbols;
  for (const auto& s : corpus) {
    for (int x : s.symbols) {
      out.text.push_back(static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin()));
    }
    out.text.push_back(next_sentinel++);
  }
  return out;
}

}  // namespace detail

/// Enumerates all maximal repeats of a corpus with their occurrence counts.
///
/// Internal nodes of the suffix tree (found as lcp intervals of the enhanced
/// suffix array) are exactly the right-maximal substrings; a node's path
/// label is a maximal repeat iff its occurrence set is left-diverse (two
/// occurrences with different preceding symbols, with begin-of-text and the
/// unique sentinels acting as everywhere-distinct symbols).
inline std::vector<MaximalRepeat> maximal_repeats(const std::vector<SymbolSequence>& corpus) {
  if (corpus.empty()) throw std::invalid_argument("maximal_repeats: empty corpus");
  for (const auto& s : corpus) {
    if (s.symbols.empty()) throw std::invalid_argument("maximal_repeats: empty sequence " + s.seq_id);
  }
  const detail::CorpusText ct = detail::build_corpus_text(corpus);
  const auto& text = ct.text;
  const int n = static_cast<int>(text.size());
  const std::vector<int> sa = suffix_array(text);
  const std::vector<int> lcp = lcp_array(text, sa);

  // left-character breaks in suffix-array order; prefix sums give O(1)
  // "is any adjacent pair distinct inside [l, r)" queries
  std::vector<int> break_prefix(n, 0);
  {
    const auto left_char = [&](int i) {
      const int pos = sa[i];
      return pos == 0 ? -1 : text[pos - 1];
    };
    // begin-of-text (-1) and the unique sentinels never compare equal to a
    // real symbol twice, so adjacent equality is exactly "same left context"
    for (int i = 1; i < n; ++i) {
      break_prefix[i] = break_prefix[i - 1] + (left_char(i) != left_char(i - 1) ? 1 : 0);
    }
  }
  const auto left_diverse = [&](int l, int r) {  // interval [l, r)
    return break_prefix[r - 1] - break_prefix[l] > 0;
  };

  // bottom-up lcp-interval enumeration (one (depth, [l, r)) per internal node)
  std::vector<MaximalRepeat> out;
  std::vector<std::pair<int, int>> stack;  // (lcp depth, left boundary)
  stack.emplace_back(0, 0);
  for (int i = 1; i <= n; ++i) {
    const int cur = i < n ? lcp[i] : 0;
    int lb = i - 1;
    while (cur < stack.back().first) {
      const auto [depth, left] = stack.back();
      stack.pop_back();
      const int right = i;  // interval [left, right)
      if (depth >= 1 && right - left >= 2 && left_diverse(left, right)) {
        MaximalRepeat mr;
        mr.support = right - left;
        mr.pattern.reserve(depth);
        const int start = sa[left];
        for (int t = 0; t < depth; ++t) mr.pattern.push_back(ct.alphabet[text[start + t]]);
        out.push_back(std::move(mr));
      }
      lb = left;
    }
    if (cur > stack.back().first) stack.emplace_back(cur, lb);
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Histogram of repeat lengths, one count per repeat type.
inline std::map<int, std::int64_t> mr_length_distribution(const MrInventory& inv) {
  std::map<int, std::int64_t> hist;
  for (const auto& r : inv.repeats) hist[r.length()]++;
  return hist;
}

inline MrInventory filter_inventory(Context context, const std::vector<MaximalRepeat>& repeats,
                                    std::int64_t min_support, int min_length = 1) {
  MrInventory inv;
  inv.context = context;
  inv.min_support = min_support;
  for (const auto& r : repeats) {
    if (r.support >= min_support && r.length() >= min_length) inv.repeats.push_back(r);
  }
  return inv;
}

/// Mean repeat length per context over repeat types meeting min_support.
/// Contexts with no qualifying repeat are absent from the result.
inline std::map<Context, double> mean_mr_length_by_context(
    const std::map<Context, std::vector<SymbolSequence>>& corpora, std::int64_t min_support = 50) {
  std::map<Context, double> out;
  for (const auto& [ctx, corpus] : corpora) {
    if (corpus.empty()) throw std::invalid_argument("mean_mr_length_by_context: empty corpus");
    const auto repeats = maximal_repeats(corpus);
    std::int64_t count = 0;
    double total = 0.0;
    for (const auto& r : repeats) {
      if (r.support >= min_support) {
        total += r.length();
        count++;
      }
    }
    if (count > 0) out[ctx] = total / static_cast<double>(count);
  }
  return out;
}

}  // namespace vocseq
