#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "vocseq/rng.hpp"
#include "vocseq/seq.hpp"

namespace vocseq {

// ---------------------------------------------------------------------------
// Random forest (axis-aligned splits, Gini impurity), grown to purity or
// min_samples_leaf, with mtry feature candidates per split.
// ---------------------------------------------------------------------------

struct ForestParams {
  int n_trees = 300;
  int mtry = 5;  // candidate features per split (~sqrt(18))
  int min_samples_leaf = 1;
};

namespace detail {

struct TreeNode {
  int feature = -1;  // -1 = leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  int prediction = -1;
};

struct Tree {
  std::vector<TreeNode> nodes;

  int predict(const std::vector<double>& x) const {
    int at = 0;
    while (nodes[at].feature >= 0) {
      at = x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
    }
    return nodes[at].prediction;
  }
};

inline double gini(const std::vector<std::int64_t>& counts, double total) {
  double g = 1.0;
  for (auto c : counts) {
    const double p = static_cast<double>(c) / total;
    g -= p * p;
  }
  return g;
}

struct TreeBuilder {
  const std::vector<std::vector<double>>& x;
  const std::vector<int>& y;
  int n_classes;
  int n_features;
  ForestParams params;
  Rng& rng;
  Tree tree;
  std::vector<double>& importance;  // accumulated weighted impurity decrease
  double n_root;

  int majority(const std::vector<int>& rows) const {
    std::vector<std::int64_t> counts(n_classes, 0);
    for (int r : rows) counts[y[r]]++;
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  }

  int build(std::vector<int> rows) {
    std::vector<std::int64_t> counts(n_classes, 0);
    for (int r : rows) counts[y[r]]++;
    const double total = static_cast<double>(rows.size());
    const double node_gini = gini(counts, total);
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;

    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (pure || static_cast<int>(rows.size()) < 2 * params.min_samples_leaf) {
      tree.nodes[node_id].prediction = majority(rows);
      return node_id;
    }

    // sample mtry candidate features without replacement
    std::vector<int> features(n_features);
    std::iota(features.begin(), features.end(), 0);
    for (int i = 0; i < std::min(params.mtry, n_features); ++i) {
      std::swap(features[i], features[i + rng.index(n_features - i)]);
    }
    features.resize(std::min(params.mtry, n_features));

    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> order(rows.size());
    for (int f : features) {
      for (std::size_t i = 0; i < rows.size(); ++i) order[i] = {x[rows[i]][f], y[rows[i]]};
      std::sort(order.begin(), order.end());
      std::vector<std::int64_t> left(n_classes, 0);
      std::vector<std::int64_t> right(counts);
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left[order[i].second]++;
        right[order[i].second]--;
        if (order[i].first == order[i + 1].first) continue;  // no split between equal values
        const double nl = static_cast<double>(i + 1);
        const double nr = total - nl;
        if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
        const double gain = node_gini - (nl / total) * gini(left, nl) - (nr / total) * gini(right, nr);
        if (gain > best_gain + 1e-15) {
          best_gain = gain;
          best_feature = f;
          best_threshold = (order[i].first + order[i + 1].first) / 2.0;
        }
      }
    }
    if (best_feature < 0) {
      tree.nodes[node_id].prediction = majority(rows);
      return node_id;
    }
    importance[best_feature] += (total / n_root) * best_gain;

    std::vector<int> left_rows, right_rows;
    for (int r : rows) {
      (x[r][best_feature] <= best_threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    const int left_id = build(std::move(left_rows));
    const int right_id = build(std::move(right_rows));
    tree.nodes[node_id].left = left_id;
    tree.nodes[node_id].right = right_id;
    return node_id;
  }
};

}  // namespace detail

struct ForestModel {
  std::vector<detail::Tree> trees;
  std::vector<int> classes;  // class ids in training order
  int n_features = 0;
  std::uint64_t seed = 0;
  std::vector<double> importance_raw;  // summed impurity decreases
  bool degenerate_importance = false;  // no split ever improved impurity

  int predict_index(const std::vector<double>& x) const {
    std::vector<int> votes(classes.size(), 0);
    for (const auto& t : trees) votes[t.predict(x)]++;
    return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
};

/// Bootstrap-sampled trees with seeded per-tree streams; deterministic for a
/// fixed (data, params, seed) triple regardless of scheduling.
inline ForestModel train_forest(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                const ForestParams& params, std::uint64_t seed) {
  if (x.empty() || x.size() != y.size()) throw std::invalid_argument("train_forest: bad data shapes");
  const int n_features = static_cast<int>(x.front().size());
  for (const auto& row : x) {
    if (static_cast<int>(row.size()) != n_features) throw std::invalid_argument("train_forest: ragged matrix");
    for (double v : row) {
      if (std::isnan(v)) throw std::invalid_argument("train_forest: NaN feature");
    }
  }
  ForestModel model;
  model.n_features = n_features;
  model.seed = seed;
  {
    std::set<int> classes(y.begin(), y.end());
    if (classes.size() < 2) throw std::invalid_argument("train_forest: need >= 2 classes");
    model.classes.assign(classes.begin(), classes.end());
  }
  std::map<int, int> class_index;
  for (std::size_t i = 0; i < model.classes.size(); ++i) class_index[model.classes[i]] = static_cast<int>(i);
  std::vector<int> yi(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) yi[i] = class_index.at(y[i]);

  const int n = static_cast<int>(x.size());
  model.importance_raw.assign(n_features, 0.0);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, "tree", t));
    std::vector<int> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = static_cast<int>(rng.index(n));  // bootstrap
    detail::TreeBuilder builder{x,      yi,  static_cast<int>(model.classes.size()),
                                n_features, params, rng,
                                {},     model.importance_raw,
                                static_cast<double>(rows.size())};
    builder.build(std::move(rows));
    model.trees.push_back(std::move(builder.tree));
  }
  double total = 0.0;
  for (double v : model.importance_raw) total += v;
  model.degenerate_importance = total <= 0.0;
  return model;
}

inline int predict(const ForestModel& model, const std::vector<double>& x) {
  return model.classes[model.predict_index(x)];
}

/// Mean decrease in Gini impurity, normalized to sum to 1. When no split ever
/// reduced impurity (all-constant features) the model is flagged degenerate
/// and the importances fall back to uniform.
inline std::vector<double> feature_importance(const ForestModel& model) {
  std::vector<double> imp = model.importance_raw;
  double total = 0.0;
  for (double v : imp) total += v;
  if (total <= 0.0) {
    return std::vector<double>(imp.size(), 1.0 / static_cast<double>(imp.size()));
  }
  for (double& v : imp) v /= total;
  return imp;
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct EvalReport {
  double macro_f1 = 0.0;
  std::map<Context, double> per_class_f1;
  // confusion[true][predicted], rows sum to per-class support
  std::map<Context, std::map<Context, std::int64_t>> confusion;
  std::vector<std::uint64_t> fold_seeds;
};

/// Stratified fold assignment: within each class, rows are shuffled by the
/// seed and dealt round-robin, so every class is spread over all k folds.
inline std::vector<int> stratified_folds(const std::vector<Context>& y, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_folds: k must be >= 2");
  std::map<Context, std::vector<int>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(static_cast<int>(i));
  std::vector<int> fold(y.size(), -1);
  for (auto& [ctx, rows] : by_class) {
    if (static_cast<int>(rows.size()) < k) {
      throw std::invalid_argument("stratified_folds: class " + std::string(to_string(ctx)) +
                                  " has fewer rows than folds");
    }
    Rng rng(derive_seed(seed, "fold", static_cast<std::uint64_t>(ctx)));
    rng.shuffle(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) fold[rows[i]] = static_cast<int>(i % k);
  }
  return fold;
}

namespace detail {

inline double macro_f1_from_confusion(const std::map<Context, std::map<Context, std::int64_t>>& confusion,
                                      std::map<Context, double>* per_class = nullptr) {
  std::set<Context> classes;
  for (const auto& [t, row] : confusion) {
    classes.insert(t);
    for (const auto& [p, _] : row) classes.insert(p);
  }
  double total_f1 = 0.0;
  for (Context c : classes) {
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (const auto& [t, row] : confusion) {
      for (const auto& [p, count] : row) {
        if (t == c && p == c) tp += count;
        if (t != c && p == c) fp += count;
        if (t == c && p != c) fn += count;
      }
    }
    const double denom = 2.0 * tp + fp + fn;
    const double f1 = denom > 0.0 ? 2.0 * tp / denom : 0.0;
    if (per_class) (*per_class)[c] = f1;
    total_f1 += f1;
  }
  return classes.empty() ? 0.0 : total_f1 / static_cast<double>(classes.size());
}

}  // namespace detail

/// Stratified k-fold cross-validation; the confusion matrix is pooled over
/// folds and macro-F1 is computed from the pooled matrix.
inline EvalReport cross_validate(const std::vector<std::vector<double>>& x, const std::vector<Context>& y,
                                 int k, std::uint64_t seed, const ForestParams& params = {}) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("cross_validate: bad data shapes");
  const auto fold = stratified_folds(y, k, seed);
  EvalReport report;
  for (int f = 0; f < k; ++f) {
    std::vector<std::vector<double>> x_train;
    std::vector<int> y_train;
    std::vector<int> test_rows;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (fold[i] == f) {
        test_rows.push_back(static_cast<int>(i));
      } else {
        x_train.push_back(x[i]);
        y_train.push_back(static_cast<int>(y[i]));
      }
    }
    const std::uint64_t fold_seed = derive_seed(seed, "cv-fold", f);
    report.fold_seeds.push_back(fold_seed);
    const ForestModel model = train_forest(x_train, y_train, params, fold_seed);
    for (int i : test_rows) {
      const Context predicted = static_cast<Context>(predict(model, x[i]));
      report.confusion[y[i]][predicted]++;
    }
  }
  report.macro_f1 = detail::macro_f1_from_confusion(report.confusion, &report.per_class_f1);
  return report;
}

// ---------------------------------------------------------------------------
// HP1: order-permutation experiment
// ---------------------------------------------------------------------------

struct PermutationOutcome {
  double f1_original = 0.0;
  double f1_permuted = 0.0;
  double delta = 0.0;  // original - permuted
  EvalReport report_original;
  EvalReport report_permuted;
};

/// Shuffles symbols independently within each sequence (seeded per sequence).
inline std::vector<SymbolSequence> permute_within_sequences(const std::vector<SymbolSequence>& seqs,
                                                            std::uint64_t seed) {
  std::vector<SymbolSequence> out = seqs;
  for (std::size_t i = 0; i < out.size(); ++i) {
    Rng rng(derive_seed(seed, "permute", i));
    rng.shuffle(out[i].symbols);
  }
  return out;
}

/// Shuffles symbols across the whole corpus while keeping sequence lengths
/// (corpus-level null, available behind a flag).
inline std::vector<SymbolSequence> permute_across_corpus(const std::vector<SymbolSequence>& seqs,
                                                         std::uint64_t seed) {
  std::vector<SymbolSequence> out = seqs;
  std::vector<int> pool;
  for (const auto& s : out) pool.insert(pool.end(), s.symbols.begin(), s.symbols.end());
  Rng rng(derive_seed(seed, "permute-corpus"));
  rng.shuffle(pool);
  std::size_t at = 0;
  for (auto& s : out) {
    for (auto& sym : s.symbols) sym = pool[at++];
  }
  return out;
}

inline std::vector<std::vector<double>> featurize_corpus(const std::vector<SymbolSequence>& seqs,
                                                         const ContextModel& model) {
  std::vector<std::vector<double>> x;
  x.reserve(seqs.size());
  for (const auto& s : seqs) {
    const auto fv = features(s, model).as_array();
    x.emplace_back(fv.begin(), fv.end());
  }
  return x;
}

/// HP1: retrains and re-evaluates on order-permuted sequences with identical
/// folds and seeds; the context model and all 18 features are recomputed from
/// the permuted corpus.
inline PermutationOutcome permutation_experiment(const std::vector<SymbolSequence>& seqs,
                                                 const ForestParams& params, std::uint64_t seed,
                                                 double alpha = 0.5, int k_folds = 5,
                                                 bool corpus_level = false) {
  if (seqs.empty()) throw std::invalid_argument("permutation_experiment: empty corpus");
  std::vector<Context> y;
  y.reserve(seqs.size());
  for (const auto& s : seqs) y.push_back(s.context);

  const ContextModel model_orig = build_context_model(seqs, alpha);
  const auto x_orig = featurize_corpus(seqs, model_orig);
  const std::uint64_t cv_seed = derive_seed(seed, "hp1-cv");

  const auto permuted = corpus_level ? permute_across_corpus(seqs, seed) : permute_within_sequences(seqs, seed);
  const ContextModel model_perm = build_context_model(permuted, alpha);
  const auto x_perm = featurize_corpus(permuted, model_perm);

  PermutationOutcome out;
  out.report_original = cross_validate(x_orig, y, k_folds, cv_seed, params);
  out.report_permuted = cross_validate(x_perm, y, k_folds, cv_seed, params);
  out.f1_original = out.report_original.macro_f1;
  out.f1_permuted = out.report_permuted.macro_f1;
  out.delta = out.f1_original - out.f1_permuted;
  return out;
}

}  // namespace vocseq
