#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "vocseq/audio.hpp"
#include "vocseq/mathutil.hpp"

namespace vocseq {

struct DistanceMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> item_ids;
};

inline void validate_distance_matrix(const DistanceMatrix& d) {
  const Eigen::Index n = d.values.rows();
  if (d.values.cols() != n) throw std::invalid_argument("DistanceMatrix: not square");
  if (!d.item_ids.empty() && static_cast<Eigen::Index>(d.item_ids.size()) != n) {
    throw std::invalid_argument("DistanceMatrix: id count mismatch");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d.values(i, i) != 0.0) throw std::invalid_argument("DistanceMatrix: nonzero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = d.values(i, j);
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("DistanceMatrix: invalid entry");
      if (v != d.values(j, i)) throw std::invalid_argument("DistanceMatrix: not symmetric");
    }
  }
}

// ---------------------------------------------------------------------------
// Dynamic time warping
// ---------------------------------------------------------------------------

/// Minimal cumulative alignment cost between two feature sequences (columns
/// are frames). Local cost is the Euclidean distance between frames; steps
/// are {match, insert, delete}. An optional Sakoe-Chiba band constrains
/// |i - j| <= max(band, |n - m|) so the end corner stays reachable.
inline double dtw_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           std::optional<int> band = std::nullopt) {
  const int n = static_cast<int>(a.cols());
  const int m = static_cast<int>(b.cols());
  if (n == 0 || m == 0) throw std::invalid_argument("dtw_distance: empty input");
  if (a.rows() != b.rows()) throw std::invalid_argument("dtw_distance: feature dimensions differ");
  int bw = band ? std::max(*band, std::abs(n - m)) : std::max(n, m);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (int i = 1; i <= n; ++i) {
    std::fill(cur.begin(), cur.end(), inf);
    const int j_lo = std::max(1, i - bw);
    const int j_hi = std::min(m, i + bw);
    for (int j = j_lo; j <= j_hi; ++j) {
      const double cost = (a.col(i - 1) - b.col(j - 1)).norm();
      const double best = std::min({prev[j - 1], prev[j], cur[j - 1]});
      cur[j] = cost + best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

/// Full symmetric DTW distance matrix. Work is split over pair indices when
/// n_workers > 1; every pair is pure, so the result is identical for any
/// worker count.
inline DistanceMatrix pairwise_dtw(const std::vector<MfccMatrix>& items,
                                   std::optional<int> band = std::nullopt, int n_workers = 1,
                                   std::vector<std::string> item_ids = {}) {
  const int n = static_cast<int>(items.size());
  if (n < 2) throw std::invalid_argument("pairwise_dtw: need at least 2 items");
  DistanceMatrix out;
  out.values = Eigen::MatrixXd::Zero(n, n);
  out.item_ids = std::move(item_ids);

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  const auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto [i, j] = pairs[p];
      double d;
      try {
        d = dtw_distance(items[i].coeffs, items[j].coeffs, band);
      } catch (const std::exception& e) {
        throw std::invalid_argument("pairwise_dtw: items (" + std::to_string(i) + ", " + std::to_string(j) +
                                    "): " + e.what());
      }
      out.values(i, j) = d;
      out.values(j, i) = d;
    }
  };
  if (n_workers <= 1) {
    run(0, pairs.size());
  } else {
    std::vector<std::thread> threads;
    const std::size_t chunk = (pairs.size() + n_workers - 1) / n_workers;
    std::vector<std::exception_ptr> errors(n_workers);
    for (int w = 0; w < n_workers; ++w) {
      const std::size_t begin = std::min(pairs.size(), w * chunk);
      const std::size_t end = std::min(pairs.size(), begin + chunk);
      threads.emplace_back([&, w, begin, end] {
        try {
          run(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Agglomerative clustering (average linkage) with a quantile threshold cut
// ---------------------------------------------------------------------------

enum class Linkage { average, single, complete };

namespace detail {

// greedy hierarchical merging with Lance-Williams updates; merges while the
// minimum linkage distance is <= threshold (inclusive)
inline std::vector<int> agglomerate(Eigen::MatrixXd d, double threshold, Linkage linkage) {
  const int n = static_cast<int>(d.rows());
  std::vector<bool> active(n, true);
  std::vector<int> size(n, 1);
  std::vector<int> member(n);  // item -> current cluster root
  for (int i = 0; i < n; ++i) member[i] = i;

  for (int merges = 0; merges < n - 1; ++merges) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (int j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        if (d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    if (bi < 0 || best > threshold) break;
    // merge bj into bi
    for (int t = 0; t < n; ++t) {
      if (!active[t] || t == bi || t == bj) continue;
      double merged;
      switch (linkage) {
        case Linkage::average:
          merged = (size[bi] * d(bi, t) + size[bj] * d(bj, t)) / (size[bi] + size[bj]);
          break;
        case Linkage::single:
          merged = std::min(d(bi, t), d(bj, t));
          break;
        case Linkage::complete:
          merged = std::max(d(bi, t), d(bj, t));
          break;
        default:
          throw std::logic_error("agglomerate: bad linkage");
      }
      d(bi, t) = merged;
      d(t, bi) = merged;
    }
    active[bj] = false;
    size[bi] += size[bj];
    for (int t = 0; t < n; ++t) {
      if (member[t] == bj) member[t] = bi;
    }
  }
  // dense labels in order of first appearance
  std::vector<int> labels(n, -1);
  std::map<int, int> remap;
  for (int i = 0; i < n; ++i) {
    auto [it, inserted] = remap.emplace(member[i], static_cast<int>(remap.size()));
    labels[i] = it->second;
  }
  return labels;
}

}  // namespace detail

/// Average-linkage hierarchical clustering of a precomputed distance matrix,
/// cut at the q-quantile of the off-diagonal distances. Labels are dense from
/// 0 in order of first appearance.
inline std::vector<int> agglomerative_cluster(const DistanceMatrix& d, double q,
                                              Linkage linkage = Linkage::average) {
  if (!(q > 0.0 && q < 1.0) && q != 1.0) throw std::invalid_argument("agglomerative_cluster: q must be in (0, 1]");
  validate_distance_matrix(d);
  const int n = static_cast<int>(d.values.rows());
  if (n < 1) throw std::invalid_argument("agglomerative_cluster: empty matrix");
  std::vector<double> offdiag;
  offdiag.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) offdiag.push_back(d.values(i, j));
  }
  if (offdiag.empty()) return {0};
  const double threshold = quantile(offdiag, q);
  return detail::agglomerate(d.values, threshold, linkage);
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

struct PcaResult {
  Eigen::MatrixXd projected;           // n x k
  Eigen::MatrixXd components;          // k x d, rows are principal directions
  std::vector<double> explained_variance;  // descending eigenvalues of the covariance
};

/// Mean-centered projection onto the top-k principal directions. Components
/// are ordered by descending eigenvalue; each is sign-fixed so its
/// largest-magnitude loading is positive.
inline PcaResult pca_project(const Eigen::MatrixXd& x, int k) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (k < 1 || k > std::min(n, d)) throw std::invalid_argument("pca_project: k out of range");
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n > 1 ? n - 1 : 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw std::runtime_error("pca_project: eigendecomposition failed");

  PcaResult out;
  out.components.resize(k, d);
  out.explained_variance.resize(k);
  for (int c = 0; c < k; ++c) {
    const Eigen::Index src = d - 1 - c;  // eigenvalues come back ascending
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    out.components.row(c) = v.transpose();
    out.explained_variance[c] = std::max(0.0, eig.eigenvalues()(src));
  }
  out.projected = centered * out.components.transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Cluster quality and agreement metrics
// ---------------------------------------------------------------------------

/// Mean silhouette over items, using precomputed distances. Items in
/// singleton clusters score 0 by convention.
inline double silhouette(const DistanceMatrix& d, const std::vector<int>& labels) {
  validate_distance_matrix(d);
  const int n = static_cast<int>(d.values.rows());
  if (static_cast<int>(labels.size()) != n) throw std::invalid_argument("silhouette: label count mismatch");
  std::map<int, std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) clusters[labels[i]].push_back(i);
  if (clusters.size() < 2) throw std::invalid_argument("silhouette: undefined for a single cluster");

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& own = clusters.at(labels[i]);
    if (own.size() == 1) continue;  // s(i) = 0
    double a = 0.0;
    for (int j : own) {
      if (j != i) a += d.values(i, j);
    }
    a /= static_cast<double>(own.size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, members] : clusters) {
      if (label == labels[i]) continue;
      double m = 0.0;
      for (int j : members) m += d.values(i, j);
      b = std::min(b, m / static_cast<double>(members.size()));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / n;
}

namespace detail {

inline std::map<std::pair<int, int>, std::int64_t> contingency(const std::vector<int>& a,
                                                               const std::vector<int>& b) {
  std::map<std::pair<int, int>, std::int64_t> table;
  for (std::size_t i = 0; i < a.size(); ++i) table[{a[i], b[i]}]++;
  return table;
}

inline double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace detail

/// Adjusted Rand index: pair counting with chance correction. Two identical
/// trivial partitions (both single-cluster) score 1.
inline double ari(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("ari: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("ari: need at least 2 items");
  const auto table = detail::contingency(a, b);
  std::map<int, std::int64_t> row_sums, col_sums;
  double sum_table = 0.0;
  for (const auto& [key, count] : table) {
    row_sums[key.first] += count;
    col_sums[key.second] += count;
    sum_table += detail::choose2(static_cast<double>(count));
  }
  double sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [_, c] : row_sums) sum_rows += detail::choose2(static_cast<double>(c));
  for (const auto& [_, c] : col_sums) sum_cols += detail::choose2(static_cast<double>(c));
  const double total_pairs = detail::choose2(static_cast<double>(a.size()));
  const double expected = sum_rows * sum_cols / total_pairs;
  const double max_index = (sum_rows + sum_cols) / 2.0;
  const double denom = max_index - expected;
  if (denom == 0.0) return 1.0;  // both partitions trivial in the same way
  return (sum_table - expected) / denom;
}

/// Normalized mutual information with arithmetic-mean normalization,
/// NMI = I(A;B) / ((H(A) + H(B)) / 2); two zero-entropy labelings score 1.
inline double nmi(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("nmi: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("nmi: need at least 2 items");
  const double n = static_cast<double>(a.size());
  const auto table = detail::contingency(a, b);
  std::map<int, std::int64_t> row_sums, col_sums;
  for (const auto& [key, count] : table) {
    row_sums[key.first] += count;
    col_sums[key.second] += count;
  }
  const auto entropy = [&](const std::map<int, std::int64_t>& sums) {
    double h = 0.0;
    for (const auto& [_, c] : sums) {
      const double p = static_cast<double>(c) / n;
      if (p > 0.0) h -= p * std::log(p);
    }
    return h;
  };
  const double ha = entropy(row_sums), hb = entropy(col_sums);
  if (ha == 0.0 && hb == 0.0) return 1.0;
  double mi = 0.0;
  for (const auto& [key, count] : table) {
    const double pij = static_cast<double>(count) / n;
    const double pi = static_cast<double>(row_sums.at(key.first)) / n;
    const double pj = static_cast<double>(col_sums.at(key.second)) / n;
    if (pij > 0.0) mi += pij * std::log(pij / (pi * pj));
  }
  const double denom = (ha + hb) / 2.0;
  if (denom == 0.0) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

}  // namespace vocseq
