#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "vocseq/label.hpp"
#include "vocseq/rng.hpp"

using namespace vocseq;

namespace {

MfccMatrix from_series(const std::vector<double>& v) {
  MfccMatrix m;
  m.coeffs.resize(1, v.size());
  for (std::size_t i = 0; i < v.size(); ++i) m.coeffs(0, i) = v[i];
  return m;
}

MfccMatrix random_matrix(Rng& rng, int rows, int cols) {
  MfccMatrix m;
  m.coeffs.resize(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m.coeffs(i, j) = rng.normal();
  }
  return m;
}

// exhaustive warping-path enumeration; independent of the DP implementation
double dtw_exhaustive(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const int n = static_cast<int>(a.cols()), m = static_cast<int>(b.cols());
  double best = std::numeric_limits<double>::infinity();
  const std::function<void(int, int, double)> walk = [&](int i, int j, double cost) {
    cost += (a.col(i) - b.col(j)).norm();
    if (i == n - 1 && j == m - 1) {
      best = std::min(best, cost);
      return;
    }
    if (i + 1 < n && j + 1 < m) walk(i + 1, j + 1, cost);
    if (i + 1 < n) walk(i + 1, j, cost);
    if (j + 1 < m) walk(i, j + 1, cost);
  };
  walk(0, 0, 0.0);
  return best;
}

DistanceMatrix make_dm(const std::vector<std::vector<double>>& rows) {
  DistanceMatrix d;
  const int n = static_cast<int>(rows.size());
  d.values.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) d.values(i, j) = rows[i][j];
  }
  return d;
}

int n_clusters(const std::vector<int>& labels) {
  std::set<int> s(labels.begin(), labels.end());
  return static_cast<int>(s.size());
}

}  // namespace

TEST_CASE("dtw of identical matrices is zero") {
  Rng rng(1);
  const auto m = random_matrix(rng, 5, 9);
  REQUIRE(dtw_distance(m.coeffs, m.coeffs) == 0.0);
}

TEST_CASE("dtw on the 1-D example series") {
  REQUIRE(dtw_distance(from_series({1, 2, 3}).coeffs, from_series({1, 3}).coeffs) == Catch::Approx(1.0));
}

TEST_CASE("dtw is symmetric") {
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_matrix(rng, 3, 2 + static_cast<int>(rng.index(6)));
    const auto b = random_matrix(rng, 3, 2 + static_cast<int>(rng.index(6)));
    REQUIRE(dtw_distance(a.coeffs, b.coeffs) == Catch::Approx(dtw_distance(b.coeffs, a.coeffs)).margin(1e-12));
  }
}

TEST_CASE("dtw equals exhaustive path enumeration for short series") {
  Rng rng(3);
  for (int trial = 0; trial < 25; ++trial) {
    const auto a = random_matrix(rng, 2, 2 + static_cast<int>(rng.index(7)));
    const auto b = random_matrix(rng, 2, 2 + static_cast<int>(rng.index(7)));
    REQUIRE(dtw_distance(a.coeffs, b.coeffs) ==
            Catch::Approx(dtw_exhaustive(a.coeffs, b.coeffs)).margin(1e-9));
  }
}

TEST_CASE("dtw band constrains alignment but stays feasible") {
  const auto a = from_series({0, 0, 0, 0, 5});
  const auto b = from_series({0, 5});
  const double unbanded = dtw_distance(a.coeffs, b.coeffs);
  const double banded = dtw_distance(a.coeffs, b.coeffs, 1);  // clamped to |n-m| = 3
  REQUIRE(std::isfinite(banded));
  REQUIRE(banded >= unbanded);
  REQUIRE_THROWS_AS(dtw_distance(Eigen::MatrixXd(1, 0), b.coeffs), std::invalid_argument);
}

TEST_CASE("pairwise dtw matches individual calls and is worker-invariant") {
  Rng rng(4);
  std::vector<MfccMatrix> items;
  for (int i = 0; i < 7; ++i) items.push_back(random_matrix(rng, 4, 3 + static_cast<int>(rng.index(8))));
  const auto d1 = pairwise_dtw(items, std::nullopt, 1);
  for (int i = 0; i < 7; ++i) {
    REQUIRE(d1.values(i, i) == 0.0);
    for (int j = i + 1; j < 7; ++j) {
      REQUIRE(d1.values(i, j) == dtw_distance(items[i].coeffs, items[j].coeffs));
      REQUIRE(d1.values(i, j) == d1.values(j, i));
    }
  }
  const auto d4 = pairwise_dtw(items, std::nullopt, 4);
  REQUIRE(d1.values == d4.values);  // bit-exact across worker counts

  std::vector<MfccMatrix> zeros(3, from_series({1, 2, 3}));
  const auto dz = pairwise_dtw(zeros);
  REQUIRE(dz.values.maxCoeff() == 0.0);
}

// ---------------------------------------------------------------------------
// Agglomerative clustering
// ---------------------------------------------------------------------------

TEST_CASE("two tight groups separate at a low quantile") {
  const auto d = make_dm({{0, 0, 9, 9}, {0, 0, 9, 9}, {9, 9, 0, 0}, {9, 9, 0, 0}});
  const auto labels = agglomerative_cluster(d, 0.05);
  REQUIRE(n_clusters(labels) == 2);
  REQUIRE(labels[0] == labels[1]);
  REQUIRE(labels[2] == labels[3]);
  REQUIRE(labels[0] != labels[2]);
}

TEST_CASE("agglomerative follows the hand-traced average-linkage dendrogram") {
  // merge order: (0,1)@1, then {0,1} with 2 @ (3+5)/2 = 4, then with 3 @ 10
  const auto d = make_dm({{0, 1, 3, 10}, {1, 0, 5, 10}, {3, 5, 0, 10}, {10, 10, 10, 0}});
  // off-diagonals sorted: 1,3,5,10,10,10; q=0.5 -> threshold (5+10)/2 = 7.5:
  // merges at 1 and 4 happen, the merge at 10 does not
  const auto labels = agglomerative_cluster(d, 0.5);
  REQUIRE(n_clusters(labels) == 2);
  REQUIRE(labels[0] == labels[1]);
  REQUIRE(labels[1] == labels[2]);
  REQUIRE(labels[3] != labels[0]);
  // q=0.2 -> threshold = 3: only the merge at 1 happens ({0,1}+2 costs 4 > 3)
  const auto labels2 = agglomerative_cluster(d, 0.2);
  REQUIRE(n_clusters(labels2) == 3);
  REQUIRE(labels2[0] == labels2[1]);
  REQUIRE(labels2[2] != labels2[0]);
  REQUIRE(labels2[3] != labels2[2]);
}

TEST_CASE("quantile 1 collapses everything into one cluster") {
  Rng rng(6);
  std::vector<std::vector<double>> rows(6, std::vector<double>(6, 0.0));
  for (int i = 0; i < 6; ++i) {
    for (int j = i + 1; j < 6; ++j) rows[i][j] = rows[j][i] = 1.0 + rng.uniform();
  }
  const auto labels = agglomerative_cluster(make_dm(rows), 1.0);
  REQUIRE(n_clusters(labels) == 1);
}

TEST_CASE("degenerate all-zero matrix is a single cluster") {
  const auto labels = agglomerative_cluster(make_dm({{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}), 0.05);
  REQUIRE(n_clusters(labels) == 1);
}

TEST_CASE("clustering is invariant under input permutation (ARI == 1)") {
  Rng rng(7);
  const int n = 24;
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const bool same_group = (i / 8) == (j / 8);
      rows[i][j] = rows[j][i] = same_group ? rng.uniform() : 5.0 + rng.uniform();
    }
  }
  const auto labels = agglomerative_cluster(make_dm(rows), 0.3);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  std::vector<std::vector<double>> shuffled(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) shuffled[i][j] = rows[perm[i]][perm[j]];
  }
  const auto labels_shuffled = agglomerative_cluster(make_dm(shuffled), 0.3);
  std::vector<int> back(n);
  for (int i = 0; i < n; ++i) back[perm[i]] = labels_shuffled[i];
  REQUIRE(ari(labels, back) == Catch::Approx(1.0));
}

// ---------------------------------------------------------------------------
// PCA
// ---------------------------------------------------------------------------

namespace {

// closed-form eigenvalues of a symmetric 3x3 matrix (trigonometric method)
std::vector<double> eig3_closed_form(const Eigen::Matrix3d& a) {
  const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
  if (p1 == 0.0) return {a(0, 0), a(1, 1), a(2, 2)};
  const double q = a.trace() / 3.0;
  const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                    (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
  const double p = std::sqrt(p2 / 6.0);
  Eigen::Matrix3d b = (a - q * Eigen::Matrix3d::Identity()) / p;
  const double r = std::clamp(b.determinant() / 2.0, -1.0, 1.0);
  const double phi = std::acos(r) / 3.0;
  const double e1 = q + 2.0 * p * std::cos(phi);
  const double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  return {e1, 3.0 * q - e1 - e3, e3};  // descending
}

}  // namespace

TEST_CASE("pca on collinear points explains all variance with one component") {
  Eigen::MatrixXd x(5, 3);
  for (int i = 0; i < 5; ++i) {
    x(i, 0) = i;
    x(i, 1) = 2.0 * i;
    x(i, 2) = -static_cast<double>(i);
  }
  const auto res = pca_project(x, 3);
  const double total = res.explained_variance[0] + res.explained_variance[1] + res.explained_variance[2];
  REQUIRE(res.explained_variance[0] == Catch::Approx(total).epsilon(1e-9));
}

TEST_CASE("pca with k = d reconstructs the centered data") {
  Rng rng(8);
  Eigen::MatrixXd x(7, 4);
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
  }
  const auto res = pca_project(x, 4);
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd back = res.projected * res.components;
  REQUIRE((back - centered).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("pca explained variances match the closed-form covariance eigenvalues") {
  Rng rng(9);
  Eigen::MatrixXd x(5, 3);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = rng.normal() * (j + 1);
  }
  const auto res = pca_project(x, 3);
  const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  const Eigen::Matrix3d cov = centered.transpose() * centered / 4.0;
  const auto expected = eig3_closed_form(cov);
  for (int c = 0; c < 3; ++c) {
    REQUIRE(res.explained_variance[c] == Catch::Approx(expected[c]).margin(1e-9));
  }
  // sign convention: largest-magnitude loading positive
  for (int c = 0; c < 3; ++c) {
    Eigen::Index imax;
    res.components.row(c).cwiseAbs().maxCoeff(&imax);
    REQUIRE(res.components(c, imax) > 0.0);
  }
}

TEST_CASE("pca rejects out-of-range k") {
  Eigen::MatrixXd x(3, 2);
  x.setRandom();
  REQUIRE_THROWS_AS(pca_project(x, 0), std::invalid_argument);
  REQUIRE_THROWS_AS(pca_project(x, 3), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Silhouette / ARI / NMI
// ---------------------------------------------------------------------------

TEST_CASE("silhouette of two tight, far clusters is high") {
  Rng rng(10);
  const int n = 20;
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = i < 10 ? 0 : 1;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      rows[i][j] = rows[j][i] = labels[i] == labels[j] ? 0.05 * rng.uniform() : 10.0 + rng.uniform();
    }
  }
  REQUIRE(silhouette(make_dm(rows), labels) >= 0.9);
}

TEST_CASE("silhouette matches the definitional hand computation") {
  // items 0,1 in one cluster; 2,3,4 in the other:
  // s(0): a=1, b=(4+5+6)/3=5        -> 0.8
  // s(1): a=1, b=4                  -> 0.75
  // s(2): a=2, b=4                  -> 0.5
  // s(3): a=2, b=(5+4)/2=4.5        -> 2.5/4.5
  // s(4): a=2, b=(6+4)/2=5          -> 0.6
  const auto d = make_dm({{0, 1, 4, 5, 6},
                          {1, 0, 4, 4, 4},
                          {4, 4, 0, 2, 2},
                          {5, 4, 2, 0, 2},
                          {6, 4, 2, 2, 0}});
  const std::vector<int> labels = {0, 0, 1, 1, 1};
  const double expected = (0.8 + 0.75 + 0.5 + 2.5 / 4.5 + 0.6) / 5.0;
  REQUIRE(silhouette(d, labels) == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("silhouette of random labels on near-uniform distances is near zero") {
  Rng rng(11);
  const int n = 200;
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) rows[i][j] = rows[j][i] = 1.0 + 0.01 * rng.uniform();
  }
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.index(4));
  REQUIRE(std::abs(silhouette(make_dm(rows), labels)) < 0.1);
}

TEST_CASE("silhouette rejects a single cluster") {
  const auto d = make_dm({{0, 1}, {1, 0}});
  REQUIRE_THROWS_AS(silhouette(d, {0, 0}), std::invalid_argument);
}

namespace {

// pair-counting oracle via the closed form over the four pair categories
double ari_pair_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  double s11 = 0, s10 = 0, s01 = 0, s00 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      if (sa && sb) {
        s11++;
      } else if (sa) {
        s10++;
      } else if (sb) {
        s01++;
      } else {
        s00++;
      }
    }
  }
  const double denom = (s11 + s10) * (s10 + s00) + (s11 + s01) * (s01 + s00);
  if (denom == 0.0) return 1.0;
  return 2.0 * (s11 * s00 - s10 * s01) / denom;
}

}  // namespace

TEST_CASE("ari and nmi on identical labelings") {
  const std::vector<int> a = {0, 0, 1, 2, 2, 1};
  REQUIRE(ari(a, a) == Catch::Approx(1.0));
  REQUIRE(nmi(a, a) == Catch::Approx(1.0));
}

TEST_CASE("ari of a constant labeling against a non-trivial one is zero") {
  const std::vector<int> constant = {5, 5, 5, 5, 5, 5};
  const std::vector<int> other = {0, 0, 0, 1, 1, 1};
  REQUIRE(ari(constant, other) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE(nmi(constant, other) == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("ari matches the contingency oracle on the 6-item case and random labelings") {
  const std::vector<int> a = {0, 0, 1, 1, 2, 2};
  const std::vector<int> b = {0, 0, 0, 1, 1, 1};
  REQUIRE(ari(a, b) == Catch::Approx(24.0 / 99.0).margin(1e-12));
  REQUIRE(ari(a, b) == Catch::Approx(ari_pair_oracle(a, b)).margin(1e-12));

  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> x(30), y(30);
    for (int i = 0; i < 30; ++i) {
      x[i] = static_cast<int>(rng.index(4));
      y[i] = static_cast<int>(rng.index(3));
    }
    REQUIRE(ari(x, y) == Catch::Approx(ari_pair_oracle(x, y)).margin(1e-12));
  }
}

TEST_CASE("nmi stays in [0,1] and is renaming-invariant; mismatch errors") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> x(40), y(40);
    for (int i = 0; i < 40; ++i) {
      x[i] = static_cast<int>(rng.index(5));
      y[i] = static_cast<int>(rng.index(4));
    }
    const double v = nmi(x, y);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    std::vector<int> renamed(x);
    for (int& l : renamed) l = 10 - l;
    REQUIRE(nmi(renamed, y) == Catch::Approx(v).margin(1e-12));
    REQUIRE(ari(renamed, y) == Catch::Approx(ari(x, y)).margin(1e-12));
  }
  REQUIRE_THROWS_AS(ari({0, 1}, {0, 1, 2}), std::invalid_argument);
  REQUIRE_THROWS_AS(nmi({0, 1}, {0, 1, 2}), std::invalid_argument);
}

TEST_CASE("silhouette is invariant under cluster-label renaming") {
  const auto d = make_dm({{0, 1, 4, 5, 6},
                          {1, 0, 4, 4, 4},
                          {4, 4, 0, 2, 2},
                          {5, 4, 2, 0, 2},
                          {6, 4, 2, 2, 0}});
  const double s1 = silhouette(d, {0, 0, 1, 1, 1});
  const double s2 = silhouette(d, {7, 7, 3, 3, 3});
  REQUIRE(s1 == Catch::Approx(s2).margin(1e-15));
}
