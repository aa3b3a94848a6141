#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vocseq/mathutil.hpp"

namespace vocseq {

enum class FitFamily { exponential, powerlaw, truncated_powerlaw };

inline std::string_view to_string(FitFamily f) {
  switch (f) {
    case FitFamily::exponential: return "exponential";
    case FitFamily::powerlaw: return "powerlaw";
    case FitFamily::truncated_powerlaw: return "truncated_powerlaw";
  }
  return "?";
}

/// Discrete MLE fit of a tail model to integer data (x >= xmin).
struct FitResult {
  FitFamily family = FitFamily::powerlaw;
  double alpha = std::numeric_limits<double>::quiet_NaN();   // powerlaw exponent
  double lambda = std::numeric_limits<double>::quiet_NaN();  // exponential rate
  std::int64_t xmin = 1;
  double loglik = 0.0;
  std::int64_t n_tail = 0;
};

struct LrtResult {
  double r = 0.0;        // normalized log-likelihood ratio (Vuong)
  double p_value = 1.0;  // two-sided
  std::optional<FitFamily> preferred;
};

// ---------------------------------------------------------------------------
// Normalizing constants. Everything is discrete: p(x) for integer x >= xmin.
// ---------------------------------------------------------------------------

/// Hurwitz zeta sum_{k>=q} k^-s for s > 1, direct summation plus an
/// Euler-Maclaurin tail once the first terms are accumulated.
inline double hurwitz_zeta(double s, std::int64_t q) {
  if (s <= 1.0) throw std::invalid_argument("hurwitz_zeta: requires s > 1");
  if (q < 1) throw std::invalid_argument("hurwitz_zeta: requires q >= 1");
  const std::int64_t terms = 2000;
  double sum = 0.0;
  for (std::int64_t k = q; k < q + terms; ++k) sum += std::pow(static_cast<double>(k), -s);
  const double m = static_cast<double>(q + terms);
  // sum_{k>=M} k^-s  ~  M^(1-s)/(s-1) + M^-s/2 + s*M^-(s+1)/12
  sum += std::pow(m, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(m, -s) + s * std::pow(m, -s - 1.0) / 12.0;
  return sum;
}

namespace detail {

// sum_{k>=q} k^-alpha * exp(-lambda k): direct head, then Euler-Maclaurin with
// the tail integral evaluated by Simpson under x = M*exp(u).
inline double trunc_powerlaw_norm(double alpha, double lambda, std::int64_t q) {
  if (lambda < 0.0) throw std::invalid_argument("trunc_powerlaw_norm: lambda must be >= 0");
  if (lambda == 0.0) {
    if (alpha <= 1.0) return std::numeric_limits<double>::infinity();
    return hurwitz_zeta(alpha, q);
  }
  const auto f = [&](double x) { return std::pow(x, -alpha) * std::exp(-lambda * x); };
  const std::int64_t head = 1000;
  double sum = 0.0;
  for (std::int64_t k = q; k < q + head; ++k) {
    const double term = f(static_cast<double>(k));
    sum += term;
    if (term < sum * 1e-18) return sum;  // tail numerically irrelevant
  }
  const double m = static_cast<double>(q + head);
  // integral bound in u: exp factor dies once lambda*M*e^u > ~46; the power
  // factor alone dies at u ~ 42/(alpha-1) when alpha > 1
  double u_max = std::log(46.0 / (lambda * m) + 1.0) + 2.0;
  if (alpha > 1.0) u_max = std::min(u_max, 42.0 / (alpha - 1.0) + 2.0);
  const int steps = 1024;  // composite Simpson, even count
  const double hstep = u_max / steps;
  double integral = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double u = i * hstep;
    const double g = std::exp((1.0 - alpha) * u - lambda * m * std::exp(u));
    const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    integral += w * g;
  }
  integral *= hstep / 3.0 * std::pow(m, 1.0 - alpha);
  const double fm = f(m);
  const double fpm = -(alpha / m + lambda) * fm;
  return sum + integral + 0.5 * fm - fpm / 12.0;
}

/// Golden-section maximization of a unimodal function on [lo, hi].
inline double golden_max(const std::function<double(double)>& fn, double lo, double hi, double tol = 1e-10) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = fn(c), fd = fn(d);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = fn(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = fn(d);
    }
  }
  return (a + b) / 2.0;
}

inline std::vector<std::int64_t> tail_data(const std::vector<std::int64_t>& data, std::int64_t xmin) {
  std::vector<std::int64_t> tail;
  for (auto x : data) {
    if (x >= xmin) tail.push_back(x);
  }
  return tail;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Pointwise log-pmfs (shared by the fitters and the likelihood-ratio test).
// ---------------------------------------------------------------------------

inline double log_pmf(const FitResult& fit, std::int64_t x) {
  if (x < fit.xmin) throw std::invalid_argument("log_pmf: x below xmin");
  const double xd = static_cast<double>(x);
  switch (fit.family) {
    case FitFamily::powerlaw:
      return -fit.alpha * std::log(xd) - std::log(hurwitz_zeta(fit.alpha, fit.xmin));
    case FitFamily::exponential: {
      // geometric tail: p(x) = (1 - e^-lambda) e^(-lambda (x - xmin))
      return std::log1p(-std::exp(-fit.lambda)) - fit.lambda * static_cast<double>(x - fit.xmin);
    }
    case FitFamily::truncated_powerlaw:
      return -fit.alpha * std::log(xd) - fit.lambda * xd -
             std::log(detail::trunc_powerlaw_norm(fit.alpha, fit.lambda, fit.xmin));
  }
  throw std::logic_error("log_pmf: unknown family");
}

inline double total_loglik(const FitResult& fit, const std::vector<std::int64_t>& data) {
  double ll = 0.0;
  for (auto x : data) {
    if (x >= fit.xmin) ll += log_pmf(fit, x);
  }
  return ll;
}

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

/// Continuous-approximation (Hill-style) estimate used to seed the discrete MLE.
inline double powerlaw_alpha_approx(const std::vector<std::int64_t>& data, std::int64_t xmin) {
  double s = 0.0;
  std::int64_t n = 0;
  for (auto x : data) {
    if (x >= xmin) {
      s += std::log(static_cast<double>(x) / (static_cast<double>(xmin) - 0.5));
      n++;
    }
  }
  if (n == 0 || s == 0.0) throw std::invalid_argument("powerlaw_alpha_approx: degenerate tail");
  return 1.0 + static_cast<double>(n) / s;
}

inline FitResult fit_powerlaw(const std::vector<std::int64_t>& data, std::int64_t xmin = 1) {
  const auto tail = detail::tail_data(data, xmin);
  if (tail.size() < 10) throw std::invalid_argument("fit_powerlaw: needs >= 10 tail observations");
  double sum_log = 0.0;
  bool all_equal = true;
  for (auto x : tail) {
    sum_log += std::log(static_cast<double>(x));
    if (x != tail.front()) all_equal = false;
  }
  if (all_equal) throw std::invalid_argument("fit_powerlaw: degenerate tail (all values equal)");
  const double n = static_cast<double>(tail.size());
  const auto ll = [&](double alpha) { return -n * std::log(hurwitz_zeta(alpha, xmin)) - alpha * sum_log; };
  // concave in alpha; bracket around the continuous-approximation start
  const double a0 = std::clamp(powerlaw_alpha_approx(tail, xmin), 1.02, 24.0);
  const double lo = std::max(1.01, a0 - 2.0);
  const double hi = std::min(25.0, a0 + 2.0);
  FitResult fit;
  fit.family = FitFamily::powerlaw;
  fit.xmin = xmin;
  fit.n_tail = static_cast<std::int64_t>(tail.size());
  fit.alpha = detail::golden_max(ll, lo, hi);
  fit.loglik = ll(fit.alpha);
  return fit;
}

inline FitResult fit_exponential(const std::vector<std::int64_t>& data, std::int64_t xmin = 1) {
  const auto tail = detail::tail_data(data, xmin);
  if (tail.size() < 2) throw std::invalid_argument("fit_exponential: needs >= 2 tail observations");
  double excess = 0.0;
  for (auto x : tail) excess += static_cast<double>(x - xmin);
  excess /= static_cast<double>(tail.size());
  if (excess <= 0.0) throw std::invalid_argument("fit_exponential: degenerate tail (all values at xmin)");
  FitResult fit;
  fit.family = FitFamily::exponential;
  fit.xmin = xmin;
  fit.n_tail = static_cast<std::int64_t>(tail.size());
  fit.lambda = std::log1p(1.0 / excess);  // geometric MLE
  fit.loglik = total_loglik(fit, tail);
  return fit;
}

/// Two-parameter discrete MLE of p(x) ~ x^-alpha exp(-lambda x), alpha >= 0.
/// Coordinate descent with golden-section line searches; seeded from the pure
/// power-law fit so the nested model never scores below it.
inline FitResult fit_truncated_powerlaw(const std::vector<std::int64_t>& data, std::int64_t xmin = 1) {
  const auto tail = detail::tail_data(data, xmin);
  if (tail.size() < 10) throw std::invalid_argument("fit_truncated_powerlaw: needs >= 10 tail observations");
  double sum_log = 0.0, sum_x = 0.0;
  bool all_equal = true;
  for (auto x : tail) {
    sum_log += std::log(static_cast<double>(x));
    sum_x += static_cast<double>(x);
    if (x != tail.front()) all_equal = false;
  }
  if (all_equal) throw std::invalid_argument("fit_truncated_powerlaw: degenerate tail");
  const double n = static_cast<double>(tail.size());
  const auto ll = [&](double alpha, double lambda) {
    const double z = detail::trunc_powerlaw_norm(alpha, lambda, xmin);
    if (!std::isfinite(z) || z <= 0.0) return -std::numeric_limits<double>::infinity();
    return -n * std::log(z) - alpha * sum_log - lambda * sum_x;
  };

  double alpha = 1.05;
  try {
    alpha = std::clamp(powerlaw_alpha_approx(tail, xmin), 0.0, 24.0);
  } catch (const std::invalid_argument&) {
  }
  double lambda = 0.0;
  const double alpha_lo = 0.0, alpha_hi = 25.0;
  const double lambda_lo = 0.0, lambda_hi = 20.0;
  double best = ll(alpha, lambda);
  if (!std::isfinite(best)) {
    lambda = 1e-3;
    best = ll(alpha, lambda);
  }
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    const double a_new = detail::golden_max([&](double a) { return ll(a, lambda); }, alpha_lo, alpha_hi, 1e-9);
    const double l_new = detail::golden_max([&](double l) { return ll(a_new, l); }, lambda_lo, lambda_hi, 1e-11);
    const double cur = ll(a_new, l_new);
    const double gain = cur - best;
    alpha = a_new;
    lambda = l_new;
    best = cur;
    if (it > 0 && gain < 1e-10) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw std::runtime_error("fit_truncated_powerlaw: no convergence after bounded iterations (alpha=" +
                             std::to_string(alpha) + ", lambda=" + std::to_string(lambda) + ")");
  }
  FitResult fit;
  fit.family = FitFamily::truncated_powerlaw;
  fit.xmin = xmin;
  fit.n_tail = static_cast<std::int64_t>(tail.size());
  fit.alpha = alpha;
  fit.lambda = lambda;
  fit.loglik = best;
  return fit;
}

/// Optional Clauset-style xmin selection: minimizes the KS distance between
/// the tail ECDF and the fitted power law over candidate xmins.
inline std::int64_t scan_xmin(const std::vector<std::int64_t>& data, std::int64_t max_xmin = 0) {
  std::vector<std::int64_t> sorted(data);
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.empty()) throw std::invalid_argument("scan_xmin: empty data");
  std::int64_t best_xmin = sorted.front();
  double best_ks = std::numeric_limits<double>::infinity();
  for (auto xm : sorted) {
    if (max_xmin > 0 && xm > max_xmin) break;
    const auto tail = detail::tail_data(data, xm);
    if (tail.size() < 10) break;
    FitResult fit;
    try {
      fit = fit_powerlaw(tail, xm);
    } catch (const std::invalid_argument&) {
      continue;
    }
    std::vector<std::int64_t> t(tail);
    std::sort(t.begin(), t.end());
    const double z = hurwitz_zeta(fit.alpha, xm);
    double ks = 0.0, cdf_model = 0.0;
    std::size_t i = 0;
    for (std::int64_t v = xm; i < t.size(); ++v) {
      cdf_model += std::pow(static_cast<double>(v), -fit.alpha) / z;
      while (i < t.size() && t[i] == v) ++i;
      const double cdf_emp = static_cast<double>(i) / static_cast<double>(t.size());
      ks = std::max(ks, std::abs(cdf_emp - cdf_model));
      if (v > t.back()) break;
    }
    if (ks < best_ks) {
      best_ks = ks;
      best_xmin = xm;
    }
  }
  return best_xmin;
}

// ---------------------------------------------------------------------------
// Vuong-style likelihood-ratio test
// ---------------------------------------------------------------------------

/// Normalized log-likelihood ratio between two fitted models on the same tail.
/// R = (LL_A - LL_B) / (sigma * sqrt(n)) with sigma from the pointwise
/// log-likelihood differences; two-sided p via erfc. `preferred` is set only
/// below the paper's 0.05 threshold.
inline LrtResult likelihood_ratio_test(const std::vector<std::int64_t>& data, const FitResult& fit_a,
                                       const FitResult& fit_b) {
  if (fit_a.xmin != fit_b.xmin) throw std::invalid_argument("likelihood_ratio_test: fits use different xmin");
  const auto tail = detail::tail_data(data, fit_a.xmin);
  if (tail.empty()) throw std::invalid_argument("likelihood_ratio_test: empty tail");
  std::vector<double> diffs(tail.size());
  for (std::size_t i = 0; i < tail.size(); ++i) {
    diffs[i] = log_pmf(fit_a, tail[i]) - log_pmf(fit_b, tail[i]);
  }
  const double n = static_cast<double>(diffs.size());
  double sum = 0.0;
  for (double d : diffs) sum += d;
  bool all_zero = true;
  for (double d : diffs) {
    if (std::abs(d) > 1e-12) all_zero = false;
  }
  LrtResult out;
  if (all_zero) {  // identical models
    out.r = 0.0;
    out.p_value = 1.0;
    return out;
  }
  const double sigma = std::sqrt(variance(diffs));
  if (sigma <= 0.0) throw std::runtime_error("likelihood_ratio_test: indistinguishable (zero variance)");
  out.r = sum / (sigma * std::sqrt(n));
  out.p_value = normal_two_sided_p(out.r);
  if (out.p_value < 0.05) out.preferred = out.r > 0 ? fit_a.family : fit_b.family;
  return out;
}

// ---------------------------------------------------------------------------
// Wilcoxon rank-sum
// ---------------------------------------------------------------------------

namespace detail {

// midranks of the combined sample; returns (ranks_x, tie group sizes)
inline std::pair<std::vector<double>, std::vector<std::int64_t>> midranks(const std::vector<double>& x,
                                                                          const std::vector<double>& y) {
  struct Item {
    double v;
    bool from_x;
  };
  std::vector<Item> all;
  all.reserve(x.size() + y.size());
  for (double v : x) all.push_back({v, true});
  for (double v : y) all.push_back({v, false});
  std::stable_sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });
  std::vector<double> ranks_x;
  std::vector<std::int64_t> ties;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].v == all[i].v) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;  // average of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) {
      if (all[t].from_x) ranks_x.push_back(r);
    }
    ties.push_back(static_cast<std::int64_t>(j - i));
    i = j;
  }
  return {ranks_x, ties};
}

}  // namespace detail

/// Number of n-subsets of ranks {1..n_total} with rank sum <= w (and >= w),
/// computed by dynamic programming over (ranks taken, sum). Used for the exact
/// small-sample path.
inline double wilcoxon_exact_p(std::int64_t w, int n_x, int n_total) {
  const int max_sum = n_total * (n_total + 1) / 2;
  // ways[k][s] = #subsets of {1..r} with k elements summing to s
  std::vector<std::vector<double>> ways(n_x + 1, std::vector<double>(max_sum + 1, 0.0));
  ways[0][0] = 1.0;
  for (int r = 1; r <= n_total; ++r) {
    for (int k = std::min(n_x, r); k >= 1; --k) {
      for (int s = max_sum; s >= r; --s) {
        ways[k][s] += ways[k - 1][s - r];
      }
    }
  }
  double total = 0.0, le = 0.0, ge = 0.0;
  for (int s = 0; s <= max_sum; ++s) {
    total += ways[n_x][s];
    if (s <= w) le += ways[n_x][s];
    if (s >= w) ge += ways[n_x][s];
  }
  const double p = 2.0 * std::min(le, ge) / total;
  return std::min(1.0, p);
}

struct RankSumResult {
  double statistic = 0.0;  // rank sum of x
  double p_value = 1.0;
  bool exact = false;
};

/// Two-sided Wilcoxon rank-sum test. Exact enumeration (via DP) when
/// n+m <= 12 and the pooled sample is tie-free; otherwise a normal
/// approximation with tie and continuity corrections.
inline RankSumResult wilcoxon_rank_sum(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("wilcoxon_rank_sum: empty sample");
  const auto [ranks_x, ties] = detail::midranks(x, y);
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  const double total = n + m;
  double w = 0.0;
  for (double r : ranks_x) w += r;

  RankSumResult out;
  out.statistic = w;
  const bool tie_free = ties.size() == x.size() + y.size();
  if (tie_free && x.size() + y.size() <= 12) {
    out.exact = true;
    out.p_value = wilcoxon_exact_p(static_cast<std::int64_t>(std::llround(w)), static_cast<int>(x.size()),
                                   static_cast<int>(x.size() + y.size()));
    return out;
  }
  const double mean_w = n * (total + 1.0) / 2.0;
  double tie_term = 0.0;
  for (auto t : ties) tie_term += static_cast<double>(t) * t * t - static_cast<double>(t);
  const double var_w = n * m / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
  if (var_w <= 0.0) {  // all pooled values identical
    out.p_value = 1.0;
    return out;
  }
  const double num = std::max(0.0, std::abs(w - mean_w) - 0.5);  // continuity correction
  out.p_value = normal_two_sided_p(num / std::sqrt(var_w));
  return out;
}

// ---------------------------------------------------------------------------

/// Base-2 Shannon entropy of a probability vector, with 0 log 0 := 0.
inline double shannon_entropy(const std::vector<double>& p) {
  double total = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("shannon_entropy: negative entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("shannon_entropy: probabilities must sum to 1");
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log2(v);
  }
  return h;
}

}  // namespace vocseq
