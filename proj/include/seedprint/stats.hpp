// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/policies/policy.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "seedprint/numerics.hpp"

namespace seedprint {

enum class TestKind { binomial_tail, kendall_tau, mann_whitney_u, welch_t, fisher_z };

inline std::string to_string(TestKind k) {
  switch (k) {
    case TestKind::binomial_tail: return "binomial_tail";
    case TestKind::kendall_tau: return "kendall_tau";
    case TestKind::mann_whitney_u: return "mann_whitney_u";
    case TestKind::welch_t: return "welch_t";
    case TestKind::fisher_z: return "fisher_z";
  }
  return "unknown";
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  /// Natural log of p. Exact for the binomial tail even when p underflows.
  double log_p = 0.0;
  bool underflow = false;
  TestKind kind = TestKind::binomial_tail;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

namespace detail {

using NoThrowPolicy = boost::math::policies::policy<boost::math::policies::underflow_error<boost::math::policies::ignore_error>,
                                                    boost::math::policies::denorm_error<boost::math::policies::ignore_error>>;

inline double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

/// Fills p_value, log_p and underflow from a natural-log p.
inline void set_p_from_log(TestResult& r, double log_p) {
  log_p = std::min(0.0, log_p);
  r.log_p = log_p;
  const double p = std::exp(log_p);
  if (p < DBL_MIN) {
    r.p_value = 0.0;
    r.underflow = true;
  } else {
    r.p_value = std::clamp(p, 0.0, 1.0);
  }
}

inline void set_p(TestResult& r, double p) {
  p = std::clamp(p, 0.0, 1.0);
  if (p < DBL_MIN) {
    r.p_value = 0.0;
    r.underflow = true;
    r.log_p = p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  } else {
    r.p_value = p;
    r.log_p = std::log(p);
  }
}

/// P(Z > z) for standard normal Z.
inline double normal_sf(double z) { return 0.5 * boost::math::erfc(z / std::numbers::sqrt2, NoThrowPolicy()); }

/// One-sided upper-tail p for Student t.
inline double student_t_sf(double t, double df) {
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  boost::math::students_t_distribution<double, NoThrowPolicy> dist(df);
  return boost::math::cdf(boost::math::complement(dist, t));
}

inline void require_finite(std::span<const double> xs, const char* who) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(who) + ": non-finite input");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binomial tail with Bonferroni correction
// ---------------------------------------------------------------------------

/// ln P(X >= k) for X ~ Binomial(n, p). Uses the regularized incomplete beta
/// I_p(k, n - k + 1) while it is representable, else log-sum-exp over the pmf.
inline double log_binomial_tail(std::uint64_t k, std::uint64_t n, double p) {
  if (k > n) throw std::invalid_argument("log_binomial_tail: k > n");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("log_binomial_tail: p outside [0, 1]");
  if (k == 0) return 0.0;
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return 0.0;
  const double tail = boost::math::ibeta(static_cast<double>(k), static_cast<double>(n - k + 1), p, detail::NoThrowPolicy());
  if (tail > 1e-290) return std::min(0.0, std::log(tail));
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double nd = static_cast<double>(n);
  const double lgn = std::lgamma(nd + 1.0);
  const double mode = std::floor((nd + 1.0) * p);
  double acc = -std::numeric_limits<double>::infinity();
  for (std::uint64_t j = k; j <= n; ++j) {
    const double jd = static_cast<double>(j);
    const double term = lgn - std::lgamma(jd + 1.0) - std::lgamma(nd - jd + 1.0) + jd * lp + (nd - jd) * lq;
    acc = detail::log_add(acc, term);
    // Past the mode terms only shrink; stop once they no longer register.
    if (jd > mode && term < acc - 40.0) break;
  }
  return std::min(0.0, acc);
}

/// Bonferroni-corrected probability that some of V equally likely tokens is
/// chosen at least k_max times in N draws: min(1, V * P(X >= k_max)).
inline TestResult top1_binomial_pvalue(std::uint64_t k_max, std::uint64_t n, std::uint64_t vocab) {
  if (vocab < 1) throw std::invalid_argument("top1_binomial_pvalue: V must be >= 1");
  if (k_max > n) throw std::invalid_argument("top1_binomial_pvalue: k_max > N");
  TestResult r;
  r.kind = TestKind::binomial_tail;
  r.statistic = static_cast<double>(k_max);
  r.n_a = n;
  r.n_b = vocab;
  const double log_nominal = log_binomial_tail(k_max, n, 1.0 / static_cast<double>(vocab));
  detail::set_p_from_log(r, std::log(static_cast<double>(vocab)) + log_nominal);
  return r;
}

// ---------------------------------------------------------------------------
// Kendall tau
// ---------------------------------------------------------------------------

enum class TauVariant { a, b };

namespace detail {

inline std::int64_t tied_pairs_sorted(std::span<const double> sorted) {
  std::int64_t total = 0;
  std::size_t run = 1;
  for (std::size_t i = 1; i <= sorted.size(); ++i) {
    if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
      ++run;
    } else {
      total += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

/// Stable merge sort that returns the number of inversions.
inline std::int64_t count_inversions(std::vector<double>& v) {
  std::vector<double> buf(v.size());
  std::int64_t swaps = 0;
  for (std::size_t width = 1; width < v.size(); width *= 2) {
    for (std::size_t lo = 0; lo < v.size(); lo += 2 * width) {
      const std::size_t mid = std::min(lo + width, v.size());
      const std::size_t hi = std::min(lo + 2 * width, v.size());
      std::size_t i = lo, j = mid, k = lo;
      while (i < mid && j < hi) {
        if (v[j] < v[i]) {
          swaps += static_cast<std::int64_t>(mid - i);
          buf[k++] = v[j++];
        } else {
          buf[k++] = v[i++];
        }
      }
      while (i < mid) buf[k++] = v[i++];
      while (j < hi) buf[k++] = v[j++];
    }
    std::swap(v, buf);
  }
  return swaps;
}

}  // namespace detail

/// Kendall tau in O(n log n) (Knight's algorithm). Tau-a drops tied pairs from
/// both C and D and keeps the n(n-1)/2 denominator; tau-b uses the tie-adjusted
/// denominator and is 0 when either side is constant.
inline double kendall_tau(std::span<const double> xs, std::span<const double> ys, TauVariant variant = TauVariant::a) {
  if (xs.size() != ys.size()) throw std::invalid_argument("kendall_tau: length mismatch");
  if (xs.size() < 2) throw std::invalid_argument("kendall_tau: need n >= 2");
  detail::require_finite(xs, "kendall_tau");
  detail::require_finite(ys, "kendall_tau");
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return xs[a] != xs[b] ? xs[a] < xs[b] : ys[a] < ys[b];
  });
  std::vector<double> x_sorted(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x_sorted[i] = xs[order[i]];
    y[i] = ys[order[i]];
  }
  const std::int64_t n0 = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t n1 = detail::tied_pairs_sorted(x_sorted);
  std::int64_t n3 = 0;  // tied in both
  for (std::size_t i = 0, run = 1; i < n; ++i) {
    if (i + 1 < n && x_sorted[i + 1] == x_sorted[i] && y[i + 1] == y[i]) {
      ++run;
    } else {
      n3 += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  const std::int64_t swaps = detail::count_inversions(y);
  const std::int64_t n2 = detail::tied_pairs_sorted(y);
  const std::int64_t c_minus_d = n0 - n1 - n2 + n3 - 2 * swaps;
  if (variant == TauVariant::a) return static_cast<double>(c_minus_d) / static_cast<double>(n0);
  const double denom = std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
  return denom > 0.0 ? static_cast<double>(c_minus_d) / denom : 0.0;
}

// ---------------------------------------------------------------------------
// Two-sample tests, one-sided H1: a > b
// ---------------------------------------------------------------------------

/// Midranks (1-based) of the concatenation a ++ b, plus sum over tie groups of t^3 - t.
inline std::pair<std::vector<double>, double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  return {std::move(ranks), tie_term};
}

/// Mann-Whitney U with midranks; normal approximation with tie-corrected
/// variance and a 0.5 continuity correction. All values equal gives p = 0.5.
inline TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney_u: empty sample");
  detail::require_finite(a, "mann_whitney_u");
  detail::require_finite(b, "mann_whitney_u");
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  const auto [ranks, tie_term] = midranks(all);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranks[i];
  TestResult r;
  r.kind = TestKind::mann_whitney_u;
  r.n_a = a.size();
  r.n_b = b.size();
  r.statistic = rank_sum_a - na * (na + 1.0) / 2.0;
  const double mu = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (!(var > 0.0)) {
    detail::set_p(r, 0.5);
    return r;
  }
  const double z = (r.statistic - mu - 0.5) / std::sqrt(var);
  detail::set_p(r, detail::normal_sf(z));
  return r;
}

/// Welch's unequal-variance t-test, one-sided for mean(a) > mean(b).
inline TestResult welch_t_one_sided(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_t_one_sided: need >= 2 per sample");
  detail::require_finite(a, "welch_t_one_sided");
  detail::require_finite(b, "welch_t_one_sided");
  const auto sa = mean_std(a);
  const auto sb = mean_std(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double va = sa.std * sa.std * na / (na - 1.0);
  const double vb = sb.std * sb.std * nb / (nb - 1.0);
  TestResult r;
  r.kind = TestKind::welch_t;
  r.n_a = a.size();
  r.n_b = b.size();
  const double diff = sa.mean - sb.mean;
  const double se2 = va / na + vb / nb;
  if (!(se2 > 0.0)) {
    r.statistic = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    detail::set_p(r, diff == 0.0 ? 0.5 : (diff > 0.0 ? 0.0 : 1.0));
    return r;
  }
  r.statistic = diff / std::sqrt(se2);
  const double df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  detail::set_p(r, detail::student_t_sf(r.statistic, df));
  return r;
}

/// One-sample t-test of atanh(sims) against 0, one-sided greater.
inline TestResult fisher_z_onesample(std::span<const double> sims) {
  if (sims.size() < 2) throw std::invalid_argument("fisher_z_onesample: need n >= 2");
  std::vector<double> z(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) {
    const double s = sims[i];
    if (!(s > -1.0 && s < 1.0)) throw std::invalid_argument("fisher_z_onesample: similarity outside (-1, 1)");
    z[i] = std::atanh(s);
  }
  const auto ms = mean_std(z);
  const double n = static_cast<double>(z.size());
  const double sd = ms.std * std::sqrt(n / (n - 1.0));
  TestResult r;
  r.kind = TestKind::fisher_z;
  r.n_a = z.size();
  if (!(sd > 0.0)) {
    r.statistic = ms.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), ms.mean);
    detail::set_p(r, ms.mean == 0.0 ? 0.5 : (ms.mean > 0.0 ? 0.0 : 1.0));
    return r;
  }
  r.statistic = ms.mean / (sd / std::sqrt(n));
  detail::set_p(r, detail::student_t_sf(r.statistic, n - 1.0));
  return r;
}

}  // namespace seedprint
