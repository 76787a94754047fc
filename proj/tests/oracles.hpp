// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

// Slow, independent reference implementations used only by the tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace test {

/// P(X >= k), X ~ Binomial(n, p), by summing the pmf in extended precision.
inline long double binomial_upper_tail(std::uint64_t k, std::uint64_t n, long double p) {
  const long double q = 1.0L - p;
  if (q == 0.0L) return 1.0L;
  long double pmf = std::pow(q, static_cast<long double>(n));
  for (std::uint64_t j = 0; j < k; ++j) {
    pmf *= static_cast<long double>(n - j) / static_cast<long double>(j + 1) * p / q;
  }
  long double upper = 0.0L;
  for (std::uint64_t j = k; j <= n; ++j) {
    upper += pmf;
    pmf *= static_cast<long double>(n - j) / static_cast<long double>(j + 1) * p / q;
  }
  return upper;
}

// E[relu(u) relu(v)] / E[relu(u)^2] for standard normals with corr rho, by
// integrating u numerically with the inner expectation in closed form.
inline double relu_cosine_quadrature(double rho) {
  const double s = std::sqrt(1.0 - rho * rho);
  const boost::math::normal_distribution<double> n01;
  auto integrand = [&](double u) {
    const double m = rho * u;
    const double inner = s == 0.0 ? std::max(m, 0.0) : m * boost::math::cdf(n01, m / s) + s * boost::math::pdf(n01, m / s);
    return boost::math::pdf(n01, u) * u * inner;
  };
  const double num = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 40.0, 12, 1e-14);
  return num / 0.5;
}

inline int sign(double v) { return (v > 0) - (v < 0); }

inline double kendall_tau_a_brute(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  long long s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) s += sign(x[i] - x[j]) * sign(y[i] - y[j]);
  }
  return static_cast<double>(s) / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

inline double kendall_tau_b_brute(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  long long s = 0, tx = 0, ty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int a = sign(x[i] - x[j]), b = sign(y[i] - y[j]);
      s += a * b;
      tx += a != 0;
      ty += b != 0;
    }
  }
  if (tx == 0 || ty == 0) return 0.0;
  return static_cast<double>(s) / std::sqrt(static_cast<double>(tx) * static_cast<double>(ty));
}

/// Exact one-sided P(U >= u_obs) under random relabeling of the pooled
/// sample, by enumerating every size-|a| subset.
inline double mann_whitney_exact_upper(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  auto u_of = [&](const std::vector<bool>& in_a) {
    double u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_a[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (in_a[j]) continue;
        u += pooled[i] > pooled[j] ? 1.0 : (pooled[i] == pooled[j] ? 0.5 : 0.0);
      }
    }
    return u;
  };
  std::vector<bool> obs(n, false);
  std::fill(obs.begin(), obs.begin() + static_cast<std::ptrdiff_t>(na), true);
  const double u_obs = u_of(obs);
  std::vector<bool> mask(n, false);
  std::fill(mask.end() - static_cast<std::ptrdiff_t>(na), mask.end(), true);
  long long hits = 0, total = 0;
  do {
    ++total;
    hits += u_of(mask) >= u_obs - 1e-9;
  } while (std::next_permutation(mask.begin(), mask.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

/// Exact one-sided p for every attainable U with continuous data.
inline std::vector<double> mann_whitney_exact_table(std::size_t na, std::size_t nb) {
  // f[i][j][u]: orderings of i a's and j b's with statistic u, split on
  // whether the largest value is an a (beats all j b's) or a b.
  std::vector<std::vector<std::vector<double>>> f(
      na + 1, std::vector<std::vector<double>>(nb + 1, std::vector<double>(na * nb + 1, 0.0)));
  for (std::size_t i = 0; i <= na; ++i) {
    for (std::size_t j = 0; j <= nb; ++j) {
      if (i == 0 || j == 0) {
        f[i][j][0] = 1.0;
        continue;
      }
      for (std::size_t u = 0; u <= i * j; ++u) {
        f[i][j][u] = f[i][j - 1][u] + (u >= j ? f[i - 1][j][u - j] : 0.0);
      }
    }
  }
  const auto& c = f[na][nb];
  const double total = std::accumulate(c.begin(), c.end(), 0.0);
  std::vector<double> upper(c.size());
  double acc = 0.0;
  for (std::size_t u = c.size(); u-- > 0;) {
    acc += c[u];
    upper[u] = acc / total;
  }
  return upper;
}

/// Kolmogorov-Smirnov distance of a sample from Uniform(0, 1).
inline double ks_uniform_statistic(std::vector<double> ps) {
  std::sort(ps.begin(), ps.end());
  const double n = static_cast<double>(ps.size());
  double d = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    d = std::max({d, static_cast<double>(i + 1) / n - ps[i], ps[i] - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace test
