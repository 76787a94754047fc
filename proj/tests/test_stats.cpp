// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "seedprint/numerics.hpp"
#include "seedprint/stats.hpp"

namespace sp = seedprint;

TEST(Binomial, ZeroCountIsCertain) {
  const auto r = sp::top1_binomial_pvalue(0, 10000, 50000);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_FALSE(r.underflow);
}

TEST(Binomial, SingleHitMatchesClosedForm) {
  const double nominal = -std::expm1(10000.0 * std::log1p(-1.0 / 50000.0));
  EXPECT_NEAR(std::exp(sp::log_binomial_tail(1, 10000, 1.0 / 50000.0)), nominal, 1e-12);
  EXPECT_NEAR(nominal, 0.1813, 1e-4);
  EXPECT_EQ(sp::top1_binomial_pvalue(1, 10000, 50000).p_value, 1.0);
}

TEST(Binomial, LargeCountUnderflowsWithFlag) {
  const auto r = sp::top1_binomial_pvalue(520, 10000, 50257);
  EXPECT_TRUE(r.underflow);
  EXPECT_EQ(r.p_value, 0.0);
  EXPECT_LT(r.log_p, std::log(1e-300));
  EXPECT_TRUE(std::isfinite(r.log_p));
}

TEST(Binomial, RejectsCountAboveTrials) {
  EXPECT_THROW(sp::top1_binomial_pvalue(11, 10, 5), std::invalid_argument);
  EXPECT_THROW(sp::top1_binomial_pvalue(1, 10, 0), std::invalid_argument);
}

TEST(Binomial, MatchesSummationOracle) {
  sp::RngStream rng(17, 0);
  for (int trial = 0; trial < 400; ++trial) {
    const auto n = 1 + rng.below(1000);
    const auto v = 1 + rng.below(2000);
    const auto k = rng.below(n + 1);
    const long double expect = test::binomial_upper_tail(k, n, 1.0L / static_cast<long double>(v));
    const double got = std::exp(sp::log_binomial_tail(k, n, 1.0 / static_cast<double>(v)));
    if (expect < 1e-300L) continue;
    EXPECT_NEAR(got / static_cast<double>(expect), 1.0, 1e-10) << "k=" << k << " n=" << n << " V=" << v;
  }
}

TEST(Binomial, MonotoneDecreasingInCount) {
  double prev = std::numeric_limits<double>::infinity();
  for (std::uint64_t k = 0; k <= 60; ++k) {
    const double lp = sp::log_binomial_tail(k, 2000, 1.0 / 50257.0) + std::log(50257.0);
    EXPECT_LT(lp, prev);
    prev = lp;
  }
}

TEST(Binomial, PreClampVocabDependence) {
  // V * P(X >= 1) rises with V. For k >= 2 the product rises while N/V is
  // large and falls once N/V is small, so only the k = 1 case is monotone.
  double prev = -std::numeric_limits<double>::infinity();
  for (std::uint64_t v : {2, 10, 100, 1000, 10000, 50257, 100000}) {
    const double lp = sp::log_binomial_tail(1, 2000, 1.0 / static_cast<double>(v)) + std::log(static_cast<double>(v));
    EXPECT_GT(lp, prev);
    prev = lp;
  }
  auto bonf = [](std::uint64_t k, std::uint64_t v) {
    return sp::log_binomial_tail(k, 2000, 1.0 / static_cast<double>(v)) + std::log(static_cast<double>(v));
  };
  EXPECT_GT(bonf(2, 1000), bonf(2, 100));
  EXPECT_LT(bonf(2, 100000), bonf(2, 50257));
}

TEST(Kendall, IdentityAndReversal) {
  const std::vector<double> x = {0.3, 1.5, -2.0, 4.0, 0.7};
  std::vector<double> rev(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) rev[i] = -x[i];
  EXPECT_DOUBLE_EQ(sp::kendall_tau(x, x), 1.0);
  EXPECT_DOUBLE_EQ(sp::kendall_tau(x, rev), -1.0);
}

TEST(Kendall, ThreePointHandCount) {
  const std::vector<double> x = {1, 2, 3}, y = {1, 3, 2};
  EXPECT_DOUBLE_EQ(sp::kendall_tau(x, y), 1.0 / 3.0);
}

TEST(Kendall, RejectsShortOrMismatched) {
  const std::vector<double> one = {1.0}, two = {1.0, 2.0};
  EXPECT_THROW(sp::kendall_tau(one, one), std::invalid_argument);
  EXPECT_THROW(sp::kendall_tau(one, two), std::invalid_argument);
}

TEST(Kendall, FastEqualsBruteForceWithAndWithoutTies) {
  sp::RngStream rng(2024, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    const bool ties = trial % 2 == 1;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = ties ? static_cast<double>(rng.below(7)) : rng.gaussian();
      y[i] = ties ? static_cast<double>(rng.below(5)) : rng.gaussian();
    }
    ASSERT_EQ(sp::kendall_tau(x, y), test::kendall_tau_a_brute(x, y)) << "trial " << trial;
    ASSERT_NEAR(sp::kendall_tau(x, y, sp::TauVariant::b), test::kendall_tau_b_brute(x, y), 1e-12);
  }
}

TEST(Kendall, SymmetricAndRankInvariant) {
  sp::RngStream rng(5, 5);
  std::vector<double> x(150), y(150), fx(150);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = rng.gaussian();
    y[i] = x[i] + rng.gaussian();
    fx[i] = std::exp(3.0 * x[i]) + 7.0;
  }
  EXPECT_EQ(sp::kendall_tau(x, y), sp::kendall_tau(y, x));
  EXPECT_EQ(sp::kendall_tau(x, y), sp::kendall_tau(fx, y));
}

TEST(MannWhitney, SeparatedSamples) {
  const std::vector<double> a = {10, 11, 12}, b = {1, 2, 3};
  const auto r = sp::mann_whitney_u(a, b);
  EXPECT_DOUBLE_EQ(r.statistic, 9.0);
  EXPECT_NEAR(test::mann_whitney_exact_upper(a, b), 1.0 / 20.0, 1e-15);
  EXPECT_NEAR(r.p_value, 0.05, 0.02);
}

TEST(MannWhitney, IdenticalMultisetsNearHalf) {
  const std::vector<double> a = {1, 2, 3, 4, 5, 6}, b = {6, 5, 4, 3, 2, 1};
  EXPECT_NEAR(sp::mann_whitney_u(a, b).p_value, 0.5, 0.1);
}

TEST(MannWhitney, SingletonSamples) {
  const std::vector<double> a = {2.0}, b = {1.0};
  const auto r = sp::mann_whitney_u(a, b);
  EXPECT_DOUBLE_EQ(r.statistic, 1.0);
  // The exact one-sided p for U = 1 with one value per side is 1/2.
  EXPECT_DOUBLE_EQ(test::mann_whitney_exact_upper(a, b), 0.5);
  EXPECT_LE(r.p_value, 0.5);
}

TEST(MannWhitney, AllEqualValuesGiveHalf) {
  const std::vector<double> a = {3, 3, 3}, b = {3, 3};
  EXPECT_DOUBLE_EQ(sp::mann_whitney_u(a, b).p_value, 0.5);
}

TEST(MannWhitney, ApproximationTracksExactForModerateSizes) {
  sp::RngStream rng(8, 8);
  double worst = 0.0;
  for (std::size_t na = 3; na <= 8; ++na) {
    for (std::size_t nb = 3; nb <= 8; ++nb) {
      for (int rep = 0; rep < 30; ++rep) {
        std::vector<double> a(na), b(nb);
        for (auto& v : a) v = rng.gaussian() + 0.5;
        for (auto& v : b) v = rng.gaussian();
        worst = std::max(worst, std::abs(sp::mann_whitney_u(a, b).p_value - test::mann_whitney_exact_upper(a, b)));
      }
    }
  }
  EXPECT_LT(worst, 0.02);
}

TEST(Welch, LargeShiftIsSignificant) {
  sp::RngStream rng(3, 3);
  std::vector<double> a(100), b(100);
  for (auto& v : a) v = 10.0 + rng.gaussian();
  for (auto& v : b) v = rng.gaussian();
  EXPECT_LT(sp::welch_t_one_sided(a, b).p_value, 1e-10);
}

TEST(Welch, EqualSamplesGiveHalf) {
  const std::vector<double> a = {1.0, 2.0, 4.0};
  const auto r = sp::welch_t_one_sided(a, a);
  EXPECT_DOUBLE_EQ(r.statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 0.5);
  const std::vector<double> c = {2.0, 2.0};
  EXPECT_DOUBLE_EQ(sp::welch_t_one_sided(c, c).p_value, 0.5);
}

TEST(Welch, SwapComplementsP) {
  sp::RngStream rng(4, 4);
  std::vector<double> a(20), b(35);
  for (auto& v : a) v = 0.3 + rng.gaussian();
  for (auto& v : b) v = 2.0 * rng.gaussian();
  const double p = sp::welch_t_one_sided(a, b).p_value;
  const double q = sp::welch_t_one_sided(b, a).p_value;
  EXPECT_NEAR(p + q, 1.0, 1e-9);
}

TEST(Welch, MatchesHandComputedStatistic) {
  const std::vector<double> a = {1, 2, 3, 4}, b = {0, 0.5, 1};
  // means 2.5, 0.5; variances 5/3, 1/4; se^2 = 5/12 + 1/12 = 1/2
  const auto r = sp::welch_t_one_sided(a, b);
  EXPECT_NEAR(r.statistic, 2.0 / std::sqrt(0.5), 1e-12);
}

TEST(FisherZ, ZeroSimilarityGivesHalf) {
  const std::vector<double> z(10, 0.0);
  EXPECT_DOUBLE_EQ(sp::fisher_z_onesample(z).p_value, 0.5);
}

TEST(FisherZ, StrongSimilarityUnderflows) {
  sp::RngStream rng(6, 6);
  std::vector<double> s(1000);
  for (auto& v : s) v = 0.46 + 0.05 * rng.gaussian();
  const auto r = sp::fisher_z_onesample(s);
  EXPECT_TRUE(r.underflow);
  EXPECT_EQ(r.p_value, 0.0);
}

TEST(FisherZ, RejectsOutOfRange) {
  const std::vector<double> s = {0.2, 1.0};
  EXPECT_THROW(sp::fisher_z_onesample(s), std::invalid_argument);
}

TEST(FisherZ, NullPValuesRoughlyUniform) {
  sp::RngStream rng(10, 10);
  std::vector<double> ps;
  for (int rep = 0; rep < 400; ++rep) {
    std::vector<double> s(50);
    for (auto& v : s) v = 0.1 * rng.gaussian();
    ps.push_back(sp::fisher_z_onesample(s).p_value);
  }
  EXPECT_LT(test::ks_uniform_statistic(ps), 1.63 / std::sqrt(400.0));
}

TEST(NullCalibration, TwoSampleFalsePositiveRate) {
  sp::RngStream rng(12, 12);
  int t_hits = 0, u_hits = 0;
  const int sims = 2000;
  for (int rep = 0; rep < sims; ++rep) {
    std::vector<double> a(30), b(40);
    for (auto& v : a) v = rng.gaussian();
    for (auto& v : b) v = rng.gaussian();
    t_hits += sp::welch_t_one_sided(a, b).p_value < 0.05;
    u_hits += sp::mann_whitney_u(a, b).p_value < 0.05;
  }
  EXPECT_NEAR(t_hits / double(sims), 0.05, 0.02);
  EXPECT_NEAR(u_hits / double(sims), 0.05, 0.02);
}

TEST(PValues, AlwaysFiniteAndInRange) {
  sp::RngStream rng(13, 13);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> a(2 + rng.below(30)), b(2 + rng.below(30));
    const double shift = 20.0 * (rng.uniform() - 0.5);
    for (auto& v : a) v = shift + 0.01 * rng.gaussian();
    for (auto& v : b) v = 0.01 * rng.gaussian();
    for (const auto& r : {sp::welch_t_one_sided(a, b), sp::mann_whitney_u(a, b)}) {
      EXPECT_TRUE(std::isfinite(r.p_value));
      EXPECT_GE(r.p_value, 0.0);
      EXPECT_LE(r.p_value, 1.0);
      EXPECT_FALSE(std::isnan(r.log_p));
    }
  }
}
