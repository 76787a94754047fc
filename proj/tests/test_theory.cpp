// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "seedprint/numerics.hpp"
#include "seedprint/theory.hpp"

namespace sp = seedprint;
namespace th = seedprint::theory;

namespace {

// Exact mean off-diagonal correlation of L-1 prefix-mean applications to
// white noise of length T, from the covariance matrix.
double prefix_mean_offdiag(std::size_t T, std::size_t L) {
  const auto n = static_cast<Eigen::Index>(T);
  sp::Matrix a = sp::Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) a.row(i).head(i + 1).setConstant(1.0 / static_cast<double>(i + 1));
  sp::Matrix m = sp::Matrix::Identity(n, n);
  for (std::size_t k = 0; k + 1 < L; ++k) m = a * m;
  const sp::Matrix cov = m * m.transpose();
  const sp::Vector sd = cov.diagonal().cwiseSqrt();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i != j) total += cov(i, j) / (sd(i) * sd(j));
    }
  }
  return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

}  // namespace

TEST(Recurrence, MatchesQuadratureOracle) {
  for (double rho : {-0.9, -0.3, 0.0, 1.0 / std::numbers::pi, 0.5, 0.8, 0.99}) {
    EXPECT_NEAR(th::relu_correlation_map(rho), test::relu_cosine_quadrature(rho), 1e-10) << rho;
  }
}

TEST(Recurrence, AnchorValues) {
  EXPECT_DOUBLE_EQ(th::relu_correlation_map(0.0), 1.0 / std::numbers::pi);
  EXPECT_DOUBLE_EQ(th::relu_correlation_map(1.0), 1.0);
  EXPECT_NEAR(th::relu_correlation_map(1.0 / std::numbers::pi), 0.493, 1e-3);
  EXPECT_THROW(th::relu_correlation_map(1.0 + 1e-12), std::domain_error);
}

TEST(Recurrence, MonotoneAndAboveIdentityOnGrid) {
  double prev = -1.0;
  for (int i = 0; i < 1000; ++i) {
    const double rho = i / 1000.0;
    const double g = th::relu_correlation_map(rho);
    EXPECT_GT(g, rho);
    EXPECT_GT(g, prev);
    prev = g;
  }
}

TEST(Recurrence, TraceIncreasesTowardOne) {
  const auto t = th::relu_correlation_after(100);
  ASSERT_EQ(t.rho_by_layer.size(), 100u);
  EXPECT_DOUBLE_EQ(t.rho_by_layer[0], 1.0 / std::numbers::pi);
  EXPECT_EQ(t.rho_by_layer[1], th::mlp_mlp_similarity());
  for (std::size_t i = 1; i < 100; ++i) {
    EXPECT_GT(t.rho_by_layer[i], t.rho_by_layer[i - 1]);
    EXPECT_LE(t.rho_by_layer[i], 1.0);
  }
  EXPECT_GT(t.rho_by_layer.back(), 0.99);
  EXPECT_EQ(th::tanh_correlation_after(7), 0.0);
}

TEST(Amplifier, FormulaAndOrdering) {
  const double pi = std::numbers::pi;
  EXPECT_NEAR(th::attn_amplifier_similarity(1), 1.0 / pi, 1e-15);
  EXPECT_NEAR(th::attn_amplifier_similarity(128), 128.0 / (128.0 + pi - 1.0), 1e-15);
  EXPECT_NEAR(th::attn_amplifier_similarity(128), 0.9835, 5e-5);
  const double mm = th::mlp_mlp_similarity();
  EXPECT_GE(mm, 0.49);
  EXPECT_LE(mm, 0.50);
  EXPECT_LT(th::attn_amplifier_similarity(2), mm);
  double prev = 0.0;
  for (std::size_t T = 3; T <= 4096; ++T) {
    const double v = th::attn_amplifier_similarity(T);
    EXPECT_GT(v, mm);
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_THROW(th::attn_amplifier_similarity(0), std::invalid_argument);
}

TEST(IntraSimilarity, ClosedFormSmallCasesExact) {
  EXPECT_EQ(th::intra_similarity_closed_form_exact(2), th::Rational(2, 3));
  EXPECT_EQ(th::intra_similarity_closed_form_exact(3), th::Rational(8, 9));
  EXPECT_THROW(th::intra_similarity_closed_form(1), std::invalid_argument);
  const double l10 = th::intra_similarity_closed_form(10);
  EXPECT_GT(l10, 0.98);
  EXPECT_LT(l10, 1.0);
  for (std::size_t L = 2; L < 30; ++L) {
    EXPECT_LT(th::intra_similarity_closed_form(L), th::intra_similarity_closed_form(L + 1)) << L;
  }
}

TEST(IntraSimilarity, ClosedFormMatchesDiscreteCovarianceLimit) {
  for (std::size_t L : {2, 3}) {
    EXPECT_NEAR(prefix_mean_offdiag(1000, L), th::intra_similarity_closed_form(L), 0.003) << L;
  }
}

TEST(IntraSimilarity, DiscreteCovarianceDescendsTowardClosedForm) {
  for (std::size_t L = 4; L <= 8; ++L) {
    const double cf = th::intra_similarity_closed_form(L);
    const double t64 = prefix_mean_offdiag(64, L), t256 = prefix_mean_offdiag(256, L);
    EXPECT_GT(t64, t256) << L;
    EXPECT_GT(t256, cf) << L;
  }
}

TEST(IntraSimilarity, ApproxAndFinite) {
  EXPECT_DOUBLE_EQ(th::intra_similarity_approx(1, 5), 1.0);
  EXPECT_NEAR(th::intra_similarity_approx(16, 12), 1.0 - (15.0 / 16.0) / 144.0, 1e-15);
  EXPECT_DOUBLE_EQ(th::intra_similarity_finite(1, 4), 1.0);
  EXPECT_NEAR(th::intra_similarity_finite(16, 3), 8.0 / 9.0 + 1.0 / (16.0 * 9.0), 1e-15);
  EXPECT_NEAR(th::intra_similarity_finite(1u << 30, 6), th::intra_similarity_closed_form(6), 1e-8);
}

TEST(IntraSimilarity, ApproxTracksClosedFormForLargeT) {
  for (std::size_t L = 3; L <= 12; ++L) {
    EXPECT_NEAR(th::intra_similarity_approx(1u << 30, L), th::intra_similarity_closed_form(L), 0.02) << L;
  }
}

TEST(VarianceDecay, InverseLaw) {
  EXPECT_DOUBLE_EQ(th::variance_decay(1, 2.5), 2.5);
  EXPECT_DOUBLE_EQ(th::variance_decay(4, 1.0), 0.25);
  EXPECT_NEAR(std::sqrt(th::variance_decay(1, 1.0) / th::variance_decay(32, 1.0)), std::sqrt(32.0), 1e-12);
  EXPECT_THROW(th::variance_decay(0, 1.0), std::invalid_argument);
}
