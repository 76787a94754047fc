// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "seedprint/numerics.hpp"

namespace sp = seedprint;

TEST(Rng, SameKeySameSequence) {
  sp::RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DistinctKeysDiffer) {
  sp::RngStream a(42, 7), b(42, 8), c(43, 7);
  int same_b = 0, same_c = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    same_b += x == b.next_u64();
    same_c += x == c.next_u64();
  }
  EXPECT_EQ(same_b, 0);
  EXPECT_EQ(same_c, 0);
}

TEST(Rng, SubstreamLeavesParentUntouched) {
  sp::RngStream a(1, 2), b(1, 2);
  auto child = a.substream(5);
  child.next_u64();
  EXPECT_EQ(a.counter(), 0u);
  EXPECT_EQ(a.next_u64(), b.next_u64());
  EXPECT_NE(a.substream(5).next_u64(), a.substream(6).next_u64());
}

TEST(Rng, UniformOpenIntervalAndBelowRange) {
  sp::RngStream r(3, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = r.below(7);
    ASSERT_LT(k, 7u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 7u);
}

TEST(Rng, GaussianMoments) {
  sp::RngStream r(11, 0);
  const int n = 200000;
  double s = 0, ss = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double g = r.gaussian();
    s += g;
    ss += g * g;
    s4 += g * g * g * g;
  }
  EXPECT_NEAR(s / n, 0.0, 5.0 / std::sqrt(double(n)));
  EXPECT_NEAR(ss / n, 1.0, 0.01);
  EXPECT_NEAR(s4 / n, 3.0, 0.06);
}

TEST(Rng, GaussianMatrixScaleAndErrors) {
  sp::RngStream r(5, 1);
  const auto m = sp::gaussian_matrix<double>(r, 300, 300, 1.0, 0.02);
  const double mean = m.mean();
  const double sd = std::sqrt((m.array() - mean).square().mean());
  EXPECT_NEAR(mean, 1.0, 1e-3);
  EXPECT_NEAR(sd, 0.02, 0.02 * 0.02);
  EXPECT_THROW(sp::gaussian_matrix<double>(r, 2, 2, 0.0, -1.0), std::invalid_argument);
}

TEST(Activation, GeluMatchesNormalCdfOracle) {
  for (double x = -8.0; x <= 8.0; x += 0.01) {
    const double phi = 0.5 * (1.0 + boost::math::erf(x / std::numbers::sqrt2));
    const double expect = x * phi;
    EXPECT_NEAR(sp::gelu(x), expect, 1e-15 + 1e-13 * std::abs(expect)) << x;
  }
}

TEST(Activation, FloatGeluTracksDouble) {
  sp::Mat<float> xf(1, 1601);
  for (int i = 0; i <= 1600; ++i) xf(0, i) = static_cast<float>(-8.0 + 0.01 * i);
  sp::Mat<float> yf = sp::apply_activation(sp::Activation::gelu, xf);
  for (int i = 0; i <= 1600; ++i) EXPECT_NEAR(yf(0, i), sp::gelu(xf(0, i)), 2e-6);
}

TEST(Activation, ElementwiseKinds) {
  sp::Matrix x(1, 3);
  x << -1.0, 0.0, 2.0;
  const auto relu = sp::apply_activation(sp::Activation::relu, x);
  EXPECT_EQ(relu(0, 0), 0.0);
  EXPECT_EQ(relu(0, 2), 2.0);
  EXPECT_DOUBLE_EQ(sp::apply_activation(sp::Activation::tanh, x)(0, 2), std::tanh(2.0));
  EXPECT_DOUBLE_EQ(sp::apply_activation(sp::Activation::silu, x)(0, 0), -1.0 / (1.0 + std::exp(1.0)));
  EXPECT_THROW(sp::apply_activation(sp::Activation::swiglu, x), std::invalid_argument);
}

TEST(Activation, NameRoundTrip) {
  for (auto a : {sp::Activation::relu, sp::Activation::gelu, sp::Activation::tanh, sp::Activation::silu,
                 sp::Activation::swiglu}) {
    EXPECT_EQ(sp::activation_from_string(sp::to_string(a)), a);
  }
  EXPECT_THROW(sp::activation_from_string("softplus"), std::invalid_argument);
}

TEST(Softmax, CausalRowsAreDistributions) {
  sp::RngStream r(9, 9);
  const auto x = sp::gaussian_matrix<double>(r, 40, 40, 0.0, 3.0);
  const auto p = sp::softmax_rows(x, true);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-12);
    EXPECT_GE(p.row(i).minCoeff(), 0.0);
    for (Eigen::Index j = i + 1; j < p.cols(); ++j) EXPECT_EQ(p(i, j), 0.0);
  }
}

TEST(Softmax, ShiftInvariantAndStableForLargeScores) {
  sp::Matrix x(1, 3);
  x << 1000.0, 1001.0, 999.0;
  sp::Matrix y = x.array() - 1000.0;
  const auto a = sp::softmax_rows(x, false);
  const auto b = sp::softmax_rows(y, false);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_TRUE(a.allFinite());
}

TEST(Softmax, MaskedEntriesAndEmptyRows) {
  const double ninf = -std::numeric_limits<double>::infinity();
  sp::Matrix x(1, 3);
  x << 0.0, ninf, 0.0;
  const auto p = sp::softmax_rows(x, false);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  EXPECT_EQ(p(0, 1), 0.0);
  sp::Matrix bad(1, 2);
  bad << ninf, ninf;
  EXPECT_THROW(sp::softmax_rows(bad, false), std::domain_error);
}

TEST(Norm, LayerNormStandardizes) {
  sp::RngStream r(4, 4);
  const sp::Vector x = sp::gaussian_matrix<double>(r, 1, 512, 3.0, 2.0);
  const sp::Vector g = sp::Vector::Ones(512), b = sp::Vector::Zero(512);
  const auto y = sp::layer_norm(x, g, b, 0.0);
  EXPECT_NEAR(y.mean(), 0.0, 1e-12);
  EXPECT_NEAR(y.squaredNorm() / 512.0, 1.0, 1e-12);
}

TEST(Norm, RmsNormUnitRms) {
  sp::RngStream r(4, 5);
  const sp::Vector x = sp::gaussian_matrix<double>(r, 1, 256, 1.0, 0.5);
  const auto y = sp::rms_norm(x, sp::Vector::Ones(256).eval(), 0.0);
  EXPECT_NEAR(y.squaredNorm() / 256.0, 1.0, 1e-12);
}

TEST(Norm, RowwiseMatchesVectorForms) {
  sp::RngStream r(4, 6);
  const auto x = sp::gaussian_matrix<double>(r, 5, 64, 0.2, 1.5);
  const sp::Vector g = sp::gaussian_matrix<double>(r, 1, 64, 1.0, 0.1);
  const sp::Vector b = sp::gaussian_matrix<double>(r, 1, 64, 0.0, 0.1);
  const auto ln = sp::normalize_rows(x, g, b, false);
  const auto rms = sp::normalize_rows(x, g, sp::Vector(), true);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const sp::Vector row = x.row(i);
    EXPECT_LT((ln.row(i) - sp::layer_norm(row, g, b)).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((rms.row(i) - sp::rms_norm(row, g)).cwiseAbs().maxCoeff(), 1e-13);
  }
  EXPECT_THROW(sp::layer_norm(sp::Vector(sp::Vector::Ones(3)), g, b), std::invalid_argument);
}

TEST(Similarity, PairwiseCosineMatchesDirect) {
  sp::RngStream r(2, 2);
  const auto x = sp::gaussian_matrix<double>(r, 6, 20, 0.0, 1.0);
  const auto c = sp::pairwise_cosine(x);
  ASSERT_EQ(c.size(), 15u);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = i + 1; j < 6; ++j) {
      const double direct = x.row(i).dot(x.row(j)) / (x.row(i).norm() * x.row(j).norm());
      EXPECT_NEAR(c[k++], direct, 1e-14);
    }
  }
}

TEST(Similarity, ZeroRowRejected) {
  sp::Matrix x = sp::Matrix::Ones(3, 4);
  x.row(1).setZero();
  EXPECT_THROW(sp::pairwise_cosine(x), std::domain_error);
  EXPECT_THROW(sp::pairwise_cosine(sp::Matrix(sp::Matrix::Ones(1, 4))), std::invalid_argument);
}

TEST(Summary, MeanStdPopulation) {
  const std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
  const auto s = sp::mean_std(v);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
  EXPECT_EQ(s.n, 4u);
  const std::vector<double> big = {1e16, 1.0, -1e16, 1.0};
  EXPECT_DOUBLE_EQ(sp::mean_std(big).mean, 0.5);
}
