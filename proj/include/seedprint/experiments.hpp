// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "seedprint/numerics.hpp"
#include "seedprint/parallel.hpp"
#include "seedprint/probes.hpp"
#include "seedprint/transformer.hpp"

// Monte Carlo drivers for the simplified-block experiments. Weights of the
// simplified blocks are N(0, 1/fan_in) so activations stay O(1) at any width.

namespace seedprint::experiments {

/// Mean cosine between matched rows of a and b.
inline double mean_row_cosine(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("mean_row_cosine: shape mismatch");
  const Matrix ua = unit_rows(a);
  const Matrix ub = unit_rows(b);
  return ua.cwiseProduct(ub).rowwise().sum().mean();
}

struct Mlp0Layer {
  Matrix w_up, w_down;
};

inline Mlp0Layer random_mlp0(RngStream& rng, std::size_t d, std::size_t d_mlp) {
  Mlp0Layer l;
  l.w_up = gaussian_matrix<double>(rng, d, d_mlp, 0.0, 1.0 / std::sqrt(static_cast<double>(d)));
  l.w_down = gaussian_matrix<double>(rng, d_mlp, d, 0.0, 1.0 / std::sqrt(static_cast<double>(d_mlp)));
  return l;
}

/// Inter-sequence similarity through a stack of MLP0 blocks. Entry k-1 is the
/// mean cosine between n_pairs independent input pairs after k blocks.
inline std::vector<double> mlp0_chain_similarity(std::size_t d, std::size_t d_mlp, std::size_t n_pairs,
                                                 std::size_t depth, Activation act, std::uint64_t seed) {
  RngStream inputs(seed, 0);
  Matrix x = gaussian_matrix<double>(inputs, n_pairs, d, 0.0, 1.0);
  Matrix y = gaussian_matrix<double>(inputs, n_pairs, d, 0.0, 1.0);
  std::vector<double> out;
  for (std::size_t l = 0; l < depth; ++l) {
    RngStream wr(seed, 1 + l);
    const auto layer = random_mlp0(wr, d, d_mlp);
    x = mlp0_block(x, layer.w_up, layer.w_down, act);
    y = mlp0_block(y, layer.w_up, layer.w_down, act);
    out.push_back(mean_row_cosine(x, y));
  }
  return out;
}

struct AmplificationResult {
  double first_layer = 0.0;  // after one shared ReLU MLP0
  double mlp_mlp = 0.0;      // then a second MLP0
  double attn_mlp = 0.0;     // then prefix-mean attention, last token
};

/// Shared first MLP0 on pairs of T-token sequences, then either a second MLP0
/// (compared at the last token) or Attn0 (last token = mean of all T).
inline AmplificationResult amplification_experiment(std::size_t d, std::size_t d_mlp, std::size_t n_pairs,
                                                    std::size_t seq_len, std::uint64_t seed,
                                                    std::size_t workers = 1) {
  RngStream w1(seed, 1), w2(seed, 2);
  const auto first = random_mlp0(w1, d, d_mlp);
  const auto second = random_mlp0(w2, d, d_mlp);
  const auto dd = static_cast<Eigen::Index>(d);
  Matrix h1a(static_cast<Eigen::Index>(n_pairs), dd), h1b(h1a.rows(), dd);
  Matrix attn_a(h1a.rows(), dd), attn_b(h1a.rows(), dd);
  parallel_for(n_pairs, workers, [&](std::size_t i) {
    RngStream in(seed, 100 + i);
    const Matrix a = gaussian_matrix<double>(in, seq_len, d, 0.0, 1.0);
    const Matrix b = gaussian_matrix<double>(in, seq_len, d, 0.0, 1.0);
    const Matrix ha = mlp0_block(a, first.w_up, first.w_down, Activation::relu);
    const Matrix hb = mlp0_block(b, first.w_up, first.w_down, Activation::relu);
    const auto row = static_cast<Eigen::Index>(i);
    h1a.row(row) = ha.bottomRows(1);
    h1b.row(row) = hb.bottomRows(1);
    attn_a.row(row) = attn0_block(ha).bottomRows(1);
    attn_b.row(row) = attn0_block(hb).bottomRows(1);
  });
  AmplificationResult r;
  r.first_layer = mean_row_cosine(h1a, h1b);
  r.mlp_mlp = mean_row_cosine(mlp0_block(h1a, second.w_up, second.w_down, Activation::relu),
                              mlp0_block(h1b, second.w_up, second.w_down, Activation::relu));
  r.attn_mlp = mean_row_cosine(attn_a, attn_b);
  return r;
}

/// Intra-sequence similarity (off-diagonal mean cosine) of Gaussian sequences
/// after 0..max_blocks Attn0 applications; entry k is after k blocks.
inline std::vector<double> attn0_intra_similarity(std::size_t d, std::size_t seq_len, std::size_t n_seq,
                                                  std::size_t max_blocks, std::uint64_t seed,
                                                  std::size_t workers = 1) {
  std::vector<std::vector<double>> per(n_seq, std::vector<double>(max_blocks + 1));
  parallel_for(n_seq, workers, [&](std::size_t i) {
    RngStream in(seed, i);
    Matrix x = gaussian_matrix<double>(in, seq_len, d, 0.0, 1.0);
    per[i][0] = mean_offdiagonal_cosine(x);
    for (std::size_t k = 1; k <= max_blocks; ++k) {
      x = attn0_block(x);
      per[i][k] = mean_offdiagonal_cosine(x);
    }
  });
  std::vector<double> out(max_blocks + 1, 0.0);
  for (const auto& p : per) {
    for (std::size_t k = 0; k <= max_blocks; ++k) out[k] += p[k] / static_cast<double>(n_seq);
  }
  return out;
}

/// Least-squares c in std_i ~ c / sqrt(i) over 1-based positions [from, to].
inline double fit_inverse_sqrt(const std::vector<double>& profile, std::size_t from, std::size_t to) {
  if (from < 1 || to > profile.size() || from > to) throw std::invalid_argument("fit_inverse_sqrt: bad range");
  double num = 0.0, den = 0.0;
  for (std::size_t i = from; i <= to; ++i) {
    const double basis = 1.0 / std::sqrt(static_cast<double>(i));
    num += profile[i - 1] * basis;
    den += basis * basis;
  }
  return num / den;
}

}  // namespace seedprint::experiments
