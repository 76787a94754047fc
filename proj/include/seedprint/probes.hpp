// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "seedprint/numerics.hpp"
#include "seedprint/parallel.hpp"
#include "seedprint/transformer.hpp"

namespace seedprint {

/// A reproducible set of random probe sequences. Sequences are generated on
/// demand from (seed, sequence index), so a batch is cheap to hold and any
/// shard of it regenerates identically.
struct ProbeBatch {
  InputMode mode = InputMode::vectors;
  std::size_t n = 0;           // number of sequences
  std::size_t seq_len = 0;     // T
  std::size_t d_model = 0;     // vector mode width
  std::size_t vocab_size = 0;  // token mode range
  double vector_std = 0.02;
  std::uint64_t seed = 0;

  static ProbeBatch vectors(std::size_t n, std::size_t seq_len, std::size_t d_model, std::uint64_t seed,
                            double std_dev = 0.02) {
    return ProbeBatch{InputMode::vectors, n, seq_len, d_model, 0, std_dev, seed};
  }
  static ProbeBatch tokens(std::size_t n, std::size_t seq_len, std::size_t vocab_size, std::uint64_t seed) {
    return ProbeBatch{InputMode::tokens, n, seq_len, 0, vocab_size, 0.0, seed};
  }

  /// Identifier for "same probe batch" checks across models.
  std::uint64_t id() const {
    std::uint64_t h = detail::splitmix64(seed);
    for (std::uint64_t v : {std::uint64_t(mode), std::uint64_t(n), std::uint64_t(seq_len), std::uint64_t(d_model),
                            std::uint64_t(vocab_size)}) {
      h = detail::splitmix64(h ^ v);
    }
    return h;
  }

  template <class Scalar = float>
  Mat<Scalar> vector_sequence(std::size_t i) const {
    if (mode != InputMode::vectors) throw std::logic_error("ProbeBatch: not a vector batch");
    RngStream rng(seed, i);
    return gaussian_matrix<Scalar>(rng, seq_len, d_model, 0.0, vector_std);
  }

  std::vector<std::int32_t> token_sequence(std::size_t i) const {
    if (mode != InputMode::tokens) throw std::logic_error("ProbeBatch: not a token batch");
    RngStream rng(seed, i);
    std::vector<std::int32_t> out(seq_len);
    for (auto& t : out) t = static_cast<std::int32_t>(rng.below(vocab_size));
    return out;
  }
};

/// Per-layer inter- or intra-sequence similarity summary.
struct ContractionCurve {
  std::vector<double> mean;
  std::vector<double> std;
  std::size_t n = 0;
  std::size_t seq_len = 0;
};

namespace detail {

template <class Scalar>
ForwardTrace<Scalar> run_probe(const ModelConfig& config, const WeightSet<Scalar>& w, const ProbeBatch& batch,
                               std::size_t i, const TraceOptions& opts) {
  if (batch.mode == InputMode::tokens) {
    const auto toks = batch.token_sequence(i);
    return forward(config, w, std::span<const std::int32_t>(toks), opts);
  }
  return forward(config, w, batch.vector_sequence<Scalar>(i), opts);
}

inline TraceOptions hidden_only() {
  TraceOptions o;
  o.logits = LogitsMode::none;
  return o;
}

}  // namespace detail

/// Count of argmax-logit tokens at the final position across the batch.
template <class Scalar>
std::map<std::int64_t, std::size_t> next_token_histogram(const ModelConfig& config, const WeightSet<Scalar>& w,
                                                         const ProbeBatch& batch, std::size_t workers = 1) {
  if (batch.mode != InputMode::tokens) throw std::invalid_argument("next_token_histogram: needs a token batch");
  std::vector<std::int64_t> top(batch.n);
  TraceOptions opts = detail::hidden_only();
  opts.logits = LogitsMode::last;
  parallel_for(batch.n, workers, [&](std::size_t i) {
    const auto trace = detail::run_probe(config, w, batch, i, opts);
    top[i] = argmax_lowest(trace.logits.row(0));
  });
  std::map<std::int64_t, std::size_t> hist;
  for (auto t : top) ++hist[t];
  return hist;
}

enum class LayerSelector { each_layer, final_norm, each_layer_and_final };

/// Last-token representations: one N x d matrix per hidden state (each_layer,
/// index 0 = input), a single final-norm matrix, or both with final norm last.
template <class Scalar>
std::vector<Matrix> last_token_reps(const ModelConfig& config, const WeightSet<Scalar>& w, const ProbeBatch& batch,
                                    LayerSelector selector, std::size_t workers = 1) {
  const std::size_t n_hidden = selector == LayerSelector::final_norm ? 0 : config.n_layers + 1;
  const std::size_t n_mats = n_hidden + (selector == LayerSelector::each_layer ? 0 : 1);
  const auto d = static_cast<Eigen::Index>(config.d_model);
  std::vector<Matrix> out(n_mats, Matrix(static_cast<Eigen::Index>(batch.n), d));
  parallel_for(batch.n, workers, [&](std::size_t i) {
    const auto trace = detail::run_probe(config, w, batch, i, detail::hidden_only());
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t l = 0; l < n_hidden; ++l) out[l].row(row) = trace.hidden[l].bottomRows(1).template cast<double>();
    if (selector != LayerSelector::each_layer) {
      out[n_hidden].row(row) = trace.final_norm.bottomRows(1).template cast<double>();
    }
  });
  return out;
}

/// Mean and std of pairwise cosine of last-token reps after each block.
template <class Scalar>
ContractionCurve contraction_curve(const ModelConfig& config, const WeightSet<Scalar>& w, const ProbeBatch& batch,
                                   std::size_t workers = 1) {
  const auto reps = last_token_reps(config, w, batch, LayerSelector::each_layer, workers);
  ContractionCurve c;
  c.n = batch.n;
  c.seq_len = batch.seq_len;
  for (const auto& r : reps) {
    const auto sims = pairwise_cosine(r);
    const auto s = mean_std(sims);
    c.mean.push_back(s.mean);
    c.std.push_back(s.std);
  }
  return c;
}

/// Mean off-diagonal cosine among the rows of one sequence.
template <class Scalar>
double mean_offdiagonal_cosine(const Mat<Scalar>& seq) {
  const auto T = seq.rows();
  if (T < 2) return 1.0;
  const Matrix u = unit_rows(seq);
  const Vector total = u.colwise().sum();
  // sum_{i != j} u_i . u_j = |sum u|^2 - T
  return (total.squaredNorm() - static_cast<double>(T)) / (static_cast<double>(T) * static_cast<double>(T - 1));
}

/// Per layer: mean over sequences of the within-sequence mean pairwise cosine
/// (diagonal excluded). Entry k is after k blocks; entry 0 is the input.
template <class Scalar>
ContractionCurve intra_sequence_curve(const ModelConfig& config, const WeightSet<Scalar>& w, const ProbeBatch& batch,
                                      std::size_t workers = 1) {
  const std::size_t n_mats = config.n_layers + 1;
  std::vector<std::vector<double>> per_seq(n_mats, std::vector<double>(batch.n));
  parallel_for(batch.n, workers, [&](std::size_t i) {
    const auto trace = detail::run_probe(config, w, batch, i, detail::hidden_only());
    for (std::size_t l = 0; l < n_mats; ++l) per_seq[l][i] = mean_offdiagonal_cosine(trace.hidden[l]);
  });
  ContractionCurve c;
  c.n = batch.n;
  c.seq_len = batch.seq_len;
  for (const auto& v : per_seq) {
    const auto s = mean_std(v);
    c.mean.push_back(s.mean);
    c.std.push_back(s.std);
  }
  return c;
}

/// Std (over sequences and features) of the first layer's post-aggregation
/// attention output at each position.
template <class Scalar>
std::vector<double> positional_std_profile(const ModelConfig& config, const WeightSet<Scalar>& w,
                                           const ProbeBatch& batch, std::size_t workers = 1) {
  if (!config.has_attention()) throw std::invalid_argument("positional_std_profile: model has no attention");
  TraceOptions opts = detail::hidden_only();
  opts.aggregated = true;
  opts.max_layers = 1;
  const auto T = static_cast<Eigen::Index>(batch.seq_len);
  std::vector<Matrix> sums(batch.n, Matrix::Zero(T, 2));
  parallel_for(batch.n, workers, [&](std::size_t i) {
    const auto trace = detail::run_probe(config, w, batch, i, opts);
    const Matrix o = trace.aggregated.front().template cast<double>();
    sums[i].col(0) = o.rowwise().sum();
    sums[i].col(1) = o.rowwise().squaredNorm();
  });
  Matrix total = Matrix::Zero(T, 2);
  for (const auto& s : sums) total += s;
  const double count = static_cast<double>(batch.n) * static_cast<double>(config.d_model);
  std::vector<double> out(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    const double mean = total(t, 0) / count;
    out[static_cast<std::size_t>(t)] = std::sqrt(std::max(0.0, total(t, 1) / count - mean * mean));
  }
  return out;
}

/// Std of layer-1 MLP pre-activation entries, with or without the pre-MLP norm.
template <class Scalar>
double preactivation_std(const ModelConfig& config, const WeightSet<Scalar>& w, const ProbeBatch& batch,
                         bool with_norm, std::size_t workers = 1) {
  if (!config.has_mlp()) throw std::invalid_argument("preactivation_std: model has no MLP");
  TraceOptions opts = detail::hidden_only();
  opts.preactivations = true;
  opts.max_layers = 1;
  opts.bypass_sublayer_norm = !with_norm;
  std::vector<std::array<double, 3>> acc(batch.n);
  parallel_for(batch.n, workers, [&](std::size_t i) {
    const auto trace = detail::run_probe(config, w, batch, i, opts);
    const Matrix p = trace.preactivations.front().template cast<double>();
    acc[i] = {p.sum(), p.squaredNorm(), static_cast<double>(p.size())};
  });
  double s = 0, ss = 0, n = 0;
  for (const auto& a : acc) {
    s += a[0];
    ss += a[1];
    n += a[2];
  }
  const double mean = s / n;
  return std::sqrt(std::max(0.0, ss / n - mean * mean));
}

struct ContractionDirection {
  Vector direction;
  std::int64_t aligned_token = -1;
};

/// Mean of final-norm reps and the token whose unembedding column it favors.
/// Pass an empty unembedding (0 x 0) to skip the token lookup.
template <class Scalar>
ContractionDirection contraction_direction(const Matrix& reps, const Mat<Scalar>& unembedding) {
  if (reps.rows() < 1) throw std::invalid_argument("contraction_direction: no reps");
  ContractionDirection out;
  out.direction = reps.colwise().mean();
  if (unembedding.size() > 0) {
    if (unembedding.rows() != reps.cols()) throw std::invalid_argument("contraction_direction: width mismatch");
    const Vector scores = out.direction * unembedding.template cast<double>();
    out.aligned_token = argmax_lowest(scores);
  }
  return out;
}

/// Same as above for the tied case, reading embed^T without materializing it.
template <class Scalar>
ContractionDirection contraction_direction(const Matrix& reps, const WeightSet<Scalar>& w) {
  ContractionDirection out;
  if (reps.rows() < 1) throw std::invalid_argument("contraction_direction: no reps");
  out.direction = reps.colwise().mean();
  Vector scores;
  if (w.tied) {
    const RowVec<Scalar> dir = out.direction.template cast<Scalar>();
    scores = (w.embed * dir.transpose()).transpose().template cast<double>();
  } else {
    scores = out.direction * w.unembed.template cast<double>();
  }
  out.aligned_token = argmax_lowest(scores);
  return out;
}

}  // namespace seedprint
