// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seedprint/numerics.hpp"
#include "seedprint/parallel.hpp"
#include "seedprint/probes.hpp"
#include "seedprint/transformer.hpp"

namespace seedprint {

/// Mean attention weight on the first position, over all T query rows.
template <class Derived>
double first_token_importance(const Eigen::MatrixBase<Derived>& attn) {
  if (attn.rows() < 1 || attn.cols() < 1) throw std::invalid_argument("first_token_importance: empty map");
  double s = 0.0;
  for (Eigen::Index i = 0; i < attn.rows(); ++i) s += static_cast<double>(attn(i, 0));
  return s / static_cast<double>(attn.rows());
}

enum class SinkAveraging {
  alpha_first,    // average alpha over sequences, then threshold
  per_sequence,   // threshold each sequence, then average the rates
};

inline std::string to_string(SinkAveraging a) {
  return a == SinkAveraging::alpha_first ? "alpha_first" : "per_sequence";
}
inline SinkAveraging sink_averaging_from_string(std::string_view s) {
  if (s == "alpha_first") return SinkAveraging::alpha_first;
  if (s == "per_sequence") return SinkAveraging::per_sequence;
  throw std::invalid_argument("unknown sink averaging: " + std::string(s));
}

/// Per-sequence first-token importance, one n_layers x n_heads table each.
using SinkAlphas = std::vector<Matrix>;

struct SinkSummary {
  double epsilon = 0.25;
  SinkAveraging averaging = SinkAveraging::alpha_first;
  std::size_t n_sequences = 0;
  Matrix alpha;  // layer x head, averaged over sequences
  double rate = 0.0;
};

/// Alphas from a per-sequence set of attention maps ([layer][head] T x T).
template <class Scalar>
Matrix head_alphas(const std::vector<std::vector<Mat<Scalar>>>& maps) {
  if (maps.empty() || maps.front().empty()) throw std::invalid_argument("head_alphas: no attention maps");
  Matrix out(static_cast<Eigen::Index>(maps.size()), static_cast<Eigen::Index>(maps.front().size()));
  for (std::size_t l = 0; l < maps.size(); ++l) {
    if (maps[l].size() != maps.front().size()) throw std::invalid_argument("head_alphas: ragged head count");
    for (std::size_t h = 0; h < maps[l].size(); ++h) {
      out(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(h)) = first_token_importance(maps[l][h]);
    }
  }
  return out;
}

inline SinkSummary sink_rate(const SinkAlphas& alphas, double epsilon,
                             SinkAveraging averaging = SinkAveraging::alpha_first) {
  if (alphas.empty()) throw std::invalid_argument("sink_rate: no sequences");
  SinkSummary s;
  s.epsilon = epsilon;
  s.averaging = averaging;
  s.n_sequences = alphas.size();
  s.alpha = Matrix::Zero(alphas.front().rows(), alphas.front().cols());
  double per_seq_rate = 0.0;
  for (const auto& a : alphas) {
    if (a.rows() != s.alpha.rows() || a.cols() != s.alpha.cols()) throw std::invalid_argument("sink_rate: shape mismatch");
    s.alpha += a;
    per_seq_rate += static_cast<double>((a.array() > epsilon).count()) / static_cast<double>(a.size());
  }
  s.alpha /= static_cast<double>(alphas.size());
  if (averaging == SinkAveraging::alpha_first) {
    s.rate = static_cast<double>((s.alpha.array() > epsilon).count()) / static_cast<double>(s.alpha.size());
  } else {
    s.rate = per_seq_rate / static_cast<double>(alphas.size());
  }
  return s;
}

/// Runs the batch and collects alphas for every (layer, head).
template <class Scalar>
SinkAlphas collect_sink_alphas(const ModelConfig& config, const WeightSet<Scalar>& w, const ProbeBatch& batch,
                               std::size_t workers = 1) {
  if (!config.has_attention()) throw std::invalid_argument("collect_sink_alphas: model has no attention");
  TraceOptions opts;
  opts.logits = LogitsMode::none;
  opts.attention_maps = true;
  SinkAlphas out(batch.n);
  parallel_for(batch.n, workers, [&](std::size_t i) {
    const auto trace = detail::run_probe(config, w, batch, i, opts);
    out[i] = head_alphas(trace.attention);
  });
  return out;
}

inline void to_json(nlohmann::json& j, const SinkSummary& s) {
  nlohmann::json table = nlohmann::json::array();
  for (Eigen::Index l = 0; l < s.alpha.rows(); ++l) {
    std::vector<double> row(s.alpha.row(l).begin(), s.alpha.row(l).end());
    table.push_back(row);
  }
  j = nlohmann::json{{"epsilon", s.epsilon},
                     {"averaging", to_string(s.averaging)},
                     {"n_sequences", s.n_sequences},
                     {"sink_rate", s.rate},
                     {"alpha", table}};
}

/// layer,head,alpha,is_sink rows.
inline std::string sink_csv(const SinkSummary& s) {
  std::ostringstream out;
  out.precision(17);
  out << "layer,head,alpha,is_sink\n";
  for (Eigen::Index l = 0; l < s.alpha.rows(); ++l) {
    for (Eigen::Index h = 0; h < s.alpha.cols(); ++h) {
      out << l << ',' << h << ',' << s.alpha(l, h) << ',' << (s.alpha(l, h) > s.epsilon ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

}  // namespace seedprint
