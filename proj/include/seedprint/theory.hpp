// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace seedprint::theory {

using Rational = boost::multiprecision::cpp_rational;

/// ReLU arc-cosine correlation map: correlation of ReLU features for inputs
/// with correlation rho.
inline double relu_correlation_map(double rho) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw std::domain_error("relu_correlation_map: |rho| > 1");
  return (std::sqrt(1.0 - rho * rho) + (std::numbers::pi - std::acos(rho)) * rho) / std::numbers::pi;
}

struct RecurrenceTrace {
  std::vector<double> rho_by_layer;  // entry k-1 is the value after k layers
};

/// Iterates the ReLU map from rho = 0 for `layers` steps.
inline RecurrenceTrace relu_correlation_after(std::size_t layers) {
  RecurrenceTrace t;
  t.rho_by_layer.reserve(layers);
  double rho = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    rho = relu_correlation_map(rho);
    t.rho_by_layer.push_back(rho);
  }
  return t;
}

/// Expected inter-sequence similarity of a tanh MLP chain at any depth.
inline double tanh_correlation_after(std::size_t /*layers*/) { return 0.0; }

/// Similarity after MLP then prefix-mean attention over T tokens.
inline double attn_amplifier_similarity(std::size_t seq_len) {
  if (seq_len < 1) throw std::invalid_argument("attn_amplifier_similarity: T must be >= 1");
  const double rho1 = 1.0 / std::numbers::pi;
  const double t = static_cast<double>(seq_len);
  return t * rho1 / (t * rho1 + 1.0 - rho1);
}

/// Similarity after two stacked ReLU MLP blocks.
inline double mlp_mlp_similarity() { return relu_correlation_map(relu_correlation_map(0.0)); }

/// Large-L approximation of intra-sequence similarity.
inline double intra_similarity_approx(std::size_t seq_len, std::size_t layers) {
  if (seq_len < 1 || layers < 1) throw std::invalid_argument("intra_similarity_approx: T, L must be >= 1");
  const double t = static_cast<double>(seq_len);
  const double l = static_cast<double>(layers);
  return 1.0 - (1.0 - 1.0 / t) / (l * l);
}

/// Exact rational value of the T -> infinity intra-sequence similarity.
inline Rational intra_similarity_closed_form_exact(std::size_t layers) {
  if (layers < 2) throw std::invalid_argument("intra_similarity_closed_form: L must be >= 2");
  using boost::multiprecision::cpp_int;
  const unsigned n = static_cast<unsigned>(layers - 2);
  auto factorial = [](unsigned k) {
    cpp_int f = 1;
    for (unsigned i = 2; i <= k; ++i) f *= i;
    return f;
  };
  const Rational two_thirds(2, 3);
  Rational sum = 0;
  for (unsigned k = 0; k <= n; ++k) {
    Rational term(factorial(n + k), factorial(k));
    for (unsigned p = 0; p < n + 1 - k; ++p) term *= two_thirds;
    sum += term;
  }
  return sum * Rational(factorial(n), factorial(2 * n));
}

inline double intra_similarity_closed_form(std::size_t layers) {
  return intra_similarity_closed_form_exact(layers).convert_to<double>();
}

/// Closed form plus the 1/T diagonal correction.
inline double intra_similarity_finite(std::size_t seq_len, std::size_t layers) {
  if (seq_len < 1) throw std::invalid_argument("intra_similarity_finite: T must be >= 1");
  const double rho = intra_similarity_closed_form(layers);
  return rho + (1.0 - rho) / static_cast<double>(seq_len);
}

/// Variance of the prefix-mean output at 1-based position i.
inline double variance_decay(std::size_t position, double sigma2) {
  if (position < 1) throw std::invalid_argument("variance_decay: position is 1-based");
  return sigma2 / static_cast<double>(position);
}

}  // namespace seedprint::theory
