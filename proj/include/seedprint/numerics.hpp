// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/SpecialFunctions>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace seedprint {

/// Dense row-major matrix. Hidden states, attention maps and weights all live
/// in one of these; `Scalar` is double for analysis paths and float for the
/// throughput-bound model forward.
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = Mat<double>;
using MatrixF = Mat<float>;
using Vector = RowVec<double>;

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

namespace detail {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator keyed by (seed, stream id).
///
/// Draw n of stream (s, k) is splitmix64(key(s, k) + (n + 1) * golden), so a
/// stream is a pure function of its key and counter and any two keys give
/// independent sequences. Gaussians use Box-Muller: each pair consumes two
/// uniforms (u1 then u2) and yields r*cos(2*pi*u2) first, r*sin(2*pi*u2) second.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed),
        stream_(stream_id),
        key_(detail::splitmix64(seed ^ detail::splitmix64(stream_id + detail::kGolden))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return detail::splitmix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n) by rejection, n > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  double gaussian() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  /// Independent child stream; does not advance this stream.
  RngStream substream(std::uint64_t id) const noexcept {
    return RngStream(key_, detail::splitmix64(id) ^ stream_);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

/// i.i.d. N(mean, std^2) entries filled in row-major order.
template <class Scalar = double>
Mat<Scalar> gaussian_matrix(RngStream& rng, std::size_t rows, std::size_t cols,
                            double mean, double std_dev) {
  if (!(std_dev >= 0.0)) throw std::invalid_argument("gaussian_matrix: negative std");
  Mat<Scalar> out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  Scalar* data = out.data();
  const std::size_t n = rows * cols;
  if (std_dev == 0.0) {
    out.setConstant(static_cast<Scalar>(mean));
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    data[i] = static_cast<Scalar>(mean + std_dev * rng.gaussian());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

enum class Activation { relu, gelu, tanh, silu, swiglu };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::gelu: return "gelu";
    case Activation::tanh: return "tanh";
    case Activation::silu: return "silu";
    case Activation::swiglu: return "swiglu";
  }
  return "?";
}

inline Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "gelu") return Activation::gelu;
  if (s == "tanh") return Activation::tanh;
  if (s == "silu") return Activation::silu;
  if (s == "swiglu") return Activation::swiglu;
  throw std::invalid_argument("unknown activation: " + std::string(s));
}

/// Exact GELU, x * Phi(x).
inline double gelu(double x) noexcept {
  return 0.5 * x * std::erfc(-x * (1.0 / std::numbers::sqrt2));
}

inline double silu(double x) noexcept { return x / (1.0 + std::exp(-x)); }

template <class Derived>
void apply_activation_inplace(Activation kind, Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  switch (kind) {
    case Activation::relu:
      x = x.cwiseMax(Scalar(0));
      return;
    case Activation::gelu:
      if constexpr (std::is_same_v<Scalar, float>) {
        auto a = x.array();
        a = 0.5f * a * (1.0f + (a * static_cast<float>(1.0 / std::numbers::sqrt2)).erf());
      } else {
        x = x.unaryExpr([](Scalar v) { return static_cast<Scalar>(gelu(v)); });
      }
      return;
    case Activation::tanh:
      x = x.unaryExpr([](Scalar v) { return static_cast<Scalar>(std::tanh(v)); });
      return;
    case Activation::silu:
      x = x.unaryExpr([](Scalar v) { return static_cast<Scalar>(silu(v)); });
      return;
    case Activation::swiglu:
      throw std::invalid_argument("swiglu is gated and has no element-wise form");
  }
}

template <class Scalar>
Mat<Scalar> apply_activation(Activation kind, Mat<Scalar> x) {
  apply_activation_inplace(kind, x);
  return x;
}

// ---------------------------------------------------------------------------
// Softmax and normalization
// ---------------------------------------------------------------------------

/// Row-wise softmax with row-max subtraction. With `causal`, row i only sees
/// columns <= i and everything above the diagonal is exactly zero.
template <class Scalar>
Mat<Scalar> softmax_rows(const Mat<Scalar>& x, bool causal) {
  Mat<Scalar> out = Mat<Scalar>::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::Index width = causal ? std::min<Eigen::Index>(i + 1, x.cols()) : x.cols();
    const Scalar row_max = x.row(i).head(width).maxCoeff();
    if (!std::isfinite(static_cast<double>(row_max))) throw std::domain_error("softmax_rows: row has no finite entry");
    auto seg = out.row(i).head(width).array();
    seg = (x.row(i).head(width).array() - row_max).exp();
    const double total = seg.template cast<double>().sum();
    seg *= static_cast<Scalar>(1.0 / total);
  }
  return out;
}

inline constexpr double kDefaultNormEps = 1e-5;

template <class Scalar>
RowVec<Scalar> layer_norm(const RowVec<Scalar>& x, const RowVec<Scalar>& gamma,
                          const RowVec<Scalar>& beta, double eps = kDefaultNormEps) {
  if (gamma.size() != x.size() || beta.size() != x.size()) {
    throw std::invalid_argument("layer_norm: dimension mismatch");
  }
  const auto n = static_cast<double>(x.size());
  double mean = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) mean += x[i];
  mean /= n;
  double var = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) var += (x[i] - mean) * (x[i] - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  RowVec<Scalar> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out[i] = static_cast<Scalar>(gamma[i] * ((x[i] - mean) * inv) + beta[i]);
  }
  return out;
}

template <class Scalar>
RowVec<Scalar> rms_norm(const RowVec<Scalar>& x, const RowVec<Scalar>& gamma,
                        double eps = kDefaultNormEps) {
  if (gamma.size() != x.size()) throw std::invalid_argument("rms_norm: dimension mismatch");
  double ms = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) ms += double(x[i]) * x[i];
  ms /= static_cast<double>(x.size());
  const double inv = 1.0 / std::sqrt(ms + eps);
  RowVec<Scalar> out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = static_cast<Scalar>(gamma[i] * (x[i] * inv));
  return out;
}

/// Row-wise LayerNorm (beta non-empty) or RMSNorm (beta empty) over a matrix.
template <class Scalar>
Mat<Scalar> normalize_rows(const Mat<Scalar>& x, const RowVec<Scalar>& gamma,
                           const RowVec<Scalar>& beta, bool rms, double eps = kDefaultNormEps) {
  Mat<Scalar> out(x.rows(), x.cols());
  const auto n = static_cast<double>(x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar* in = x.row(r).data();
    Scalar* dst = out.row(r).data();
    double mean = 0.0;
    if (!rms) {
      for (Eigen::Index i = 0; i < x.cols(); ++i) mean += in[i];
      mean /= n;
    }
    double ss = 0.0;
    for (Eigen::Index i = 0; i < x.cols(); ++i) ss += (in[i] - mean) * (in[i] - mean);
    const double inv = 1.0 / std::sqrt(ss / n + eps);
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
      double v = gamma[i] * ((in[i] - mean) * inv);
      if (!rms) v += beta[i];
      dst[i] = static_cast<Scalar>(v);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Similarity
// ---------------------------------------------------------------------------

/// Unit-normalized copy of the rows, computed in double.
template <class Scalar>
Matrix unit_rows(const Mat<Scalar>& a) {
  Matrix u = a.template cast<double>();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double norm = u.row(i).norm();
    if (!(norm > 0.0)) throw std::domain_error("unit_rows: zero-norm row");
    u.row(i) /= norm;
  }
  return u;
}

/// Cosine of every unordered row pair, ordered (0,1), (0,2), ..., (1,2), ...
template <class Scalar>
std::vector<double> pairwise_cosine(const Mat<Scalar>& a) {
  if (a.rows() < 2) throw std::invalid_argument("pairwise_cosine: need at least two rows");
  const Matrix u = unit_rows(a);
  const Matrix gram = u * u.transpose();
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(a.rows());
  out.reserve(n * (n - 1) / 2);
  for (Eigen::Index i = 0; i < gram.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < gram.cols(); ++j) {
      out.push_back(std::clamp(gram(i, j), -1.0, 1.0));
    }
  }
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

/// Mean and population std with Neumaier-compensated sums.
inline MeanStd mean_std(std::span<const double> xs) {
  MeanStd out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  out.mean = (sum + comp) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return out;
}

}  // namespace seedprint
