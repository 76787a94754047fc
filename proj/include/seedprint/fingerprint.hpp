// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "seedprint/numerics.hpp"
#include "seedprint/parallel.hpp"
#include "seedprint/probes.hpp"
#include "seedprint/stats.hpp"
#include "seedprint/transformer.hpp"

namespace seedprint {

enum class OutputKind { final_hidden, logits };

inline std::string to_string(OutputKind k) { return k == OutputKind::final_hidden ? "final_hidden" : "logits"; }
inline OutputKind output_kind_from_string(std::string_view s) {
  if (s == "final_hidden" || s == "final-hidden") return OutputKind::final_hidden;
  if (s == "logits") return OutputKind::logits;
  throw std::invalid_argument("unknown output kind: " + std::string(s));
}

enum class LineageTest { t, u, both };

inline std::string to_string(LineageTest k) {
  switch (k) {
    case LineageTest::t: return "t";
    case LineageTest::u: return "u";
    case LineageTest::both: return "both";
  }
  return "unknown";
}
inline LineageTest lineage_test_from_string(std::string_view s) {
  if (s == "t") return LineageTest::t;
  if (s == "u") return LineageTest::u;
  if (s == "both") return LineageTest::both;
  throw std::invalid_argument("unknown lineage test: " + std::string(s));
}

/// Per-probe outputs of one model on one probe batch (N x d_out).
struct ResponseMatrix {
  Matrix values;
  OutputKind kind = OutputKind::final_hidden;
  std::uint64_t batch_id = 0;
  std::string model_id;
};

/// Last-position output of every probe.
template <class Scalar>
ResponseMatrix response_matrix(const ModelConfig& config, const WeightSet<Scalar>& w, const ProbeBatch& batch,
                               OutputKind kind, std::string model_id = {}, std::size_t workers = 1) {
  if (kind == OutputKind::logits && batch.mode != InputMode::tokens) {
    throw std::invalid_argument("response_matrix: logits need a token batch");
  }
  ResponseMatrix r;
  r.kind = kind;
  r.batch_id = batch.id();
  r.model_id = std::move(model_id);
  const auto width = static_cast<Eigen::Index>(kind == OutputKind::logits ? config.vocab_size : config.d_model);
  r.values.resize(static_cast<Eigen::Index>(batch.n), width);
  TraceOptions opts;
  opts.logits = kind == OutputKind::logits ? LogitsMode::last : LogitsMode::none;
  parallel_for(batch.n, workers, [&](std::size_t i) {
    const auto trace = detail::run_probe(config, w, batch, i, opts);
    const auto row = static_cast<Eigen::Index>(i);
    if (kind == OutputKind::logits) {
      r.values.row(row) = trace.logits.row(0).template cast<double>();
    } else {
      r.values.row(row) = trace.final_norm.bottomRows(1).template cast<double>();
    }
  });
  return r;
}

inline Vector mean_output_vector(const Matrix& values) {
  if (values.rows() < 1) throw std::invalid_argument("mean_output_vector: no probes");
  return values.colwise().mean();
}

/// Indices of the m largest entries, ordered by value descending; equal values
/// keep the lower index first.
inline std::vector<std::size_t> top_m_dims(const Vector& gbar, std::size_t m) {
  const auto d = static_cast<std::size_t>(gbar.size());
  if (m < 1 || m > d) throw std::invalid_argument("top_m_dims: need 1 <= m <= d_out");
  std::vector<std::size_t> idx(d);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    const double va = gbar(static_cast<Eigen::Index>(a));
    const double vb = gbar(static_cast<Eigen::Index>(b));
    return va != vb ? va > vb : a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(m), idx.end(), before);
  idx.resize(m);
  return idx;
}

/// Set intersection, ascending.
inline std::vector<std::size_t> identity_dims(std::vector<std::size_t> a, std::vector<std::size_t> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

/// Kendall tau between the two models' responses on each identity dimension.
inline std::vector<double> correlation_distribution(const Matrix& ra, const Matrix& rb,
                                                    const std::vector<std::size_t>& dims, std::size_t workers = 1) {
  if (ra.rows() != rb.rows()) throw std::invalid_argument("correlation_distribution: probe count mismatch");
  if (dims.empty()) throw std::invalid_argument("correlation_distribution: empty identity set");
  std::vector<double> taus(dims.size());
  parallel_for(dims.size(), workers, [&](std::size_t k) {
    const auto j = static_cast<Eigen::Index>(dims[k]);
    if (j >= ra.cols() || j >= rb.cols()) throw std::out_of_range("correlation_distribution: dim out of range");
    const Vector a = ra.col(j).transpose();
    const Vector b = rb.col(j).transpose();
    taus[k] = kendall_tau(std::span<const double>(a.data(), a.size()), std::span<const double>(b.data(), b.size()));
  });
  return taus;
}

struct NullSample {
  std::vector<double> taus;
  std::size_t rounds = 0;
};

/// Full pipeline on pairs of independent N x d_out standard Gaussian matrices,
/// repeated until at least `min_taus` values exist or `max_rounds` is hit.
inline NullSample null_distribution(std::size_t n, std::size_t d_out, std::size_t m, RngStream rng,
                                    std::size_t min_taus = 30, std::size_t max_rounds = 100000) {
  if (n < 2) throw std::invalid_argument("null_distribution: need N >= 2");
  NullSample out;
  while (out.taus.size() < min_taus && out.rounds < max_rounds) {
    RngStream round = rng.substream(out.rounds++);
    const Matrix a = gaussian_matrix<double>(round, n, d_out, 0.0, 1.0);
    const Matrix b = gaussian_matrix<double>(round, n, d_out, 0.0, 1.0);
    const auto dims = identity_dims(top_m_dims(mean_output_vector(a), m), top_m_dims(mean_output_vector(b), m));
    if (dims.empty()) continue;
    const auto taus = correlation_distribution(a, b, dims);
    out.taus.insert(out.taus.end(), taus.begin(), taus.end());
  }
  return out;
}

struct LineageDecision {
  TestResult t;
  TestResult u;
  bool has_t = false;
  bool has_u = false;
  bool verdict = false;
  std::vector<std::string> warnings;
};

/// Tests H1: taus stochastically larger than null_taus. With `both`, each test
/// must clear alpha.
inline LineageDecision lineage_test(const std::vector<double>& taus, const std::vector<double>& null_taus, double alpha,
                                    LineageTest tests = LineageTest::t) {
  if (!(alpha > 0.0)) throw std::invalid_argument("lineage_test: alpha must be positive");
  LineageDecision d;
  if (alpha >= 1.0) d.warnings.push_back("alpha >= 1: every pair is declared same lineage");
  const bool want_t = tests != LineageTest::u;
  const bool want_u = tests != LineageTest::t;
  if (want_t) {
    if (taus.size() >= 2 && null_taus.size() >= 2) {
      d.t = welch_t_one_sided(taus, null_taus);
      d.has_t = true;
    } else {
      d.warnings.push_back("t-test skipped: fewer than two values in a sample");
    }
  }
  if (want_u && !taus.empty() && !null_taus.empty()) {
    d.u = mann_whitney_u(taus, null_taus);
    d.has_u = true;
  }
  if (alpha >= 1.0) {
    d.verdict = true;
    return d;
  }
  bool ok = true;
  if (want_t) ok = ok && d.has_t && d.t.p_value < alpha;
  if (want_u) ok = ok && d.has_u && d.u.p_value < alpha;
  d.verdict = ok;
  return d;
}

struct FingerprintOptions {
  std::size_t m = 50;
  double alpha = 0.01;
  LineageTest tests = LineageTest::t;
  std::uint64_t null_seed = 0x5eed;
  std::size_t min_null_taus = 30;
};

struct FingerprintReport {
  std::size_t m = 0;
  double alpha = 0.0;
  OutputKind output_kind = OutputKind::final_hidden;
  LineageTest tests = LineageTest::t;
  std::vector<std::size_t> dims_a, dims_b, identity;
  std::vector<double> taus;
  MeanStd tau_summary;
  MeanStd null_summary;
  std::size_t null_rounds = 0;
  TestResult p_t, p_u;
  bool has_t = false;
  bool has_u = false;
  bool verdict = false;
  std::string reason;
  std::vector<std::string> warnings;
  std::uint64_t batch_id = 0;
  std::string model_a, model_b;
};

inline FingerprintReport fingerprint(const ResponseMatrix& a, const ResponseMatrix& b, const FingerprintOptions& opt,
                                     std::size_t workers = 1) {
  if (a.batch_id != b.batch_id) throw std::invalid_argument("fingerprint: responses come from different probe batches");
  if (a.kind != b.kind) throw std::invalid_argument("fingerprint: output kinds differ");
  if (a.values.rows() != b.values.rows() || a.values.cols() != b.values.cols()) {
    throw std::invalid_argument("fingerprint: response shapes differ");
  }
  FingerprintReport r;
  r.m = opt.m;
  r.alpha = opt.alpha;
  r.output_kind = a.kind;
  r.tests = opt.tests;
  r.batch_id = a.batch_id;
  r.model_a = a.model_id;
  r.model_b = b.model_id;
  r.dims_a = top_m_dims(mean_output_vector(a.values), opt.m);
  r.dims_b = top_m_dims(mean_output_vector(b.values), opt.m);
  r.identity = identity_dims(r.dims_a, r.dims_b);
  if (r.identity.empty()) {
    r.verdict = false;
    r.reason = "insufficient overlap: no shared high-preference dimensions";
    return r;
  }
  r.taus = correlation_distribution(a.values, b.values, r.identity, workers);
  r.tau_summary = mean_std(r.taus);
  const auto null = null_distribution(static_cast<std::size_t>(a.values.rows()), static_cast<std::size_t>(a.values.cols()),
                                      opt.m, RngStream(opt.null_seed, 0), opt.min_null_taus);
  r.null_rounds = null.rounds;
  r.null_summary = mean_std(null.taus);
  if (null.taus.size() < opt.min_null_taus) r.warnings.push_back("null sample smaller than requested");
  auto d = lineage_test(r.taus, null.taus, opt.alpha, opt.tests);
  r.p_t = d.t;
  r.p_u = d.u;
  r.has_t = d.has_t;
  r.has_u = d.has_u;
  r.verdict = d.verdict;
  r.warnings.insert(r.warnings.end(), d.warnings.begin(), d.warnings.end());
  r.reason = r.verdict ? "correlated identity dimensions" : "identity dimensions not more correlated than null";
  return r;
}

inline void to_json(nlohmann::json& j, const FingerprintReport& r) {
  auto p_or_null = [](bool has, const TestResult& t) {
    return has ? nlohmann::json{{"statistic", t.statistic}, {"p_value", t.p_value}, {"log_p", t.log_p},
                                {"underflow", t.underflow}}
               : nlohmann::json(nullptr);
  };
  j = nlohmann::json{{"m", r.m},
                     {"alpha", r.alpha},
                     {"output_kind", to_string(r.output_kind)},
                     {"tests", to_string(r.tests)},
                     {"n_identity", r.identity.size()},
                     {"dims_a", r.dims_a},
                     {"dims_b", r.dims_b},
                     {"identity_dims", r.identity},
                     {"taus", r.taus},
                     {"tau_summary", {{"mean", r.tau_summary.mean}, {"std", r.tau_summary.std}}},
                     {"null_summary",
                      {{"n", r.null_summary.n}, {"mean", r.null_summary.mean}, {"std", r.null_summary.std},
                       {"rounds", r.null_rounds}}},
                     {"p_t", p_or_null(r.has_t, r.p_t)},
                     {"p_u", p_or_null(r.has_u, r.p_u)},
                     {"verdict", r.verdict},
                     {"reason", r.reason},
                     {"warnings", r.warnings},
                     {"probe_batch_id", r.batch_id},
                     {"model_a", r.model_a},
                     {"model_b", r.model_b}};
}

}  // namespace seedprint
