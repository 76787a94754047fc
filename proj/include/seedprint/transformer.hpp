// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "seedprint/numerics.hpp"

namespace seedprint {

enum class NormKind { layernorm, rmsnorm };
enum class PosEncoding { none, rope };
enum class Ablation { full, attn_only, mlp_only };
enum class Calibration { none, amplify, attenuate };
enum class InputMode { tokens, vectors };

inline std::string_view to_string(NormKind v) { return v == NormKind::layernorm ? "layernorm" : "rmsnorm"; }
inline std::string_view to_string(PosEncoding v) { return v == PosEncoding::none ? "none" : "rope"; }
inline std::string_view to_string(Ablation v) {
  switch (v) {
    case Ablation::full: return "full";
    case Ablation::attn_only: return "attn_only";
    case Ablation::mlp_only: return "mlp_only";
  }
  return "?";
}
inline std::string_view to_string(Calibration v) {
  switch (v) {
    case Calibration::none: return "none";
    case Calibration::amplify: return "amplify";
    case Calibration::attenuate: return "attenuate";
  }
  return "?";
}
inline std::string_view to_string(InputMode v) { return v == InputMode::tokens ? "tokens" : "vectors"; }

inline NormKind norm_kind_from_string(std::string_view s) {
  if (s == "layernorm") return NormKind::layernorm;
  if (s == "rmsnorm") return NormKind::rmsnorm;
  throw std::invalid_argument("unknown norm kind: " + std::string(s));
}
inline PosEncoding pos_encoding_from_string(std::string_view s) {
  if (s == "none") return PosEncoding::none;
  if (s == "rope") return PosEncoding::rope;
  throw std::invalid_argument("unknown positional encoding: " + std::string(s));
}
inline Ablation ablation_from_string(std::string_view s) {
  if (s == "full") return Ablation::full;
  if (s == "attn_only" || s == "attn-only") return Ablation::attn_only;
  if (s == "mlp_only" || s == "mlp-only") return Ablation::mlp_only;
  throw std::invalid_argument("unknown ablation: " + std::string(s));
}
inline Calibration calibration_from_string(std::string_view s) {
  if (s == "none") return Calibration::none;
  if (s == "amplify") return Calibration::amplify;
  if (s == "attenuate") return Calibration::attenuate;
  throw std::invalid_argument("unknown calibration: " + std::string(s));
}
inline InputMode input_mode_from_string(std::string_view s) {
  if (s == "tokens") return InputMode::tokens;
  if (s == "vectors") return InputMode::vectors;
  throw std::invalid_argument("unknown input mode: " + std::string(s));
}

/// Architecture, ablation and calibration description of one model instance.
struct ModelConfig {
  std::size_t d_model = 768;
  std::size_t n_layers = 12;
  std::size_t n_heads = 12;
  std::size_t d_mlp = 3072;
  std::size_t vocab_size = 50257;
  std::size_t max_seq = 1024;
  NormKind norm_kind = NormKind::layernorm;
  Activation activation = Activation::gelu;
  PosEncoding pos_encoding = PosEncoding::rope;
  bool weight_tying = true;
  Ablation ablation = Ablation::full;
  Calibration calibration = Calibration::none;
  InputMode input_mode = InputMode::tokens;
  double init_std = 0.02;
  double norm_eps = kDefaultNormEps;
  double rope_base = 10000.0;

  std::size_t d_head() const { return n_heads == 0 ? 0 : d_model / n_heads; }

  void validate() const {
    if (d_model == 0 || n_heads == 0 || n_layers == 0) {
      throw std::invalid_argument("config: d_model, n_heads and n_layers must be positive");
    }
    if (d_model % n_heads != 0) throw std::invalid_argument("config: d_model must equal n_heads * d_head");
    if (d_mlp < d_model) throw std::invalid_argument("config: d_mlp must be >= d_model");
    if (input_mode == InputMode::tokens && vocab_size < 2) {
      throw std::invalid_argument("config: vocab_size must be >= 2 in token mode");
    }
    if (max_seq == 0) throw std::invalid_argument("config: max_seq must be positive");
    if (pos_encoding == PosEncoding::rope && d_head() % 2 != 0) {
      throw std::invalid_argument("config: rope needs an even head dimension");
    }
    if (!(init_std >= 0.0) || !(norm_eps >= 0.0)) throw std::invalid_argument("config: negative std or eps");
  }

  bool has_attention() const { return ablation != Ablation::mlp_only; }
  bool has_mlp() const { return ablation != Ablation::attn_only; }

  /// Std of W_O and W_down: init_std / sqrt(2L).
  double residual_std() const { return init_std / std::sqrt(2.0 * static_cast<double>(n_layers)); }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"d_model", c.d_model},
                     {"n_layers", c.n_layers},
                     {"n_heads", c.n_heads},
                     {"d_head", c.d_head()},
                     {"d_mlp", c.d_mlp},
                     {"vocab_size", c.vocab_size},
                     {"max_seq", c.max_seq},
                     {"norm_kind", to_string(c.norm_kind)},
                     {"activation", to_string(c.activation)},
                     {"pos_encoding", to_string(c.pos_encoding)},
                     {"weight_tying", c.weight_tying},
                     {"ablation", to_string(c.ablation)},
                     {"calibration", to_string(c.calibration)},
                     {"input_mode", to_string(c.input_mode)},
                     {"init_std", c.init_std},
                     {"norm_eps", c.norm_eps},
                     {"rope_base", c.rope_base}};
}

/// Missing keys keep their defaults; unknown enum strings throw.
inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("d_model", c.d_model);
  get("n_layers", c.n_layers);
  get("n_heads", c.n_heads);
  get("d_mlp", c.d_mlp);
  get("vocab_size", c.vocab_size);
  get("max_seq", c.max_seq);
  get("weight_tying", c.weight_tying);
  get("init_std", c.init_std);
  get("norm_eps", c.norm_eps);
  get("rope_base", c.rope_base);
  if (j.contains("norm_kind")) c.norm_kind = norm_kind_from_string(j.at("norm_kind").get<std::string>());
  if (j.contains("activation")) c.activation = activation_from_string(j.at("activation").get<std::string>());
  if (j.contains("pos_encoding")) c.pos_encoding = pos_encoding_from_string(j.at("pos_encoding").get<std::string>());
  if (j.contains("ablation")) c.ablation = ablation_from_string(j.at("ablation").get<std::string>());
  if (j.contains("calibration")) c.calibration = calibration_from_string(j.at("calibration").get<std::string>());
  if (j.contains("input_mode")) c.input_mode = input_mode_from_string(j.at("input_mode").get<std::string>());
  if (j.contains("d_head") && c.n_heads != 0 && j.at("d_head").get<std::size_t>() * c.n_heads != c.d_model) {
    throw std::invalid_argument("config: d_head inconsistent with d_model / n_heads");
  }
}

// ---------------------------------------------------------------------------
// Weights
// ---------------------------------------------------------------------------

template <class Scalar>
struct LayerWeights {
  Mat<Scalar> wq, wk, wv, wo;        // d x d; head h owns columns [h*dh, (h+1)*dh)
  Mat<Scalar> w_up, w_gate, w_down;  // d x d_mlp, d x d_mlp (swiglu only), d_mlp x d
  RowVec<Scalar> attn_norm_gamma, attn_norm_beta;
  RowVec<Scalar> mlp_norm_gamma, mlp_norm_beta;  // beta empty under rmsnorm
};

/// All tensors of one model. When tied, `unembed` stays empty and the LM head
/// reads `embed` transposed, so the two can never drift apart.
template <class Scalar>
struct WeightSet {
  Mat<Scalar> embed;  // vocab x d; empty in vector-input mode
  std::vector<LayerWeights<Scalar>> layers;
  RowVec<Scalar> final_norm_gamma, final_norm_beta;
  Mat<Scalar> unembed;  // d x vocab when untied
  bool tied = true;

  auto unembedding() const {
    return tied ? Mat<Scalar>(embed.transpose()) : unembed;
  }

  template <class To>
  WeightSet<To> cast() const {
    WeightSet<To> out;
    out.embed = embed.template cast<To>();
    out.unembed = unembed.template cast<To>();
    out.tied = tied;
    out.final_norm_gamma = final_norm_gamma.template cast<To>();
    out.final_norm_beta = final_norm_beta.template cast<To>();
    out.layers.reserve(layers.size());
    for (const auto& l : layers) {
      LayerWeights<To> c;
      c.wq = l.wq.template cast<To>();
      c.wk = l.wk.template cast<To>();
      c.wv = l.wv.template cast<To>();
      c.wo = l.wo.template cast<To>();
      c.w_up = l.w_up.template cast<To>();
      c.w_gate = l.w_gate.template cast<To>();
      c.w_down = l.w_down.template cast<To>();
      c.attn_norm_gamma = l.attn_norm_gamma.template cast<To>();
      c.attn_norm_beta = l.attn_norm_beta.template cast<To>();
      c.mlp_norm_gamma = l.mlp_norm_gamma.template cast<To>();
      c.mlp_norm_beta = l.mlp_norm_beta.template cast<To>();
      out.layers.push_back(std::move(c));
    }
    return out;
  }
};

/// A named view of one tensor; vectors appear as 1 x n.
template <class Ptr>
struct TensorRef {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  Ptr data;
};

/// Canonical tensor order shared by the checkpoint writer and reader.
/// Empty tensors (no embedding in vector mode, no gate without swiglu, no
/// beta under rmsnorm, no unembed when tied) are skipped. Works on const and
/// mutable weight sets.
template <class WS, class Fn>
void for_each_tensor(WS& w, Fn&& fn) {
  auto visit = [&](const std::string& name, auto& m) {
    if (m.size() == 0) return;
    using Ptr = decltype(m.data());
    fn(TensorRef<Ptr>{name, m.rows(), m.cols(), m.data()});
  };
  visit("embed", w.embed);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    auto& L = w.layers[l];
    const std::string p = "layers." + std::to_string(l) + ".";
    visit(p + "attn_norm.gamma", L.attn_norm_gamma);
    visit(p + "attn_norm.beta", L.attn_norm_beta);
    visit(p + "attn.wq", L.wq);
    visit(p + "attn.wk", L.wk);
    visit(p + "attn.wv", L.wv);
    visit(p + "attn.wo", L.wo);
    visit(p + "mlp_norm.gamma", L.mlp_norm_gamma);
    visit(p + "mlp_norm.beta", L.mlp_norm_beta);
    visit(p + "mlp.w_up", L.w_up);
    visit(p + "mlp.w_gate", L.w_gate);
    visit(p + "mlp.w_down", L.w_down);
  }
  visit("final_norm.gamma", w.final_norm_gamma);
  visit("final_norm.beta", w.final_norm_beta);
  visit("unembed", w.unembed);
}

namespace detail {

// Stream ids: the embedding family is keyed on the embed seed, the body on the
// model seed with one id per (layer, tensor) slot.
inline constexpr std::uint64_t kEmbedStream = 0;
inline constexpr std::uint64_t kUnembedStream = 1;
inline std::uint64_t body_stream(std::size_t layer, std::uint64_t slot) { return 16 + layer * 16 + slot; }

}  // namespace detail

/// GPT-2 style initialization: linear and embedding weights ~ N(0, init_std^2),
/// W_O and W_down ~ N(0, (init_std / sqrt(2L))^2), norm gamma = 1, beta = 0.
/// Passing `embed_seed` pins the embedding and LM head across body seeds.
template <class Scalar = float>
WeightSet<Scalar> init_weights(const ModelConfig& config, std::uint64_t seed,
                               std::optional<std::uint64_t> embed_seed = std::nullopt) {
  config.validate();
  const std::size_t d = config.d_model;
  const double s = config.init_std;
  const double rs = config.residual_std();
  const std::uint64_t eseed = embed_seed.value_or(seed);
  const bool rms = config.norm_kind == NormKind::rmsnorm;

  WeightSet<Scalar> w;
  w.tied = config.weight_tying;
  if (config.input_mode == InputMode::tokens) {
    RngStream rng(eseed, detail::kEmbedStream);
    w.embed = gaussian_matrix<Scalar>(rng, config.vocab_size, d, 0.0, s);
    if (!w.tied) {
      RngStream urng(eseed, detail::kUnembedStream);
      w.unembed = gaussian_matrix<Scalar>(urng, d, config.vocab_size, 0.0, s);
    }
  }
  auto ones = [&] { return RowVec<Scalar>::Ones(static_cast<Eigen::Index>(d)); };
  auto zeros = [&] { return rms ? RowVec<Scalar>() : RowVec<Scalar>::Zero(static_cast<Eigen::Index>(d)); };
  w.layers.resize(config.n_layers);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    auto& L = w.layers[l];
    auto draw = [&](std::uint64_t slot, std::size_t rows, std::size_t cols, double sd) {
      RngStream rng(seed, detail::body_stream(l, slot));
      return gaussian_matrix<Scalar>(rng, rows, cols, 0.0, sd);
    };
    L.wq = draw(0, d, d, s);
    L.wk = draw(1, d, d, s);
    L.wv = draw(2, d, d, s);
    L.wo = draw(3, d, d, rs);
    L.w_up = draw(4, d, config.d_mlp, s);
    if (config.activation == Activation::swiglu) L.w_gate = draw(5, d, config.d_mlp, s);
    L.w_down = draw(6, config.d_mlp, d, rs);
    L.attn_norm_gamma = ones();
    L.attn_norm_beta = zeros();
    L.mlp_norm_gamma = ones();
    L.mlp_norm_beta = zeros();
  }
  w.final_norm_gamma = ones();
  w.final_norm_beta = zeros();
  return w;
}

/// Training surrogate: every non-embedding tensor gets additive Gaussian noise
/// with std = rel_scale * RMS(tensor). Embedding and LM head are untouched.
template <class Scalar>
WeightSet<Scalar> perturb_weights(const WeightSet<Scalar>& base, double rel_scale, std::uint64_t seed) {
  WeightSet<Scalar> w = base;
  std::uint64_t slot = 0;
  for_each_tensor(w, [&](const auto& t) {
    const std::uint64_t id = slot++;
    if (t.name == "embed" || t.name == "unembed") return;
    Eigen::Map<Mat<Scalar>> m(t.data, t.rows, t.cols);
    const double rms = std::sqrt(m.template cast<double>().squaredNorm() / static_cast<double>(m.size()));
    if (rms == 0.0 || rel_scale == 0.0) return;
    RngStream rng(seed, 1000 + id);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = static_cast<Scalar>(m.data()[i] + rel_scale * rms * rng.gaussian());
    }
  });
  return w;
}

// ---------------------------------------------------------------------------
// Sublayers
// ---------------------------------------------------------------------------

/// Scales row i (1-based) by sqrt(i) (amplify) or sqrt(i / max_seq) (attenuate).
template <class Scalar>
Mat<Scalar> calibrate_attention_output(Mat<Scalar> o, Calibration mode, std::size_t max_seq) {
  if (mode == Calibration::none) return o;
  for (Eigen::Index r = 0; r < o.rows(); ++r) {
    const double i = static_cast<double>(r + 1);
    const double factor = mode == Calibration::amplify ? std::sqrt(i) : std::sqrt(i / static_cast<double>(max_seq));
    o.row(r) *= static_cast<Scalar>(factor);
  }
  return o;
}

/// Rotates consecutive (2k, 2k+1) pairs inside each head by angle
/// pos * base^(-2k / d_head), pos being the 0-based row index.
template <class Scalar>
void apply_rope(Mat<Scalar>& x, std::size_t n_heads, double base) {
  const Eigen::Index dh = x.cols() / static_cast<Eigen::Index>(n_heads);
  const Eigen::Index half = dh / 2;
  std::vector<double> inv_freq(static_cast<std::size_t>(half));
  for (Eigen::Index k = 0; k < half; ++k) {
    inv_freq[static_cast<std::size_t>(k)] = std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(dh));
  }
  for (Eigen::Index pos = 0; pos < x.rows(); ++pos) {
    for (Eigen::Index k = 0; k < half; ++k) {
      const double angle = static_cast<double>(pos) * inv_freq[static_cast<std::size_t>(k)];
      const double c = std::cos(angle), s = std::sin(angle);
      for (std::size_t h = 0; h < n_heads; ++h) {
        const Eigen::Index j = static_cast<Eigen::Index>(h) * dh + 2 * k;
        const double a = x(pos, j), b = x(pos, j + 1);
        x(pos, j) = static_cast<Scalar>(a * c - b * s);
        x(pos, j + 1) = static_cast<Scalar>(a * s + b * c);
      }
    }
  }
}

template <class Scalar>
struct AttentionCapture {
  std::vector<Mat<Scalar>>* maps = nullptr;  // one T x T map per head appended
  Mat<Scalar>* aggregated = nullptr;         // post-calibration, pre-W_O output
};

/// Causal multi-head attention on already-normalized input.
template <class Scalar>
Mat<Scalar> attention_sublayer(const Mat<Scalar>& x, const LayerWeights<Scalar>& w, const ModelConfig& config,
                               AttentionCapture<Scalar> capture = {}) {
  const auto d = static_cast<Eigen::Index>(config.d_model);
  if (x.cols() != d) throw std::invalid_argument("attention_sublayer: input width != d_model");
  const Eigen::Index T = x.rows();
  const Eigen::Index dh = static_cast<Eigen::Index>(config.d_head());
  Mat<Scalar> q = x * w.wq;
  Mat<Scalar> k = x * w.wk;
  const Mat<Scalar> v = x * w.wv;
  if (config.pos_encoding == PosEncoding::rope) {
    apply_rope(q, config.n_heads, config.rope_base);
    apply_rope(k, config.n_heads, config.rope_base);
  }
  const Scalar scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(dh)));
  Mat<Scalar> o(T, d);
  for (std::size_t h = 0; h < config.n_heads; ++h) {
    const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dh;
    Mat<Scalar> scores = (q.middleCols(c0, dh) * k.middleCols(c0, dh).transpose()) * scale;
    Mat<Scalar> attn = softmax_rows(scores, true);
    o.middleCols(c0, dh).noalias() = attn * v.middleCols(c0, dh);
    if (capture.maps != nullptr) capture.maps->push_back(std::move(attn));
  }
  o = calibrate_attention_output(std::move(o), config.calibration, config.max_seq);
  if (capture.aggregated != nullptr) *capture.aggregated = o;
  return o * w.wo;
}

/// MLP on already-normalized input; `preact` receives the nonlinearity input.
template <class Scalar>
Mat<Scalar> mlp_sublayer(const Mat<Scalar>& x, const LayerWeights<Scalar>& w, Activation activation,
                         Mat<Scalar>* preact = nullptr) {
  if (activation == Activation::swiglu) {
    Mat<Scalar> gate = x * w.w_gate;
    if (preact != nullptr) *preact = gate;
    apply_activation_inplace(Activation::silu, gate);
    const Mat<Scalar> up = x * w.w_up;
    return gate.cwiseProduct(up) * w.w_down;
  }
  Mat<Scalar> hidden = x * w.w_up;
  if (preact != nullptr) *preact = hidden;
  apply_activation_inplace(activation, hidden);
  return hidden * w.w_down;
}

/// Simplified MLP block: phi(X W_up) W_down, no residual, no normalization.
template <class Scalar>
Mat<Scalar> mlp0_block(const Mat<Scalar>& x, const Mat<Scalar>& w_up, const Mat<Scalar>& w_down,
                       Activation activation) {
  Mat<Scalar> hidden = x * w_up;
  apply_activation_inplace(activation, hidden);
  return hidden * w_down;
}

/// Simplified attention block: row i is the mean of rows 1..i.
template <class Scalar>
Mat<Scalar> attn0_block(const Mat<Scalar>& x) {
  if (x.rows() < 1) throw std::invalid_argument("attn0_block: empty sequence");
  Mat<Scalar> out(x.rows(), x.cols());
  RowVec<double> running = RowVec<double>::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    running += x.row(i).template cast<double>();
    out.row(i) = (running / static_cast<double>(i + 1)).template cast<Scalar>();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

enum class LogitsMode { none, last, all };

struct TraceOptions {
  bool attention_maps = false;
  bool aggregated = false;       // per-layer post-calibration attention output
  bool preactivations = false;   // per-layer MLP nonlinearity input
  LogitsMode logits = LogitsMode::all;
  std::size_t max_layers = 0;    // 0 = all layers; otherwise stop early
  bool bypass_sublayer_norm = false;  // diagnostic: feed sublayers the raw stream
};

template <class Scalar>
struct ForwardTrace {
  std::vector<Mat<Scalar>> hidden;          // n_layers + 1 (fewer with max_layers); [0] = input
  Mat<Scalar> final_norm;                    // Norm_final(hidden.back())
  Mat<Scalar> logits;                        // T x vocab, 1 x vocab (last) or empty
  std::vector<std::vector<Mat<Scalar>>> attention;  // [layer][head] T x T
  std::vector<Mat<Scalar>> aggregated;       // [layer] T x d
  std::vector<Mat<Scalar>> preactivations;   // [layer] T x d_mlp
};

namespace detail {

template <class Scalar>
Mat<Scalar> norm_rows(const ModelConfig& c, const Mat<Scalar>& x, const RowVec<Scalar>& g, const RowVec<Scalar>& b) {
  return normalize_rows(x, g, b, c.norm_kind == NormKind::rmsnorm, c.norm_eps);
}

template <class Scalar>
ForwardTrace<Scalar> run_blocks(const ModelConfig& config, const WeightSet<Scalar>& w, Mat<Scalar> x,
                                const TraceOptions& opts) {
  if (w.layers.size() != config.n_layers) throw std::invalid_argument("forward: weight/config layer mismatch");
  ForwardTrace<Scalar> trace;
  const std::size_t n_run = opts.max_layers == 0 ? config.n_layers : std::min(opts.max_layers, config.n_layers);
  trace.hidden.reserve(n_run + 1);
  trace.hidden.push_back(x);
  for (std::size_t l = 0; l < n_run; ++l) {
    const auto& L = w.layers[l];
    if (config.has_attention()) {
      AttentionCapture<Scalar> cap;
      if (opts.attention_maps) {
        trace.attention.emplace_back();
        cap.maps = &trace.attention.back();
      }
      if (opts.aggregated) {
        trace.aggregated.emplace_back();
        cap.aggregated = &trace.aggregated.back();
      }
      const Mat<Scalar> in = opts.bypass_sublayer_norm ? x : norm_rows(config, x, L.attn_norm_gamma, L.attn_norm_beta);
      x += attention_sublayer(in, L, config, cap);
    }
    if (config.has_mlp()) {
      Mat<Scalar>* pre = nullptr;
      if (opts.preactivations) {
        trace.preactivations.emplace_back();
        pre = &trace.preactivations.back();
      }
      const Mat<Scalar> in = opts.bypass_sublayer_norm ? x : norm_rows(config, x, L.mlp_norm_gamma, L.mlp_norm_beta);
      x += mlp_sublayer(in, L, config.activation, pre);
    }
    trace.hidden.push_back(x);
  }
  trace.final_norm = norm_rows(config, x, w.final_norm_gamma, w.final_norm_beta);
  return trace;
}

}  // namespace detail

/// Vector-input forward: the sequence enters the residual stream directly and
/// the output is the final-norm hidden state (no embedding, no LM head).
template <class Scalar>
ForwardTrace<Scalar> forward(const ModelConfig& config, const WeightSet<Scalar>& weights,
                             const Mat<Scalar>& vectors, const TraceOptions& opts = {}) {
  if (vectors.cols() != static_cast<Eigen::Index>(config.d_model)) {
    throw std::invalid_argument("forward: input width != d_model");
  }
  if (vectors.rows() < 1 || static_cast<std::size_t>(vectors.rows()) > config.max_seq) {
    throw std::invalid_argument("forward: sequence length outside [1, max_seq]");
  }
  return detail::run_blocks(config, weights, vectors, opts);
}

/// Token-input forward with logits = Norm_final(X^L) W_U.
template <class Scalar>
ForwardTrace<Scalar> forward(const ModelConfig& config, const WeightSet<Scalar>& weights,
                             std::span<const std::int32_t> tokens, const TraceOptions& opts = {}) {
  if (config.input_mode != InputMode::tokens || weights.embed.rows() == 0) {
    throw std::invalid_argument("forward: token input needs a token-mode model");
  }
  if (tokens.empty() || tokens.size() > config.max_seq) {
    throw std::invalid_argument("forward: sequence length outside [1, max_seq]");
  }
  const auto T = static_cast<Eigen::Index>(tokens.size());
  Mat<Scalar> x(T, static_cast<Eigen::Index>(config.d_model));
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto id = tokens[static_cast<std::size_t>(t)];
    if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size) {
      throw std::out_of_range("forward: token id out of range");
    }
    x.row(t) = weights.embed.row(id);
  }
  auto trace = detail::run_blocks(config, weights, std::move(x), opts);
  if (opts.logits != LogitsMode::none) {
    const bool last = opts.logits == LogitsMode::last;
    const auto rows = last ? trace.final_norm.bottomRows(1) : trace.final_norm.topRows(trace.final_norm.rows());
    if (weights.tied) {
      trace.logits.noalias() = rows * weights.embed.transpose();
    } else {
      trace.logits.noalias() = rows * weights.unembed;
    }
  }
  return trace;
}

/// Index of the largest entry; the lowest index wins ties.
template <class Derived>
Eigen::Index argmax_lowest(const Eigen::MatrixBase<Derived>& row) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < row.size(); ++i) {
    if (row(i) > row(best)) best = i;
  }
  return best;
}

}  // namespace seedprint
