// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

// seedprint: desk-scale probes of initialization-time transformer biases,
// theory checks, lineage fingerprinting and attention-sink metrics.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "seedprint/seedprint.hpp"

namespace sp = seedprint;
using nlohmann::json;

namespace {

constexpr int kExitError = 2;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Options {
  std::string preset;
  std::uint64_t seed = 42;
  std::uint64_t n_seeds = 1;
  std::uint64_t embed_seed = 1234;
  std::uint64_t probe_seed = 7;
  std::optional<double> probe_std;
  std::size_t n = 0;
  std::size_t seq_len = 0;
  std::string ablation;
  std::string activation;
  std::string calibration;
  std::string input_mode;
  std::string mode = "inter";
  double epsilon = 0.25;
  std::string averaging = "alpha_first";
  std::size_t m = 50;
  double alpha = 0.01;
  std::string output_kind = "final_hidden";
  std::string tests = "t";
  std::uint64_t null_seed = 0x5eed;
  std::string out;
  std::string checkpoint;
  std::size_t workers = sp::default_workers();
  std::size_t top_k = 10;
  bool baseline = false;
  bool allow_large = false;
  // verify-theory sizes
  std::size_t dim = 2048;
  std::size_t depth = 6;
  std::size_t amp_dim = 512;
  std::size_t amp_pairs = 200;
  std::size_t intra_dim = 1024;
  std::size_t intra_seqs = 20;
  std::string intra_t = "16,512";
  std::size_t max_layers = 12;
  // fingerprint positionals
  std::string path_a, path_b;
  json model_overrides = json::object();
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw UsageError("empty list: '" + s + "'");
  return out;
}

sp::ModelConfig preset_config(const std::string& name, bool allow_large) {
  sp::ModelConfig c;
  if (name == "nano-gpt2-rope") return c;
  if (name == "nano-llama2") {
    c.d_mlp = 2048;
    c.vocab_size = 32000;
    c.max_seq = 2048;
    c.norm_kind = sp::NormKind::rmsnorm;
    c.activation = sp::Activation::swiglu;
    c.weight_tying = false;
    return c;
  }
  if (name == "gpt2-1p2b") {
    if (!allow_large) throw UsageError("preset gpt2-1p2b needs --allow-large (about 5 GB of float weights)");
    c.n_layers = 24;
    c.n_heads = 32;
    c.d_model = 2048;
    c.d_mlp = 8192;
    return c;
  }
  if (name == "tiny") {
    c.d_model = 64;
    c.n_layers = 2;
    c.n_heads = 4;
    c.d_mlp = 256;
    c.vocab_size = 1000;
    c.max_seq = 256;
    return c;
  }
  if (name == "desk-fingerprint") {
    c.d_model = 128;
    c.n_layers = 4;
    c.n_heads = 4;
    c.d_mlp = 512;
    c.max_seq = 256;
    c.input_mode = sp::InputMode::vectors;
    return c;
  }
  throw UsageError("unknown preset: " + name);
}

// Preset, then the config file's "model" block, then explicit flags.
sp::ModelConfig build_config(const Options& o, const std::string& default_preset, sp::InputMode mode) {
  sp::ModelConfig c = preset_config(o.preset.empty() ? default_preset : o.preset, o.allow_large);
  c.input_mode = mode;
  if (!o.model_overrides.empty()) {
    json merged = c;
    if (!o.model_overrides.contains("d_head")) merged.erase("d_head");
    merged.merge_patch(o.model_overrides);
    try {
      c = merged.get<sp::ModelConfig>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("bad model block in --config: ") + e.what());
    }
  }
  if (!o.input_mode.empty()) c.input_mode = sp::input_mode_from_string(o.input_mode);
  if (!o.activation.empty() && o.activation.find(',') == std::string::npos) {
    c.activation = sp::activation_from_string(o.activation);
  }
  if (!o.ablation.empty() && o.ablation.find(',') == std::string::npos) c.ablation = sp::ablation_from_string(o.ablation);
  if (!o.calibration.empty()) c.calibration = sp::calibration_from_string(o.calibration);
  if (o.seq_len > c.max_seq) c.max_seq = o.seq_len;
  c.validate();
  return c;
}

std::size_t or_default(std::size_t v, std::size_t d) { return v == 0 ? d : v; }

void emit(const Options& o, const std::string& content, const std::string& suffix = "") {
  if (o.out.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  const std::string path = o.out + suffix;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  if (!content.empty() && content.back() != '\n') f << '\n';
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

int cmd_init(const Options& o) {
  if (o.out.empty()) throw UsageError("init needs --out <checkpoint path>");
  const auto mode = o.input_mode.empty() ? sp::InputMode::tokens : sp::input_mode_from_string(o.input_mode);
  const auto cfg = build_config(o, "nano-gpt2-rope", mode);
  sp::Checkpoint ck;
  ck.config = cfg;
  ck.meta = {{"seed", o.seed}, {"embed_seed", o.embed_seed}, {"preset", o.preset.empty() ? "nano-gpt2-rope" : o.preset},
             {"tool_version", sp::kVersion}};
  ck.weights = sp::init_weights<float>(cfg, o.seed, o.embed_seed);
  sp::save_checkpoint(o.out, ck);
  sp::RunMetadata run("init", {{"model", cfg}, {"seed", o.seed}, {"embed_seed", o.embed_seed}});
  std::cout << dump({{"run", run.to_json()}, {"checkpoint", o.out}, {"weights_hash", sp::weights_hash(ck.weights)}});
  return 0;
}

// Mean, over replicate uniform draws, of the largest cell count.
double uniform_expected_top1(std::size_t n, std::size_t vocab, std::uint64_t seed, std::size_t reps = 200) {
  std::vector<std::uint32_t> counts(vocab);
  double total = 0.0;
  for (std::size_t r = 0; r < reps; ++r) {
    sp::RngStream rng(seed, 1'000'000 + r);
    std::fill(counts.begin(), counts.end(), 0u);
    std::uint32_t best = 0;
    for (std::size_t i = 0; i < n; ++i) best = std::max(best, ++counts[rng.below(vocab)]);
    total += best;
  }
  return total / static_cast<double>(reps);
}

int cmd_token_bias(const Options& o) {
  const auto cfg = build_config(o, "nano-gpt2-rope", sp::InputMode::tokens);
  if (cfg.input_mode != sp::InputMode::tokens) throw UsageError("token-bias needs a token-input model");
  const std::size_t n = or_default(o.n, 2000), T = or_default(o.seq_len, 256);
  if (T > cfg.max_seq) throw UsageError("--seq-len exceeds the model's max_seq");
  std::optional<sp::Checkpoint> ck;
  if (!o.checkpoint.empty()) ck = sp::load_checkpoint(o.checkpoint);
  const auto& model_cfg = ck ? ck->config : cfg;
  const std::size_t V = model_cfg.vocab_size;

  json inputs = {{"model", model_cfg}, {"n", n},           {"seq_len", T},       {"probe_seed", o.probe_seed},
                 {"top_k", o.top_k},   {"baseline", o.baseline}};
  if (ck) {
    inputs["checkpoint_hash"] = sp::weights_hash(ck->weights);
  } else {
    inputs["seed"] = o.seed;
    inputs["n_seeds"] = o.n_seeds;
    inputs["embed_seed"] = o.embed_seed;
  }
  sp::RunMetadata run("token-bias", inputs);
  const double expected_top1 = uniform_expected_top1(n, V, o.probe_seed);

  std::ostringstream table, topk;
  table << run.csv_preamble();
  table << "seed,seqlen,n,top1_id,top1_count,top1_freq,p_value,log_p,underflow,distinct,uniform_expected_top1_freq\n";
  topk << run.csv_preamble() << "seed,rank,token_id,count,freq\n";
  auto add_rows = [&](const std::string& label, const std::map<std::int64_t, std::size_t>& hist) {
    std::vector<std::pair<std::int64_t, std::size_t>> v(hist.begin(), hist.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    const auto p = sp::top1_binomial_pvalue(v.front().second, n, V);
    const double N = static_cast<double>(n);
    table << label << ',' << T << ',' << n << ',' << v.front().first << ',' << v.front().second << ','
          << sp::fmt_double(v.front().second / N) << ',' << sp::fmt_double(p.p_value) << ','
          << sp::fmt_double(p.log_p) << ',' << (p.underflow ? 1 : 0) << ',' << v.size() << ','
          << sp::fmt_double(expected_top1 / N) << '\n';
    const std::size_t rows = o.top_k == 0 ? v.size() : std::min(o.top_k, v.size());
    for (std::size_t r = 0; r < rows; ++r) {
      topk << label << ',' << r + 1 << ',' << v[r].first << ',' << v[r].second << ','
           << sp::fmt_double(v[r].second / N) << '\n';
    }
  };

  const auto batch = sp::ProbeBatch::tokens(n, T, V, o.probe_seed);
  if (ck) {
    add_rows("checkpoint", sp::next_token_histogram(ck->config, ck->weights, batch, o.workers));
  } else {
    for (std::uint64_t s = o.seed; s < o.seed + o.n_seeds; ++s) {
      const auto w = sp::init_weights<float>(cfg, s, o.embed_seed);
      add_rows(std::to_string(s), sp::next_token_histogram(cfg, w, batch, o.workers));
    }
  }
  if (o.baseline) {
    sp::RngStream rng(o.probe_seed, 999'999);
    std::map<std::int64_t, std::size_t> hist;
    for (std::size_t i = 0; i < n; ++i) ++hist[static_cast<std::int64_t>(rng.below(V))];
    add_rows("uniform", hist);
  }
  emit(o, table.str());
  if (o.out.empty()) {
    std::cout << '\n' << topk.str();
  } else {
    emit(o, topk.str(), ".topk.csv");
  }
  return 0;
}

int cmd_contraction(const Options& o) {
  const auto mode = o.input_mode.empty() ? sp::InputMode::vectors : sp::input_mode_from_string(o.input_mode);
  const auto base = build_config(o, "nano-gpt2-rope", mode);
  const std::size_t n = or_default(o.n, 500), T = or_default(o.seq_len, 128);
  if (n < 2) throw UsageError("--n must be >= 2");
  if (T > base.max_seq) throw UsageError("--seq-len exceeds the model's max_seq");
  if (o.mode != "inter" && o.mode != "intra") throw UsageError("--mode must be inter or intra");
  const auto ablation_names =
      split_list(o.ablation.empty() ? std::string(sp::to_string(base.ablation)) : o.ablation);
  const auto activation_names =
      split_list(o.activation.empty() ? std::string(sp::to_string(base.activation)) : o.activation);
  std::vector<sp::Ablation> ablations;
  for (const auto& s : ablation_names) ablations.push_back(sp::ablation_from_string(s));
  std::vector<sp::Activation> activations;
  for (const auto& s : activation_names) activations.push_back(sp::activation_from_string(s));
  const double probe_std = o.probe_std.value_or(base.init_std);
  for (auto ab : ablations) {
    for (auto act : activations) {
      auto c = base;
      c.ablation = ab;
      c.activation = act;
      c.validate();
    }
  }
  sp::RunMetadata run("contraction", {{"model", base},
                                      {"ablations", ablation_names},
                                      {"activations", activation_names},
                                      {"mode", o.mode},
                                      {"n", n},
                                      {"seq_len", T},
                                      {"seed", o.seed},
                                      {"embed_seed", o.embed_seed},
                                      {"probe_seed", o.probe_seed},
                                      {"probe_std", probe_std}});
  std::ostringstream out;
  out << run.csv_preamble() << "ablation,activation,layer,mean,std,p_value,log_p,underflow\n";
  const auto batch = base.input_mode == sp::InputMode::tokens
                         ? sp::ProbeBatch::tokens(n, T, base.vocab_size, o.probe_seed)
                         : sp::ProbeBatch::vectors(n, T, base.d_model, o.probe_seed, probe_std);
  auto row = [&](sp::Ablation ab, sp::Activation act, const std::string& layer, const std::vector<double>& sims) {
    const auto s = sp::mean_std(sims);
    out << sp::to_string(ab) << ',' << sp::to_string(act) << ',' << layer << ',' << sp::fmt_double(s.mean) << ','
        << sp::fmt_double(s.std) << ',';
    try {
      const auto p = sp::fisher_z_onesample(sims);
      out << sp::fmt_double(p.p_value) << ',' << sp::fmt_double(p.log_p) << ',' << (p.underflow ? 1 : 0) << '\n';
    } catch (const std::invalid_argument&) {
      out << ",,\n";
    }
  };
  for (auto ab : ablations) {
    for (auto act : activations) {
      auto c = base;
      c.ablation = ab;
      c.activation = act;
      const auto w = sp::init_weights<float>(c, o.seed, o.embed_seed);
      if (o.mode == "inter") {
        const auto reps = sp::last_token_reps(c, w, batch, sp::LayerSelector::each_layer_and_final, o.workers);
        for (std::size_t l = 0; l + 1 < reps.size(); ++l) row(ab, act, std::to_string(l), sp::pairwise_cosine(reps[l]));
        row(ab, act, "final_norm", sp::pairwise_cosine(reps.back()));
      } else {
        const auto curve = sp::intra_sequence_curve(c, w, batch, o.workers);
        for (std::size_t l = 0; l < curve.mean.size(); ++l) {
          out << sp::to_string(ab) << ',' << sp::to_string(act) << ',' << l << ',' << sp::fmt_double(curve.mean[l])
              << ',' << sp::fmt_double(curve.std[l]) << ",,,\n";
        }
      }
    }
  }
  emit(o, out.str());
  return 0;
}

int cmd_verify_theory(const Options& o) {
  const std::size_t pairs = or_default(o.n, 2000), T = or_default(o.seq_len, 128);
  const auto intra_ts = split_list(o.intra_t);
  std::vector<std::size_t> ts;
  for (const auto& s : intra_ts) ts.push_back(std::stoul(s));
  if (o.depth < 1 || o.dim < 1 || o.amp_dim < 1 || o.intra_dim < 1 || o.max_layers < 3) {
    throw UsageError("verify-theory sizes must be positive and --max-layers >= 3");
  }
  sp::RunMetadata run("verify-theory", {{"seed", o.seed},
                                        {"dim", o.dim},
                                        {"pairs", pairs},
                                        {"depth", o.depth},
                                        {"amp_dim", o.amp_dim},
                                        {"amp_pairs", o.amp_pairs},
                                        {"seq_len", T},
                                        {"intra_dim", o.intra_dim},
                                        {"intra_seqs", o.intra_seqs},
                                        {"intra_t", ts},
                                        {"max_layers", o.max_layers}});
  json checks = json::array();
  bool all = true;
  auto check = [&](const std::string& name, double measured, double oracle, double tol) {
    const bool pass = std::abs(measured - oracle) <= tol;
    all = all && pass;
    checks.push_back({{"name", name},
                      {"measured", measured},
                      {"oracle", oracle},
                      {"delta", measured - oracle},
                      {"tolerance", tol},
                      {"pass", pass}});
    std::fprintf(stderr, "%-28s measured %.6f oracle %.6f delta %+.6f tol %.3f %s\n", name.c_str(), measured, oracle,
                 measured - oracle, tol, pass ? "PASS" : "FAIL");
  };

  const auto relu = sp::experiments::mlp0_chain_similarity(o.dim, o.dim, pairs, o.depth, sp::Activation::relu, o.seed);
  const auto rec = sp::theory::relu_correlation_after(o.depth).rho_by_layer;
  for (std::size_t l = 0; l < o.depth; ++l) check("relu_mlp0_depth_" + std::to_string(l + 1), relu[l], rec[l], 0.03);
  const auto tanh =
      sp::experiments::mlp0_chain_similarity(o.dim, o.dim, pairs, o.depth, sp::Activation::tanh, o.seed + 1);
  for (std::size_t l = 0; l < o.depth; ++l) {
    check("tanh_mlp0_depth_" + std::to_string(l + 1), tanh[l], sp::theory::tanh_correlation_after(l + 1), 0.02);
  }
  const auto amp = sp::experiments::amplification_experiment(o.amp_dim, o.amp_dim, o.amp_pairs, T, o.seed + 2, o.workers);
  check("first_layer", amp.first_layer, sp::theory::relu_correlation_map(0.0), 0.03);
  check("mlp0_then_mlp0", amp.mlp_mlp, sp::theory::mlp_mlp_similarity(), 0.03);
  check("mlp0_then_attn0", amp.attn_mlp, sp::theory::attn_amplifier_similarity(T), 0.02);
  for (std::size_t t : ts) {
    const auto v =
        sp::experiments::attn0_intra_similarity(o.intra_dim, t, o.intra_seqs, o.max_layers - 1, o.seed + 3 + t, o.workers);
    for (std::size_t L = 3; L <= o.max_layers; ++L) {
      check("intra_T" + std::to_string(t) + "_L" + std::to_string(L), v[L - 1], sp::theory::intra_similarity_finite(t, L),
            0.03);
    }
  }
  emit(o, dump({{"run", run.to_json()}, {"checks", checks}, {"all_pass", all}}));
  return 0;
}

int cmd_fingerprint(const Options& o) {
  const auto a = sp::load_checkpoint(o.path_a);
  const auto b = sp::load_checkpoint(o.path_b);
  const auto kind = sp::output_kind_from_string(o.output_kind);
  const auto tests = sp::lineage_test_from_string(o.tests);
  if (a.config.d_model != b.config.d_model) throw UsageError("fingerprint: models differ in d_model");
  if (kind == sp::OutputKind::logits && a.config.vocab_size != b.config.vocab_size) {
    throw UsageError("fingerprint: logits need equal vocab sizes");
  }
  if (!(o.alpha > 0.0)) throw UsageError("--alpha must be positive");
  const std::size_t n = or_default(o.n, 2000), T = or_default(o.seq_len, 256);
  if (T > std::min(a.config.max_seq, b.config.max_seq)) throw UsageError("--seq-len exceeds a model's max_seq");
  const std::size_t d_out = kind == sp::OutputKind::logits ? a.config.vocab_size : a.config.d_model;
  if (o.m < 1 || o.m > d_out) throw UsageError("--m must be in [1, d_out]");
  const double probe_std = o.probe_std.value_or(0.002);
  const auto batch = kind == sp::OutputKind::logits ? sp::ProbeBatch::tokens(n, T, a.config.vocab_size, o.probe_seed)
                                                    : sp::ProbeBatch::vectors(n, T, a.config.d_model, o.probe_seed, probe_std);
  const auto ha = sp::weights_hash(a.weights), hb = sp::weights_hash(b.weights);
  sp::RunMetadata run("fingerprint", {{"model_a", ha},
                                      {"model_b", hb},
                                      {"n", n},
                                      {"seq_len", T},
                                      {"m", o.m},
                                      {"alpha", o.alpha},
                                      {"output_kind", sp::to_string(kind)},
                                      {"tests", sp::to_string(tests)},
                                      {"probe_seed", o.probe_seed},
                                      {"probe_std", probe_std},
                                      {"null_seed", o.null_seed}});
  const auto ra = sp::response_matrix(a.config, a.weights, batch, kind, ha, o.workers);
  const auto rb = sp::response_matrix(b.config, b.weights, batch, kind, hb, o.workers);
  sp::FingerprintOptions fo;
  fo.m = o.m;
  fo.alpha = o.alpha;
  fo.tests = tests;
  fo.null_seed = o.null_seed;
  const auto rep = sp::fingerprint(ra, rb, fo, o.workers);
  json report = rep;
  report["probe_seed"] = o.probe_seed;
  emit(o, dump({{"run", run.to_json()}, {"report", report}}));
  std::fprintf(stderr, "verdict: %s (p_t=%s p_u=%s, |S|=%zu)\n", rep.verdict ? "same lineage" : "different lineage",
               rep.has_t ? sp::fmt_double(rep.p_t.p_value).c_str() : "-",
               rep.has_u ? sp::fmt_double(rep.p_u.p_value).c_str() : "-", rep.identity.size());
  return rep.verdict ? 0 : 1;
}

int cmd_sink(const Options& o) {
  const auto mode = o.input_mode.empty() ? sp::InputMode::vectors : sp::input_mode_from_string(o.input_mode);
  const auto cfg = build_config(o, "nano-gpt2-rope", mode);
  const std::size_t n = or_default(o.n, 100), T = or_default(o.seq_len, 128);
  if (T < 2) throw UsageError("--seq-len must be >= 2");
  if (T > cfg.max_seq) throw UsageError("--seq-len exceeds the model's max_seq");
  if (!(o.epsilon >= 0.0)) throw UsageError("--epsilon must be non-negative");
  if (!cfg.has_attention()) throw UsageError("sink needs a model with attention");
  const auto averaging = sp::sink_averaging_from_string(o.averaging);
  const double probe_std = o.probe_std.value_or(cfg.init_std);
  sp::RunMetadata run("sink", {{"model", cfg},
                               {"n", n},
                               {"seq_len", T},
                               {"seed", o.seed},
                               {"embed_seed", o.embed_seed},
                               {"probe_seed", o.probe_seed},
                               {"probe_std", probe_std},
                               {"epsilon", o.epsilon},
                               {"averaging", sp::to_string(averaging)}});
  const auto w = sp::init_weights<float>(cfg, o.seed, o.embed_seed);
  const auto batch = cfg.input_mode == sp::InputMode::tokens
                         ? sp::ProbeBatch::tokens(n, T, cfg.vocab_size, o.probe_seed)
                         : sp::ProbeBatch::vectors(n, T, cfg.d_model, o.probe_seed, probe_std);
  const auto summary = sp::sink_rate(sp::collect_sink_alphas(cfg, w, batch, o.workers), o.epsilon, averaging);
  const auto profile = sp::positional_std_profile(cfg, w, batch, o.workers);
  const double c = sp::experiments::fit_inverse_sqrt(profile, 2, T);
  double max_rel = 0.0;
  for (std::size_t i = 2; i <= T; ++i) {
    const double fit = c / std::sqrt(static_cast<double>(i));
    max_rel = std::max(max_rel, std::abs(profile[i - 1] - fit) / fit);
  }
  emit(o, dump({{"run", run.to_json()},
                {"sink", summary},
                {"positional_std", profile},
                {"inverse_sqrt_fit", {{"c", c}, {"from", 2}, {"to", T}, {"max_relative_error", max_rel}}}}));
  std::ostringstream prof;
  prof << run.csv_preamble();
  for (std::size_t i = 1; i <= T; ++i) prof << (i > 1 ? "," : "") << "pos_" << i;
  prof << '\n';
  for (std::size_t i = 0; i < T; ++i) prof << (i > 0 ? "," : "") << sp::fmt_double(profile[i]);
  prof << '\n';
  if (!o.out.empty()) {
    emit(o, prof.str(), ".profile.csv");
    emit(o, run.csv_preamble() + sp::sink_csv(summary), ".alpha.csv");
  }
  return 0;
}

// Turns the flat keys of a JSON config file into "--key=value" arguments placed
// ahead of the command line, so explicit flags (parsed later) win.
std::vector<std::string> config_args(const std::string& path, json& model_block) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read --config file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw UsageError("--config is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw UsageError("--config must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    if (key == "model") {
      if (!value.is_object()) throw UsageError("--config model block must be an object");
      model_block = value;
      continue;
    }
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_string()) {
      args.push_back(flag + "=" + value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
      args.push_back(flag + "=" + joined);
    } else {
      args.push_back(flag + "=" + value.dump());
    }
  }
  return args;
}

void print_error(const std::string& kind, const std::string& message) {
  std::string flat = message;
  std::replace(flat.begin(), flat.end(), '\n', ' ');
  std::cerr << json{{"error", kind}, {"message", flat}}.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"seedprint: initialization-time bias probes, theory checks and lineage fingerprints"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sp::kVersion));

  std::string config_path;
  app.add_option("--config", config_path, "JSON file with flag values and an optional \"model\" block");
  app.add_option("--preset", o.preset, "nano-gpt2-rope | nano-llama2 | gpt2-1p2b | tiny | desk-fingerprint");
  app.add_option("--seed", o.seed, "Body weight seed");
  app.add_option("--n-seeds", o.n_seeds, "token-bias: number of consecutive seeds")->check(CLI::PositiveNumber);
  app.add_option("--embed-seed", o.embed_seed, "Seed of the embedding and LM head (kept fixed across body seeds)");
  app.add_option("--probe-seed", o.probe_seed, "Probe batch seed");
  app.add_option("--probe-std", o.probe_std, "Std of Gaussian vector probes")->check(CLI::NonNegativeNumber);
  app.add_option("--n", o.n, "Number of probe sequences (or pairs for verify-theory)")->check(CLI::PositiveNumber);
  app.add_option("--seq-len", o.seq_len, "Probe sequence length T")->check(CLI::PositiveNumber);
  app.add_option("--ablation", o.ablation, "full | attn_only | mlp_only (comma list for contraction)");
  app.add_option("--activation", o.activation, "relu | gelu | tanh | silu | swiglu (comma list for contraction)");
  app.add_option("--calibration", o.calibration, "none | amplify | attenuate")
      ->check(CLI::IsMember({"none", "amplify", "attenuate"}));
  app.add_option("--input-mode", o.input_mode, "tokens | vectors")->check(CLI::IsMember({"tokens", "vectors"}));
  app.add_option("--mode", o.mode, "contraction: inter | intra")->check(CLI::IsMember({"inter", "intra"}));
  app.add_option("--epsilon", o.epsilon, "Sink threshold")->check(CLI::NonNegativeNumber);
  app.add_option("--averaging", o.averaging, "alpha_first | per_sequence")
      ->check(CLI::IsMember({"alpha_first", "per_sequence"}));
  app.add_option("--m", o.m, "Top-m preference dimensions")->check(CLI::PositiveNumber);
  app.add_option("--alpha", o.alpha, "Significance level")->check(CLI::PositiveNumber);
  app.add_option("--output-kind", o.output_kind, "final_hidden | logits")
      ->check(CLI::IsMember({"final_hidden", "final-hidden", "logits"}));
  app.add_option("--tests", o.tests, "Lineage test: t | u | both")->check(CLI::IsMember({"t", "u", "both"}));
  app.add_option("--null-seed", o.null_seed, "Seed of the Gaussian-surrogate null");
  app.add_option("--out", o.out, "Output path (stdout when omitted)");
  app.add_option("--checkpoint", o.checkpoint, "token-bias: use a saved checkpoint instead of a preset");
  app.add_option("--workers", o.workers, "Worker threads (default SEEDPRINT_WORKERS or 1)")->check(CLI::PositiveNumber);
  app.add_option("--top-k", o.top_k, "token-bias: rows per seed in the top-k table (0 = every observed token)");
  app.add_flag("--baseline", o.baseline, "token-bias: add a uniform-draw reference row");
  app.add_flag("--allow-large", o.allow_large, "Permit the gpt2-1p2b preset");
  app.add_option("--dim", o.dim, "verify-theory: MLP0 chain width")->check(CLI::PositiveNumber);
  app.add_option("--depth", o.depth, "verify-theory: MLP0 chain depth")->check(CLI::PositiveNumber);
  app.add_option("--amp-dim", o.amp_dim, "verify-theory: amplification width")->check(CLI::PositiveNumber);
  app.add_option("--amp-pairs", o.amp_pairs, "verify-theory: amplification pairs")->check(CLI::PositiveNumber);
  app.add_option("--intra-dim", o.intra_dim, "verify-theory: Attn0 width")->check(CLI::PositiveNumber);
  app.add_option("--intra-seqs", o.intra_seqs, "verify-theory: Attn0 sequences")->check(CLI::PositiveNumber);
  app.add_option("--intra-t", o.intra_t, "verify-theory: comma list of Attn0 sequence lengths");
  app.add_option("--max-layers", o.max_layers, "verify-theory: largest L for the Attn0 stack")->check(CLI::Range(3, 64));

  auto* init = app.add_subcommand("init", "Create and save a seeded checkpoint")->fallthrough();
  auto* tb = app.add_subcommand("token-bias", "Next-token preference histogram and binomial test")->fallthrough();
  auto* con = app.add_subcommand("contraction", "Per-layer pairwise cosine of representations")->fallthrough();
  auto* vt = app.add_subcommand("verify-theory", "Monte-Carlo checks of the closed-form oracles")->fallthrough();
  auto* fp = app.add_subcommand("fingerprint", "Lineage test between two checkpoints")->fallthrough();
  fp->add_option("checkpoint_a", o.path_a)->required()->check(CLI::ExistingFile);
  fp->add_option("checkpoint_b", o.path_b)->required()->check(CLI::ExistingFile);
  auto* sink = app.add_subcommand("sink", "Attention-sink rate and positional std profile")->fallthrough();

  std::vector<std::string> args;
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--config" && i + 1 < argc) {
        const auto extra = config_args(argv[i + 1], o.model_overrides);
        args.insert(args.begin(), extra.begin(), extra.end());
      } else if (a.rfind("--config=", 0) == 0) {
        const auto extra = config_args(a.substr(9), o.model_overrides);
        args.insert(args.begin(), extra.begin(), extra.end());
      }
    }
    for (int i = 1; i < argc; ++i) args.push_back(argv[i]);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    print_error("usage", e.what());
    return kExitError;
  }

  try {
    if (*init) return cmd_init(o);
    if (*tb) return cmd_token_bias(o);
    if (*con) return cmd_contraction(o);
    if (*vt) return cmd_verify_theory(o);
    if (*fp) return cmd_fingerprint(o);
    if (*sink) return cmd_sink(o);
  } catch (const UsageError& e) {
    print_error("usage", e.what());
  } catch (const std::invalid_argument& e) {
    print_error("invalid_argument", e.what());
  } catch (const sp::CheckpointError& e) {
    print_error("checkpoint", e.what());
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
  }
  return kExitError;
}
