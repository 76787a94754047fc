// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seedprint/transformer.hpp"

// File layout:
//   [0, 8)    magic "SPCKPT1\0"
//   [8, 16)   u64 little-endian header length H
//   [16, 16+H) UTF-8 JSON header, zero-padded to a multiple of 8
//   payload   row-major little-endian f32 tensors; manifest offsets are
//             relative to the payload start and 8-byte aligned

namespace seedprint {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FormatError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct ShapeError : CheckpointError {
  using CheckpointError::CheckpointError;
};
struct TruncatedError : CheckpointError {
  using CheckpointError::CheckpointError;
};

inline constexpr std::array<char, 8> kCheckpointMagic = {'S', 'P', 'C', 'K', 'P', 'T', '1', '\0'};

struct Checkpoint {
  ModelConfig config;
  WeightSet<float> weights;
  nlohmann::json meta = nlohmann::json::object();  // free-form provenance, e.g. seeds
};

/// Zero-filled weights with the shapes `config` implies.
template <class Scalar = float>
WeightSet<Scalar> zero_weights(const ModelConfig& config) {
  config.validate();
  const auto d = static_cast<Eigen::Index>(config.d_model);
  const auto dm = static_cast<Eigen::Index>(config.d_mlp);
  const auto v = static_cast<Eigen::Index>(config.vocab_size);
  const bool rms = config.norm_kind == NormKind::rmsnorm;
  WeightSet<Scalar> w;
  w.tied = config.weight_tying;
  if (config.input_mode == InputMode::tokens) {
    w.embed = Mat<Scalar>::Zero(v, d);
    if (!w.tied) w.unembed = Mat<Scalar>::Zero(d, v);
  }
  auto norm = [&](RowVec<Scalar>& g, RowVec<Scalar>& b) {
    g = RowVec<Scalar>::Ones(d);
    if (!rms) b = RowVec<Scalar>::Zero(d);
  };
  w.layers.resize(config.n_layers);
  for (auto& L : w.layers) {
    L.wq = L.wk = L.wv = L.wo = Mat<Scalar>::Zero(d, d);
    L.w_up = Mat<Scalar>::Zero(d, dm);
    if (config.activation == Activation::swiglu) L.w_gate = Mat<Scalar>::Zero(d, dm);
    L.w_down = Mat<Scalar>::Zero(dm, d);
    norm(L.attn_norm_gamma, L.attn_norm_beta);
    norm(L.mlp_norm_gamma, L.mlp_norm_beta);
  }
  norm(w.final_norm_gamma, w.final_norm_beta);
  return w;
}

namespace detail {

inline std::uint64_t align8(std::uint64_t x) { return (x + 7) & ~std::uint64_t{7}; }

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

inline void put_f32(char* dst, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) dst[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
}

inline float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace detail

/// Serializes to an in-memory byte string (what save_checkpoint writes).
inline std::string encode_checkpoint(const Checkpoint& ckpt) {
  ckpt.config.validate();
  nlohmann::json manifest = nlohmann::json::array();
  std::uint64_t offset = 0;
  for_each_tensor(ckpt.weights, [&](const auto& t) {
    manifest.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", offset}});
    offset = detail::align8(offset + 4 * static_cast<std::uint64_t>(t.rows * t.cols));
  });
  nlohmann::json header = {{"config", ckpt.config}, {"tensors", manifest}, {"meta", ckpt.meta}};
  std::string header_text = header.dump();
  header_text.resize(detail::align8(header_text.size()), '\0');

  std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_u64(out, header_text.size());
  out += header_text;
  const std::size_t payload_start = out.size();
  out.resize(payload_start + offset, '\0');
  std::size_t k = 0;
  for_each_tensor(ckpt.weights, [&](const auto& t) {
    char* dst = out.data() + payload_start + manifest[k++]["offset"].template get<std::uint64_t>();
    for (Eigen::Index i = 0; i < t.rows * t.cols; ++i) detail::put_f32(dst + 4 * i, static_cast<float>(t.data[i]));
  });
  return out;
}

inline Checkpoint decode_checkpoint(const std::string& bytes) {
  const std::size_t prefix = std::min<std::size_t>(bytes.size(), kCheckpointMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(prefix), kCheckpointMagic.begin())) {
    throw FormatError("checkpoint: bad magic");
  }
  if (bytes.size() < 16) throw TruncatedError("checkpoint: file ends inside the preamble");
  const std::uint64_t header_len = detail::get_u64(bytes.data() + 8);
  if (header_len > bytes.size() - 16) throw TruncatedError("checkpoint: file ends inside the header");
  std::string header_text(bytes.data() + 16, header_len);
  header_text.erase(header_text.find_last_not_of('\0') + 1);

  Checkpoint ckpt;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
    ckpt.config = header.at("config").get<ModelConfig>();
    if (header.contains("meta")) ckpt.meta = header.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  }
  try {
    ckpt.weights = zero_weights<float>(ckpt.config);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: invalid config: ") + e.what());
  }

  if (!header.contains("tensors") || !header["tensors"].is_array()) {
    throw FormatError("checkpoint: tensor manifest missing or not an array");
  }
  const auto& manifest = header["tensors"];
  const std::size_t payload_start = 16 + header_len;
  std::size_t k = 0;
  try {
    for_each_tensor(ckpt.weights, [&](const auto& t) {
      if (k >= manifest.size()) throw ShapeError("checkpoint: missing tensor " + t.name);
      const auto& entry = manifest[k++];
      const auto name = entry.at("name").template get<std::string>();
      if (name != t.name) throw ShapeError("checkpoint: expected tensor " + t.name + ", found " + name);
      const auto rows = entry.at("rows").template get<std::int64_t>();
      const auto cols = entry.at("cols").template get<std::int64_t>();
      if (rows != t.rows || cols != t.cols) {
        throw ShapeError("checkpoint: " + name + " is " + std::to_string(rows) + "x" + std::to_string(cols) +
                         ", config implies " + std::to_string(t.rows) + "x" + std::to_string(t.cols));
      }
      const auto offset = entry.at("offset").template get<std::uint64_t>();
      if (offset % 8 != 0) throw FormatError("checkpoint: unaligned offset for " + name);
      const std::uint64_t n = static_cast<std::uint64_t>(rows * cols);
      if (payload_start + offset + 4 * n > bytes.size()) throw TruncatedError("checkpoint: payload ends inside " + name);
      const char* src = bytes.data() + payload_start + offset;
      for (std::uint64_t i = 0; i < n; ++i) t.data[i] = detail::get_f32(src + 4 * i);
    });
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad manifest entry: ") + e.what());
  }
  if (k != manifest.size()) throw ShapeError("checkpoint: manifest has tensors the config does not imply");
  return ckpt;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("checkpoint: write failed for " + path.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace seedprint
