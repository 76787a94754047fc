// Copyright 2026 The SeedPrint Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "seedprint/transformer.hpp"

namespace seedprint {

inline constexpr std::string_view kVersion = "0.1.0";

/// 64-bit FNV-1a, incrementally.
class Fnv1a {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  std::uint64_t digest() const { return h_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

/// Hash of every tensor's name, shape and float32 bits, in canonical order.
template <class Scalar>
std::string weights_hash(const WeightSet<Scalar>& w) {
  Fnv1a h;
  for_each_tensor(w, [&](const auto& t) {
    h.update(t.name);
    const std::int64_t shape[2] = {t.rows, t.cols};
    h.update(shape, sizeof shape);
    for (Eigen::Index i = 0; i < t.rows * t.cols; ++i) {
      const float f = static_cast<float>(t.data[i]);
      h.update(&f, sizeof f);
    }
  });
  return h.hex();
}

/// Run metadata shared by every output file. `inputs` is the effective
/// configuration; its canonical dump is hashed so reruns can be matched.
class RunMetadata {
 public:
  RunMetadata(std::string command, nlohmann::json inputs)
      : command_(std::move(command)), inputs_(std::move(inputs)), start_(std::chrono::steady_clock::now()) {}

  const nlohmann::json& inputs() const { return inputs_; }

  std::string input_hash() const {
    Fnv1a h;
    h.update(command_);
    h.update(inputs_.dump());
    return h.hex();
  }

  nlohmann::json to_json() const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    return {{"tool", "seedprint"},
            {"version", kVersion},
            {"command", command_},
            {"config", inputs_},
            {"input_hash", input_hash()},
            {"wall_clock_seconds", secs}};
  }

  /// CSV preamble: one "# key: value" line per field.
  std::string csv_preamble() const {
    std::ostringstream out;
    const auto j = to_json();
    for (const auto& [k, v] : j.items()) out << "# " << k << ": " << v.dump() << '\n';
    return out.str();
  }

 private:
  std::string command_;
  nlohmann::json inputs_;
  std::chrono::steady_clock::time_point start_;
};

/// Round-trip exact decimal form for CSV cells.
inline std::string fmt_double(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

}  // namespace seedprint
