// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace diet {

/// Derive an independent stream seed from a root seed and a fixed label, so
/// adding a new consumer never shifts an existing stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view label);
std::uint64_t derive_seed(std::uint64_t root, std::string_view label,
                          std::uint64_t a, std::uint64_t b = 0);

// Portable draws on top of mt19937_64. The std:: distributions are not
// bit-reproducible across standard libraries, so conversions are done here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace diet
