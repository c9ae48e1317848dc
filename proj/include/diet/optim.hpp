// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace diet {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  friend bool operator==(const AdamWConfig&, const AdamWConfig&) = default;
};

/// AdamW with decoupled weight decay:
///   param -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * param)
class AdamW {
 public:
  AdamW(std::vector<std::size_t> param_sizes, AdamWConfig cfg = {});

  // Non-finite gradients throw NumericError and leave every buffer untouched.
  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads, double lr, double wd);

  std::uint64_t steps() const noexcept { return t_; }
  const AdamWConfig& config() const noexcept { return cfg_; }
  const std::vector<std::vector<double>>& first_moment() const noexcept { return m_; }
  const std::vector<std::vector<double>>& second_moment() const noexcept { return v_; }

  friend bool operator==(const AdamW&, const AdamW&) = default;

 private:
  AdamWConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

/// Linear warmup from 0 to peak over `warmup_steps`, then cosine annealing
/// that would reach exactly 0 at `total_steps`.
double lr_at(std::size_t step, std::size_t total_steps, std::size_t warmup_steps,
             double peak_lr);

/// base_lr * batch_size / 256.
double scale_lr(double base_lr, std::size_t batch_size);

}  // namespace diet
