// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "diet/optim.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "diet/error.hpp"

namespace diet {

AdamW::AdamW(std::vector<std::size_t> param_sizes, AdamWConfig cfg) : cfg_(cfg) {
  m_.reserve(param_sizes.size());
  v_.reserve(param_sizes.size());
  for (std::size_t n : param_sizes) {
    m_.emplace_back(n, 0.0);
    v_.emplace_back(n, 0.0);
  }
}

void AdamW::step(std::span<const std::span<double>> params,
                 std::span<const std::span<const double>> grads, double lr, double wd) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("AdamW::step: expected " + std::to_string(m_.size()) +
                     " parameter groups");
  }
  for (std::size_t g = 0; g < m_.size(); ++g) {
    if (params[g].size() != m_[g].size() || grads[g].size() != m_[g].size()) {
      throw ShapeError("AdamW::step: size mismatch in group " + std::to_string(g));
    }
    for (double x : grads[g]) {
      if (!std::isfinite(x)) {
        throw NumericError("AdamW::step: non-finite gradient in group " +
                           std::to_string(g));
      }
    }
  }

  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t g = 0; g < m_.size(); ++g) {
    auto& m = m_[g];
    auto& v = v_[g];
    auto p = params[g];
    auto gr = grads[g];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * gr[i];
      v[i] = b2 * v[i] + (1.0 - b2) * gr[i] * gr[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + wd * p[i]);
    }
  }
}

double lr_at(std::size_t step, std::size_t total_steps, std::size_t warmup_steps,
             double peak_lr) {
  if (step < warmup_steps) {
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  if (total_steps <= warmup_steps) return peak_lr;
  const double progress = static_cast<double>(step - warmup_steps) /
                          static_cast<double>(total_steps - warmup_steps);
  return peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double scale_lr(double base_lr, std::size_t batch_size) {
  return base_lr * static_cast<double>(batch_size) / 256.0;
}

}  // namespace diet
