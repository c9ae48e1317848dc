// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diet/data.hpp"
#include "diet/linalg.hpp"
#include "diet/model.hpp"
#include "diet/train.hpp"

namespace diet {

struct FeatureBank {
  Matrix features;  // M × K
  std::vector<int> labels;
  std::string split;
};

// Backbone outputs only; the DIET head never enters evaluation. Image samples
// are resized to `resize_to` (bilinear) when given and different.
FeatureBank extract_features(const Backbone& backbone, const IndexedDataset& ds,
                             const std::string& split,
                             const std::optional<ImageShape>& resize_to = {});

struct ProbeConfig {
  double lr = 0.1;
  double weight_decay = 1e-4;
  std::size_t max_steps = 2000;
  double grad_tol = 1e-6;
  /// z-score features with train-split statistics before fitting.
  bool standardize = false;

  friend bool operator==(const ProbeConfig&, const ProbeConfig&) = default;
};

struct ProbeResult {
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::size_t steps = 0;
  double grad_norm = 0.0;
  std::size_t classes = 0;
  Matrix weight;              // C × K (on standardized features when enabled)
  std::vector<double> bias;   // C
};

/// Multinomial logistic regression by full-batch gradient descent from zero
/// init. Deterministic: no randomness is involved.
ProbeResult linear_probe(const FeatureBank& train, const FeatureBank& test,
                         const ProbeConfig& cfg = {});

/// Fraction of rows whose argmax equals the label; ties go to the smallest index.
double top1(const Matrix& logits, std::span<const int> labels);

/// Spearman rank correlation with average ranks for ties; 0 when either
/// series is constant.
double spearman(std::span<const double> x, std::span<const double> y);

/// Spearman ρ between training loss and probe accuracy over the records
/// that carry a probe accuracy. Needs at least 3 such records.
double loss_acc_correlation(std::span<const MetricsRecord> log);

/// Top-1 of a supervised model's own head on a labeled dataset.
double classifier_accuracy(const Model& model, const IndexedDataset& ds,
                           const std::optional<ImageShape>& resize_to = {});

}  // namespace diet
