// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "diet/augment.hpp"
#include "diet/error.hpp"
#include "diet/data.hpp"
#include "diet/linalg.hpp"
#include "diet/model.hpp"
#include "diet/optim.hpp"

namespace diet {

struct TrainConfig {
  double lr = 0.001;
  double weight_decay = 0.05;
  double label_smoothing = 0.8;
  std::size_t warmup_epochs = 10;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  std::uint64_t seed = 0;
  bool scale_lr_by_batch = true;
  bool shuffle = true;
  AdamWConfig adamw;
  /// Online probe cadence in epochs; 0 → max(1, epochs / 50).
  std::size_t probe_every = 0;
  /// Stop after the first probed epoch whose accuracy reaches this value.
  std::optional<double> stop_at_probe_acc;
  unsigned threads = 1;

  void validate() const;
  /// Peak learning rate after optional batch-size scaling.
  double peak_lr() const;
  std::size_t probe_cadence() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct XentResult {
  double loss = 0.0;  // mean over the batch
  Matrix grad;        // dLoss/dLogits = (softmax − targets) / B
};

/// Cross-entropy against (1−ε)·onehot(target) + ε/C·𝟙, C = logits.cols().
XentResult smoothed_xent(const Matrix& logits, std::span<const std::size_t> targets,
                         double epsilon);

struct MetricsRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double lr = 0.0;  // learning rate of the epoch's last step
  std::optional<double> probe_acc;
  double seconds = 0.0;  // wall clock since training start

  /// Deterministic JSON line: epoch, loss, lr, probe_acc (null when absent).
  std::string to_json_line() const;
  static MetricsRecord from_json_line(const std::string& line);
};

/// Called after epochs selected by the probe cadence; returns probe accuracy.
using ProbeHook = std::function<std::optional<double>(const Model&, std::size_t epoch)>;

struct TrainResult {
  Model model;
  std::vector<MetricsRecord> log;
};

/// Raised on a non-finite loss or gradient. Carries the model as of the last
/// completed epoch and the metrics logged so far.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(const std::string& what, Model last_good, std::vector<MetricsRecord> log)
      : NumericError(what), last_good_(std::move(last_good)), log_(std::move(log)) {}
  const Model& last_good() const noexcept { return last_good_; }
  const std::vector<MetricsRecord>& log() const noexcept { return log_; }

 private:
  Model last_good_;
  std::vector<MetricsRecord> log_;
};

/// DIET: every sample's target is its dataset index. The head must have
/// ds.size() rows.
TrainResult train_diet(const IndexedDataset& ds, Model model, const TrainConfig& cfg,
                       const std::optional<augment::AugmentPipeline>& pipeline = {},
                       const ProbeHook& probe = {});

/// Same loop with true labels as targets; the head has one row per class.
TrainResult train_supervised(const IndexedDataset& ds, Model model, const TrainConfig& cfg,
                             const std::optional<augment::AugmentPipeline>& pipeline = {},
                             const ProbeHook& probe = {});

}  // namespace diet
