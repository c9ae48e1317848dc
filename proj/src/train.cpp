// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "diet/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include <json.hpp>

#include "diet/error.hpp"

namespace diet {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ArgumentError("train: lr must be > 0");
  if (!(weight_decay >= 0.0)) throw ArgumentError("train: weight_decay must be >= 0");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
    throw ArgumentError("train: label_smoothing must lie in [0, 1)");
  }
  if (warmup_epochs > epochs) throw ArgumentError("train: warmup_epochs exceeds epochs");
  if (batch_size == 0) throw ArgumentError("train: batch_size must be >= 1");
}

double TrainConfig::peak_lr() const { return scale_lr_by_batch ? scale_lr(lr, batch_size) : lr; }

std::size_t TrainConfig::probe_cadence() const {
  return probe_every ? probe_every : std::max<std::size_t>(1, epochs / 50);
}

XentResult smoothed_xent(const Matrix& logits, std::span<const std::size_t> targets,
                         double epsilon) {
  if (targets.size() != logits.rows()) {
    throw ShapeError("smoothed_xent: " + std::to_string(targets.size()) + " targets for " +
                     std::to_string(logits.rows()) + " rows");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw ArgumentError("smoothed_xent: epsilon must lie in [0, 1)");
  }
  const std::size_t classes = logits.cols();
  for (std::size_t t : targets) {
    if (t >= classes) {
      throw ArgumentError("smoothed_xent: target " + std::to_string(t) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
  }
  const double off = epsilon / static_cast<double>(classes);
  const double on = (1.0 - epsilon) + off;
  const double inv_b = 1.0 / static_cast<double>(logits.rows());

  XentResult r{0.0, softmax_rows(logits)};
  const auto lse = log_sum_exp_rows(logits);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    double dot = 0.0;  // Σ_c t_c z_c
    if (off != 0.0) {
      double sum = 0.0;
      for (double v : z) sum += v;
      dot = off * sum + (on - off) * z[targets[i]];
    } else {
      dot = z[targets[i]];
    }
    total += lse[i] - dot;

    auto g = r.grad.row(i);
    for (double& v : g) v = (v - off) * inv_b;
    g[targets[i]] -= (on - off) * inv_b;
  }
  r.loss = total * inv_b;
  return r;
}

std::string MetricsRecord::to_json_line() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["loss"] = loss;
  j["lr"] = lr;
  j["probe_acc"] = probe_acc ? nlohmann::ordered_json(*probe_acc) : nlohmann::ordered_json();
  return j.dump();
}

MetricsRecord MetricsRecord::from_json_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  MetricsRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.loss = j.at("loss").get<double>();
  r.lr = j.at("lr").get<double>();
  if (j.contains("probe_acc") && !j["probe_acc"].is_null()) r.probe_acc = j["probe_acc"].get<double>();
  if (j.contains("seconds")) r.seconds = j["seconds"].get<double>();
  return r;
}

namespace {

TrainResult run_training(const IndexedDataset& ds, Model model,
                         const std::vector<std::size_t>& targets, const TrainConfig& cfg,
                         const std::optional<augment::AugmentPipeline>& pipeline,
                         const ProbeHook& probe) {
  cfg.validate();
  if (pipeline && !ds.image_shape()) {
    throw ArgumentError("train: augmentation requires image samples");
  }
  const std::size_t steps_per_epoch = (ds.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = cfg.epochs * steps_per_epoch;
  const std::size_t warmup_steps = cfg.warmup_epochs * steps_per_epoch;
  const double peak = cfg.peak_lr();
  const std::size_t cadence = cfg.probe_cadence();

  AdamW opt(parameter_sizes(model), cfg.adamw);
  TrainResult result{model, {}};
  Model last_good = model;
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t step = 0;

  std::vector<std::size_t> batch_targets;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    BatchStream stream(ds, cfg.batch_size, cfg.shuffle, cfg.seed, epoch);
    double loss_sum = 0.0;
    double lr = 0.0;
    while (auto batch = stream.next()) {
      Matrix inputs = pipeline ? augment::augment_batch(*pipeline, batch->inputs, batch->indices,
                                                        *ds.image_shape(), cfg.seed, epoch,
                                                        cfg.threads)
                               : std::move(batch->inputs);
      batch_targets.clear();
      for (std::size_t n : batch->indices) batch_targets.push_back(targets[n]);

      const Matrix logits = model_forward(model, inputs);
      XentResult xent;
      bool finite = logits.all_finite();
      if (finite) {
        xent = smoothed_xent(logits, batch_targets, cfg.label_smoothing);
        finite = std::isfinite(xent.loss);
      }
      if (!finite) {
        throw TrainingAborted("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                  ", step " + std::to_string(step),
                              std::move(last_good), std::move(result.log));
      }
      const ModelGrads grads = model_backward(model, xent.grad);
      lr = lr_at(step, total_steps, warmup_steps, peak);
      try {
        opt.step(parameter_views(model), gradient_views(grads), lr, cfg.weight_decay);
      } catch (const NumericError& e) {
        throw TrainingAborted(std::string(e.what()) + " at epoch " + std::to_string(epoch + 1),
                              std::move(last_good), std::move(result.log));
      }
      loss_sum += xent.loss * static_cast<double>(batch->indices.size());
      ++step;
    }
    model.backbone.clear_cache();

    MetricsRecord rec;
    rec.epoch = epoch + 1;
    rec.loss = loss_sum / static_cast<double>(ds.size());
    rec.lr = lr;
    if (probe && (rec.epoch % cadence == 0 || rec.epoch == cfg.epochs)) {
      rec.probe_acc = probe(model, rec.epoch);
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(rec);
    last_good = model;
    if (cfg.stop_at_probe_acc && rec.probe_acc && *rec.probe_acc >= *cfg.stop_at_probe_acc) break;
  }
  result.model = std::move(model);
  return result;
}

}  // namespace

TrainResult train_diet(const IndexedDataset& ds, Model model, const TrainConfig& cfg,
                       const std::optional<augment::AugmentPipeline>& pipeline,
                       const ProbeHook& probe) {
  if (model.head.w.rows() != ds.size()) {
    throw ArgumentError("train_diet: head has " + std::to_string(model.head.w.rows()) +
                        " rows for a dataset of " + std::to_string(ds.size()));
  }
  std::vector<std::size_t> targets(ds.size());
  for (std::size_t n = 0; n < ds.size(); ++n) targets[n] = ds.item(n).index;
  return run_training(ds, std::move(model), targets, cfg, pipeline, probe);
}

TrainResult train_supervised(const IndexedDataset& ds, Model model, const TrainConfig& cfg,
                             const std::optional<augment::AugmentPipeline>& pipeline,
                             const ProbeHook& probe) {
  if (!ds.has_labels()) throw ArgumentError("train_supervised: dataset has no labels");
  if (model.head.w.rows() < ds.num_classes()) {
    throw ArgumentError("train_supervised: head has fewer rows than classes");
  }
  std::vector<std::size_t> targets(ds.labels().begin(), ds.labels().end());
  return run_training(ds, std::move(model), targets, cfg, pipeline, probe);
}

}  // namespace diet
