// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "diet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "diet/augment.hpp"
#include "diet/error.hpp"

namespace diet {

namespace {

Matrix eval_inputs(const IndexedDataset& ds, const std::optional<ImageShape>& resize_to) {
  if (!resize_to || !ds.image_shape() || *resize_to == *ds.image_shape()) return ds.samples();
  const ImageShape& in = *ds.image_shape();
  if (resize_to->channels != in.channels) {
    throw ShapeError("extract_features: channel count differs from the evaluation shape");
  }
  Matrix out(ds.size(), resize_to->size());
  for (std::size_t n = 0; n < ds.size(); ++n) {
    const auto img = augment::resize_bilinear(augment::to_image(ds.sample(n), in),
                                              resize_to->height, resize_to->width);
    std::copy(img.values.begin(), img.values.end(), out.row(n).begin());
  }
  return out;
}

}  // namespace

FeatureBank extract_features(const Backbone& backbone, const IndexedDataset& ds,
                             const std::string& split,
                             const std::optional<ImageShape>& resize_to) {
  if (!ds.has_labels()) throw ArgumentError("extract_features: dataset has no labels");
  return {backbone.infer(eval_inputs(ds, resize_to)), ds.labels(), split};
}

double top1(const Matrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) throw ShapeError("top1: label count mismatch");
  if (logits.rows() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto r = logits.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < r.size(); ++c)
      if (r[c] > r[best]) best = c;
    if (static_cast<int>(best) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

ProbeResult linear_probe(const FeatureBank& train, const FeatureBank& test,
                         const ProbeConfig& cfg) {
  if (train.features.cols() != test.features.cols()) {
    throw ShapeError("linear_probe: train/test feature widths differ");
  }
  if (train.features.rows() != train.labels.size() ||
      test.features.rows() != test.labels.size()) {
    throw ShapeError("linear_probe: features and labels are misaligned");
  }
  if (!train.features.all_finite() || !test.features.all_finite()) {
    throw NumericError("linear_probe: non-finite features");
  }
  std::vector<int> distinct = train.labels;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw DegenerateError("linear_probe: train split has a single class");

  int max_label = distinct.back();
  for (int y : test.labels) max_label = std::max(max_label, y);
  const std::size_t classes = static_cast<std::size_t>(max_label) + 1;
  const std::size_t m = train.features.rows();
  const std::size_t k = train.features.cols();

  Matrix xtr = train.features;
  Matrix xte = test.features;
  if (cfg.standardize) {
    std::vector<double> mean(k, 0.0), sd(k, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) mean[j] += xtr(i, j) / static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) sd[j] += std::pow(xtr(i, j) - mean[j], 2) / static_cast<double>(m);
    for (double& s : sd) s = s > 1e-24 ? std::sqrt(s) : 1.0;
    for (Matrix* x : {&xtr, &xte})
      for (std::size_t i = 0; i < x->rows(); ++i)
        for (std::size_t j = 0; j < k; ++j) (*x)(i, j) = ((*x)(i, j) - mean[j]) / sd[j];
  }

  ProbeResult r;
  r.classes = classes;
  r.weight = Matrix(classes, k);
  r.bias.assign(classes, 0.0);
  const double inv_m = 1.0 / static_cast<double>(m);

  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    Matrix logits = matmul_nt(xtr, r.weight);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < classes; ++c) logits(i, c) += r.bias[c];
    Matrix g = softmax_rows(logits);
    for (std::size_t i = 0; i < m; ++i) g(i, static_cast<std::size_t>(train.labels[i])) -= 1.0;
    for (double& v : g.data()) v *= inv_m;

    Matrix gw = matmul_tn(g, xtr);  // C × K
    std::vector<double> gb(classes, 0.0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < classes; ++c) gb[c] += g(i, c);
    double norm2 = 0.0;
    auto gwd = gw.data();
    auto wd = r.weight.data();
    for (std::size_t t = 0; t < gwd.size(); ++t) {
      gwd[t] += cfg.weight_decay * wd[t];
      norm2 += gwd[t] * gwd[t];
    }
    for (double v : gb) norm2 += v * v;
    r.grad_norm = std::sqrt(norm2);
    if (r.grad_norm < cfg.grad_tol) break;

    for (std::size_t t = 0; t < gwd.size(); ++t) wd[t] -= cfg.lr * gwd[t];
    for (std::size_t c = 0; c < classes; ++c) r.bias[c] -= cfg.lr * gb[c];
    r.steps = step + 1;
  }

  auto predict = [&](const Matrix& x) {
    Matrix logits = matmul_nt(x, r.weight);
    for (std::size_t i = 0; i < x.rows(); ++i)
      for (std::size_t c = 0; c < classes; ++c) logits(i, c) += r.bias[c];
    return logits;
  };
  r.train_acc = top1(predict(xtr), train.labels);
  r.test_acc = top1(predict(xte), test.labels);
  return r;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[idx[t]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("spearman: series lengths differ");
  if (x.size() < 3) throw ArgumentError("spearman: need at least 3 points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double loss_acc_correlation(std::span<const MetricsRecord> log) {
  std::vector<double> loss, acc;
  for (const auto& r : log) {
    if (!r.probe_acc) continue;
    loss.push_back(r.loss);
    acc.push_back(*r.probe_acc);
  }
  if (loss.size() < 3) {
    throw ArgumentError("loss_acc_correlation: need at least 3 probed records, got " +
                        std::to_string(loss.size()));
  }
  return spearman(loss, acc);
}

double classifier_accuracy(const Model& model, const IndexedDataset& ds,
                           const std::optional<ImageShape>& resize_to) {
  if (!ds.has_labels()) throw ArgumentError("classifier_accuracy: dataset has no labels");
  return top1(head_logits(model.head, model.backbone.infer(eval_inputs(ds, resize_to))),
              ds.labels());
}

}  // namespace diet
