// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diet/linalg.hpp"

namespace diet {

enum class BackboneKind { kLinear, kMlp };

std::string_view to_string(BackboneKind k);
BackboneKind parse_backbone_kind(std::string_view s);

/// Affine layer y = x Wᵀ + b with W stored out × in.
struct Dense {
  Matrix weight;
  std::vector<double> bias;  // empty when the backbone has no biases

  friend bool operator==(const Dense&, const Dense&) = default;
};

struct BackboneGrads {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;
};

// Feature extractor: affine layers with a rectifier between consecutive
// layers (none after the last). widths = {D, hidden..., K}.
class Backbone {
 public:
  Backbone(BackboneKind kind, std::vector<std::size_t> widths, std::vector<Dense> layers,
           bool use_bias, std::uint64_t seed);

  BackboneKind kind() const noexcept { return kind_; }
  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  std::size_t input_dim() const noexcept { return widths_.front(); }
  std::size_t output_dim() const noexcept { return widths_.back(); }
  bool use_bias() const noexcept { return use_bias_; }
  std::uint64_t seed() const noexcept { return seed_; }

  const std::vector<Dense>& layers() const noexcept { return layers_; }
  std::vector<Dense>& layers() noexcept { return layers_; }
  std::size_t parameter_count() const noexcept;

  /// Forward pass that caches activations for backward().
  Matrix forward(const Matrix& batch);
  /// Forward pass with no side effects; safe to call concurrently.
  Matrix infer(const Matrix& batch) const;
  /// Gradients given dLoss/dOutput for the cached batch. Also returns
  /// dLoss/dInput through `d_input` when non-null.
  BackboneGrads backward(const Matrix& d_output, Matrix* d_input = nullptr) const;
  /// Output of the cached forward pass; throws StateError when absent.
  const Matrix& cached_output() const;
  void clear_cache() noexcept { cache_.clear(); }

  friend bool operator==(const Backbone& a, const Backbone& b) {
    return a.kind_ == b.kind_ && a.widths_ == b.widths_ && a.use_bias_ == b.use_bias_ &&
           a.seed_ == b.seed_ && a.layers_ == b.layers_;
  }

 private:
  BackboneKind kind_;
  std::vector<std::size_t> widths_;
  std::vector<Dense> layers_;
  bool use_bias_;
  std::uint64_t seed_;
  // cache_[i] is the input to layer i; cache_.back() is the output.
  std::vector<Matrix> cache_;
};

/// Weights uniform in ±1/√fan_in, biases zero.
Backbone init_backbone(BackboneKind kind, std::vector<std::size_t> widths, std::uint64_t seed,
                       bool use_bias = true);

enum class HeadInit { kUniform, kZeros };

/// Bias-free linear classifier over dataset indices: N × K.
struct DietHead {
  Matrix w;
  friend bool operator==(const DietHead&, const DietHead&) = default;
};

DietHead init_head(std::size_t rows, std::size_t features, std::uint64_t seed,
                   HeadInit init = HeadInit::kUniform);

/// feats · wᵀ, no bias.
Matrix head_logits(const DietHead& h, const Matrix& feats);

struct Model {
  Backbone backbone;
  DietHead head;

  friend bool operator==(const Model&, const Model&) = default;
};

struct ModelGrads {
  BackboneGrads backbone;
  Matrix head;
};

/// Forward through backbone and head, caching what backward() needs.
Matrix model_forward(Model& m, const Matrix& batch);
/// Reverse pass for the most recent model_forward().
ModelGrads model_backward(const Model& m, const Matrix& d_logits);

/// Flat views in a fixed order: per layer weight then bias, then the head.
std::vector<std::span<double>> parameter_views(Model& m);
std::vector<std::span<const double>> gradient_views(const ModelGrads& g);
std::vector<std::size_t> parameter_sizes(const Model& m);

// Checkpoint = JSON manifest `<stem>.json` + raw little-endian float64 blob
// `<stem>.bin`. Returns the manifest path.
std::filesystem::path save_checkpoint(const Model& m, const std::filesystem::path& stem);
Model load_checkpoint(const std::filesystem::path& manifest);

}  // namespace diet
