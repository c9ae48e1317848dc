// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "diet/linalg.hpp"

namespace diet {

struct ImageShape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const noexcept { return channels * height * width; }
  friend bool operator==(const ImageShape&, const ImageShape&) = default;
};

/// One sample together with its dataset index, which is its DIET target.
struct IndexedItem {
  std::span<const double> sample;
  std::size_t index;
};

// Immutable after construction. Row n of `samples()` is sample n; labels are
// carried for evaluation only and never used as training targets by DIET.
class IndexedDataset {
 public:
  IndexedDataset(Matrix samples, std::optional<std::vector<int>> labels,
                 std::optional<ImageShape> image_shape);

  std::size_t size() const noexcept { return samples_.rows(); }
  std::size_t dim() const noexcept { return samples_.cols(); }

  IndexedItem item(std::size_t n) const;
  std::span<const double> sample(std::size_t n) const { return samples_.row(n); }
  const Matrix& samples() const noexcept { return samples_; }

  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::vector<int>& labels() const;
  /// Number of classes, max label + 1. Requires labels.
  std::size_t num_classes() const;

  const std::optional<ImageShape>& image_shape() const noexcept { return shape_; }

  friend bool operator==(const IndexedDataset&, const IndexedDataset&) = default;

 private:
  Matrix samples_;
  std::optional<std::vector<int>> labels_;
  std::optional<ImageShape> shape_;
};

IndexedDataset with_indices(Matrix samples, std::optional<std::vector<int>> labels = {},
                            std::optional<ImageShape> image_shape = {});

// --- IDX (u8 only) -----------------------------------------------------------

/// Images with magic 00 00 08 03 (N, H, W), labels with 00 00 08 01 (N).
/// Pixels are mapped to [0,1] by /255.
IndexedDataset load_idx(const std::filesystem::path& images,
                        const std::optional<std::filesystem::path>& labels = {});

void write_idx_images(const std::filesystem::path& path, std::size_t height,
                      std::size_t width, std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

// --- CSV ---------------------------------------------------------------------

// Header row is optional; when present and its first field is "label", the
// first column holds integer class labels. Numbers use the shortest
// round-trip representation, so save → load is bit-exact.
IndexedDataset load_csv(const std::filesystem::path& path);
void save_csv(const IndexedDataset& ds, const std::filesystem::path& path);

// --- Synthetic blobs ---------------------------------------------------------

struct BlobsSpec {
  std::size_t classes = 8;
  std::size_t per_class = 125;
  std::size_t dim = 32;
  double spread = 0.1;
  std::uint64_t seed = 0;
  /// Per-coordinate standard deviation of the class centroids.
  double center_scale = 0.08;

  friend bool operator==(const BlobsSpec&, const BlobsSpec&) = default;
};

/// Class-major blobs: sample n belongs to class n / per_class. With
/// spread = 0 this is the clustered low-rank model.
IndexedDataset gen_blobs(const BlobsSpec& spec);
/// Fresh draw around the same centroids as gen_blobs(spec), for held-out
/// evaluation. `split` selects the noise stream.
IndexedDataset gen_blobs_split(const BlobsSpec& spec, std::size_t per_class,
                               std::uint64_t split = 1);

// --- Batching ----------------------------------------------------------------

/// Sample order for one epoch; a pure function of (n, shuffle, seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, std::uint64_t seed,
                                     std::size_t epoch);

struct Batch {
  std::vector<std::size_t> indices;
  Matrix inputs;  // indices.size() × dim
};

// Per-consumer cursor over one epoch. The last partial batch is kept.
class BatchStream {
 public:
  BatchStream(const IndexedDataset& ds, std::size_t batch_size, bool shuffle,
              std::uint64_t seed, std::size_t epoch);

  std::optional<Batch> next();
  std::size_t num_batches() const noexcept;

 private:
  const IndexedDataset* ds_;
  std::size_t batch_size_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);

/// Per-feature z-score statistics fitted on one dataset and applied to others.
struct FeatureNormalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static FeatureNormalizer fit(const IndexedDataset& ds);
  IndexedDataset apply(const IndexedDataset& ds) const;
};

}  // namespace diet
