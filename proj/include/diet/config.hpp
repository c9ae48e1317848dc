// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run configurations for the command-line tool. Each serializes to JSON and
// back losslessly; parsing rejects unknown keys so a resolved config is a
// complete description of a run.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "diet/data.hpp"
#include "diet/eval.hpp"
#include "diet/model.hpp"
#include "diet/train.hpp"

namespace diet::config {

using Json = nlohmann::ordered_json;

struct BlobsSource {
  BlobsSpec spec;
  std::size_t test_per_class = 0;  // 0 → same as per_class

  friend bool operator==(const BlobsSource&, const BlobsSource&) = default;
};

/// Exactly one of csv / idx_images / blobs is set.
struct DataSource {
  std::string csv;
  std::string idx_images;
  std::string idx_labels;
  std::optional<BlobsSource> blobs;

  bool empty() const noexcept { return csv.empty() && idx_images.empty() && !blobs; }
  void validate(const char* what) const;
  friend bool operator==(const DataSource&, const DataSource&) = default;
};

struct BackboneSpec {
  BackboneKind kind = BackboneKind::kMlp;
  std::vector<std::size_t> hidden{64};
  std::size_t features = 32;
  bool bias = true;

  /// "linear" or "mlp:64[,64...]".
  static BackboneSpec parse(const std::string& text, std::size_t features, bool bias);
  std::string to_string() const;
  std::vector<std::size_t> widths(std::size_t input_dim) const;
  friend bool operator==(const BackboneSpec&, const BackboneSpec&) = default;
};

struct GenDataConfig {
  BlobsSpec blobs;
  std::size_t test_per_class = 0;
  std::string out = "data";

  void validate() const;
  friend bool operator==(const GenDataConfig&, const GenDataConfig&) = default;
};

enum class TrainMode { kDiet, kSupervised };

struct TrainRunConfig {
  DataSource data;
  DataSource test_data;
  std::string backbone = "mlp:64";
  std::size_t features = 32;
  bool bias = true;
  std::string head_init = "uniform";
  TrainMode mode = TrainMode::kDiet;
  TrainConfig train;
  int augment_strength = 0;  // 0 → no augmentation
  std::size_t augment_height = 0;  // 0 → input size
  std::size_t augment_width = 0;
  bool normalize = false;
  ProbeConfig probe;
  bool online_probe = true;
  std::string out = "run";

  void validate() const;
  BackboneSpec backbone_spec() const;
  friend bool operator==(const TrainRunConfig&, const TrainRunConfig&) = default;
};

struct ProbeRunConfig {
  std::string checkpoint;
  DataSource data;
  DataSource test_data;
  bool normalize = false;
  ProbeConfig probe;
  std::string metrics;  // optional metrics.jsonl for the loss/accuracy correlation
  std::string out;      // optional directory for probe.json

  void validate() const;
  friend bool operator==(const ProbeRunConfig&, const ProbeRunConfig&) = default;
};

struct TheoryRunConfig {
  std::size_t k = 4;
  std::size_t reps = 4;
  std::size_t n = 0;  // when set, overrides reps with n / k
  std::size_t dim = 8;
  double kappa = 0.0;  // 0 → smallest κ with κK/N >= 40
  double tol = 1e-6;
  double grad_rel_tol = 1e-8;
  std::uint64_t seed = 0;
  std::size_t steps = 20000;
  double lr = 0.01;
  std::string method = "adam";
  std::size_t record_every = 10;
  std::string out = "theory";

  void validate() const;
  std::size_t resolved_reps() const { return n ? n / k : reps; }
  double resolved_kappa() const;
  friend bool operator==(const TheoryRunConfig&, const TheoryRunConfig&) = default;
};

Json to_json(const GenDataConfig& c);
Json to_json(const TrainRunConfig& c);
Json to_json(const ProbeRunConfig& c);
Json to_json(const TheoryRunConfig& c);

// Throw ConfigError on unknown keys, wrong types or a wrong "command".
GenDataConfig gen_data_from_json(const Json& j);
TrainRunConfig train_from_json(const Json& j);
ProbeRunConfig probe_from_json(const Json& j);
TheoryRunConfig theory_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

/// Load train/test datasets for a source; test is empty when neither an
/// explicit test source nor a blobs spec provides one.
std::pair<IndexedDataset, std::optional<IndexedDataset>> load_data(const DataSource& train,
                                                                   const DataSource& test);

}  // namespace diet::config
