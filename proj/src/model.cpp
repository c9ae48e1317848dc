// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "diet/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "diet/error.hpp"
#include "diet/rng.hpp"

namespace diet {

using nlohmann::json;

std::string_view to_string(BackboneKind k) {
  return k == BackboneKind::kLinear ? "linear" : "mlp";
}

BackboneKind parse_backbone_kind(std::string_view s) {
  if (s == "linear") return BackboneKind::kLinear;
  if (s == "mlp") return BackboneKind::kMlp;
  throw ArgumentError("unknown backbone kind '" + std::string(s) + "'");
}

namespace {

void validate_widths(BackboneKind kind, const std::vector<std::size_t>& widths) {
  if (widths.size() < 2) throw ArgumentError("backbone: need at least input and output widths");
  if (std::any_of(widths.begin(), widths.end(), [](std::size_t w) { return w == 0; })) {
    throw ArgumentError("backbone: zero width");
  }
  if (kind == BackboneKind::kLinear && widths.size() != 2) {
    throw ArgumentError("backbone: linear kind takes exactly (D, K) widths");
  }
  if (kind == BackboneKind::kMlp && widths.size() < 3) {
    throw ArgumentError("backbone: mlp kind needs at least one hidden width");
  }
}

Matrix affine(const Dense& layer, const Matrix& x) {
  Matrix y = matmul_nt(x, layer.weight);
  if (!layer.bias.empty()) {
    for (std::size_t i = 0; i < y.rows(); ++i) {
      auto r = y.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += layer.bias[j];
    }
  }
  return y;
}

void relu_inplace(Matrix& m) {
  for (double& x : m.data()) x = x > 0.0 ? x : 0.0;
}

}  // namespace

Backbone::Backbone(BackboneKind kind, std::vector<std::size_t> widths, std::vector<Dense> layers,
                   bool use_bias, std::uint64_t seed)
    : kind_(kind), widths_(std::move(widths)), layers_(std::move(layers)), use_bias_(use_bias),
      seed_(seed) {
  validate_widths(kind_, widths_);
  if (layers_.size() != widths_.size() - 1) throw ArgumentError("backbone: layer count mismatch");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weight.rows() != widths_[i + 1] || l.weight.cols() != widths_[i]) {
      throw ArgumentError("backbone: layer " + std::to_string(i) + " weight shape mismatch");
    }
    if (l.bias.size() != (use_bias_ ? widths_[i + 1] : 0)) {
      throw ArgumentError("backbone: layer " + std::to_string(i) + " bias size mismatch");
    }
  }
}

std::size_t Backbone::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Matrix Backbone::forward(const Matrix& batch) {
  if (batch.cols() != input_dim()) {
    throw ShapeError("backbone forward: input width " + std::to_string(batch.cols()) +
                     ", expected " + std::to_string(input_dim()));
  }
  cache_.clear();
  cache_.push_back(batch);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Matrix y = affine(layers_[i], cache_.back());
    if (i + 1 < layers_.size()) relu_inplace(y);
    cache_.push_back(std::move(y));
  }
  return cache_.back();
}

Matrix Backbone::infer(const Matrix& batch) const {
  if (batch.cols() != input_dim()) {
    throw ShapeError("backbone infer: input width " + std::to_string(batch.cols()) +
                     ", expected " + std::to_string(input_dim()));
  }
  Matrix h = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = affine(layers_[i], h);
    if (i + 1 < layers_.size()) relu_inplace(h);
  }
  return h;
}

const Matrix& Backbone::cached_output() const {
  if (cache_.empty()) throw StateError("backbone: no cached forward pass");
  return cache_.back();
}

BackboneGrads Backbone::backward(const Matrix& d_output, Matrix* d_input) const {
  if (cache_.empty()) throw StateError("backbone: backward called without a forward pass");
  if (d_output.rows() != cache_.back().rows() || d_output.cols() != output_dim()) {
    throw ShapeError("backbone backward: upstream gradient shape mismatch");
  }
  BackboneGrads g;
  g.weight.resize(layers_.size());
  g.bias.resize(layers_.size());
  Matrix delta = d_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (i + 1 < layers_.size()) {
      // Rectifier: gradient passes where the activation is strictly positive.
      const Matrix& act = cache_[i + 1];
      auto d = delta.data();
      auto a = act.data();
      for (std::size_t t = 0; t < d.size(); ++t)
        if (!(a[t] > 0.0)) d[t] = 0.0;
    }
    g.weight[i] = matmul_tn(delta, cache_[i]);
    if (use_bias_) {
      g.bias[i].assign(layers_[i].weight.rows(), 0.0);
      for (std::size_t r = 0; r < delta.rows(); ++r) {
        const auto row = delta.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) g.bias[i][j] += row[j];
      }
    }
    if (i > 0 || d_input) delta = matmul(delta, layers_[i].weight);
  }
  if (d_input) *d_input = std::move(delta);
  return g;
}

Backbone init_backbone(BackboneKind kind, std::vector<std::size_t> widths, std::uint64_t seed,
                       bool use_bias) {
  validate_widths(kind, widths);
  Rng rng(derive_seed(seed, "model/backbone"));
  std::vector<Dense> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(widths[i]));
    Dense d{Matrix(widths[i + 1], widths[i]), {}};
    for (double& x : d.weight.data()) x = rng.uniform(-bound, bound);
    if (use_bias) d.bias.assign(widths[i + 1], 0.0);
    layers.push_back(std::move(d));
  }
  return Backbone(kind, std::move(widths), std::move(layers), use_bias, seed);
}

DietHead init_head(std::size_t rows, std::size_t features, std::uint64_t seed, HeadInit init) {
  if (rows == 0 || features == 0) throw ArgumentError("init_head: empty head");
  DietHead h{Matrix(rows, features)};
  if (init == HeadInit::kUniform) {
    Rng rng(derive_seed(seed, "model/head"));
    const double bound = 1.0 / std::sqrt(static_cast<double>(features));
    for (double& x : h.w.data()) x = rng.uniform(-bound, bound);
  }
  return h;
}

Matrix head_logits(const DietHead& h, const Matrix& feats) {
  if (feats.cols() != h.w.cols()) {
    throw ShapeError("head_logits: feature width " + std::to_string(feats.cols()) +
                     ", head expects " + std::to_string(h.w.cols()));
  }
  return matmul_nt(feats, h.w);
}

Matrix model_forward(Model& m, const Matrix& batch) {
  return head_logits(m.head, m.backbone.forward(batch));
}

ModelGrads model_backward(const Model& m, const Matrix& d_logits) {
  const Matrix& feats = m.backbone.cached_output();
  if (d_logits.rows() != feats.rows() || d_logits.cols() != m.head.w.rows()) {
    throw ShapeError("model_backward: logits gradient shape mismatch");
  }
  ModelGrads g;
  g.head = matmul_tn(d_logits, feats);
  g.backbone = m.backbone.backward(matmul(d_logits, m.head.w));
  return g;
}

std::vector<std::span<double>> parameter_views(Model& m) {
  std::vector<std::span<double>> out;
  for (auto& l : m.backbone.layers()) {
    out.push_back(l.weight.data());
    if (!l.bias.empty()) out.emplace_back(l.bias);
  }
  out.push_back(m.head.w.data());
  return out;
}

std::vector<std::span<const double>> gradient_views(const ModelGrads& g) {
  std::vector<std::span<const double>> out;
  for (std::size_t i = 0; i < g.backbone.weight.size(); ++i) {
    out.push_back(g.backbone.weight[i].data());
    if (!g.backbone.bias[i].empty()) out.emplace_back(g.backbone.bias[i]);
  }
  out.push_back(g.head.data());
  return out;
}

std::vector<std::size_t> parameter_sizes(const Model& m) {
  std::vector<std::size_t> out;
  for (const auto& l : m.backbone.layers()) {
    out.push_back(l.weight.size());
    if (!l.bias.empty()) out.push_back(l.bias.size());
  }
  out.push_back(m.head.w.size());
  return out;
}

// --- Checkpoints -------------------------------------------------------------

namespace {

void write_le(std::ostream& out, std::span<const double> values) {
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
}

void read_le(const std::vector<unsigned char>& blob, std::size_t& offset, std::span<double> out) {
  if (blob.size() < offset + 8 * out.size()) throw LengthError("checkpoint blob is truncated");
  for (double& v : out) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{blob[offset + i]} << (8 * i);
    v = std::bit_cast<double>(bits);
    offset += 8;
  }
}

}  // namespace

std::filesystem::path save_checkpoint(const Model& m, const std::filesystem::path& stem) {
  const auto manifest_path = std::filesystem::path(stem.string() + ".json");
  const auto blob_path = std::filesystem::path(stem.string() + ".bin");

  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw IoError("cannot write " + blob_path.string());
  json params = json::array();
  std::size_t offset = 0;
  auto add = [&](const std::string& name, std::vector<std::size_t> shape,
                 std::span<const double> v) {
    params.push_back({{"name", name}, {"shape", shape}, {"offset", offset}});
    write_le(blob, v);
    offset += v.size();
  };
  const auto& layers = m.backbone.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    add("backbone." + std::to_string(i) + ".weight",
        {layers[i].weight.rows(), layers[i].weight.cols()}, layers[i].weight.data());
    if (!layers[i].bias.empty()) {
      add("backbone." + std::to_string(i) + ".bias", {layers[i].bias.size()}, layers[i].bias);
    }
  }
  add("head.weight", {m.head.w.rows(), m.head.w.cols()}, m.head.w.data());
  blob.close();
  if (!blob) throw IoError("write failed: " + blob_path.string());

  const json manifest = {
      {"format", "diet-lab-checkpoint"},
      {"version", 1},
      {"kind", to_string(m.backbone.kind())},
      {"widths", m.backbone.widths()},
      {"use_bias", m.backbone.use_bias()},
      {"seed", m.backbone.seed()},
      {"n", m.head.w.rows()},
      {"k", m.head.w.cols()},
      {"blob", blob_path.filename().string()},
      {"byte_order", "little"},
      {"dtype", "float64"},
      {"parameters", params},
  };
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + manifest_path.string());
  out << manifest.dump(2) << '\n';
  return manifest_path;
}

Model load_checkpoint(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open checkpoint " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "diet-lab-checkpoint") {
    throw FormatError(manifest_path.string() + ": not a diet-lab checkpoint");
  }
  const auto kind = parse_backbone_kind(j.at("kind").get<std::string>());
  const auto widths = j.at("widths").get<std::vector<std::size_t>>();
  const bool use_bias = j.at("use_bias").get<bool>();
  const auto seed = j.at("seed").get<std::uint64_t>();
  const auto n = j.at("n").get<std::size_t>();
  const auto k = j.at("k").get<std::size_t>();
  if (k != widths.back()) throw FormatError("checkpoint: head width does not match backbone");

  const auto blob_path = manifest_path.parent_path() / j.at("blob").get<std::string>();
  std::ifstream bin(blob_path, std::ios::binary);
  if (!bin) throw IoError("cannot open checkpoint blob " + blob_path.string());
  const std::vector<unsigned char> blob{std::istreambuf_iterator<char>(bin),
                                        std::istreambuf_iterator<char>()};

  std::size_t offset = 0;
  std::vector<Dense> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    Dense d{Matrix(widths[i + 1], widths[i]), {}};
    read_le(blob, offset, d.weight.data());
    if (use_bias) {
      d.bias.assign(widths[i + 1], 0.0);
      read_le(blob, offset, d.bias);
    }
    layers.push_back(std::move(d));
  }
  DietHead head{Matrix(n, k)};
  read_le(blob, offset, head.w.data());
  if (offset != blob.size()) throw LengthError("checkpoint blob has trailing bytes");
  return Model{Backbone(kind, widths, std::move(layers), use_bias, seed), std::move(head)};
}

}  // namespace diet
