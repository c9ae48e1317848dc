// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "diet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

#include "diet/error.hpp"
#include "diet/rng.hpp"

namespace diet {

IndexedDataset::IndexedDataset(Matrix samples, std::optional<std::vector<int>> labels,
                               std::optional<ImageShape> image_shape)
    : samples_(std::move(samples)), labels_(std::move(labels)), shape_(image_shape) {
  if (samples_.rows() == 0 || samples_.cols() == 0) {
    throw ArgumentError("IndexedDataset: empty sample collection");
  }
  if (labels_ && labels_->size() != samples_.rows()) {
    throw ArgumentError("IndexedDataset: " + std::to_string(labels_->size()) +
                        " labels for " + std::to_string(samples_.rows()) + " samples");
  }
  if (labels_ && std::any_of(labels_->begin(), labels_->end(), [](int y) { return y < 0; })) {
    throw ArgumentError("IndexedDataset: negative label");
  }
  if (shape_ && shape_->size() != samples_.cols()) {
    throw ArgumentError("IndexedDataset: image shape does not match sample width");
  }
}

IndexedItem IndexedDataset::item(std::size_t n) const {
  if (n >= size()) throw ArgumentError("IndexedDataset::item: index out of range");
  return {samples_.row(n), n};
}

const std::vector<int>& IndexedDataset::labels() const {
  if (!labels_) throw ArgumentError("dataset has no labels");
  return *labels_;
}

std::size_t IndexedDataset::num_classes() const {
  const auto& y = labels();
  return static_cast<std::size_t>(*std::max_element(y.begin(), y.end())) + 1;
}

IndexedDataset with_indices(Matrix samples, std::optional<std::vector<int>> labels,
                            std::optional<ImageShape> image_shape) {
  return IndexedDataset(std::move(samples), std::move(labels), image_shape);
}

// --- IDX ---------------------------------------------------------------------

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
         (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

// Returns the dimension sizes after validating the magic number.
std::vector<std::size_t> parse_idx_header(const std::vector<std::uint8_t>& bytes,
                                          std::uint8_t expected_dims,
                                          const std::filesystem::path& path) {
  if (bytes.size() < 4) throw LengthError(path.string() + ": truncated IDX header");
  if (bytes[0] != 0 || bytes[1] != 0 || bytes[2] != 0x08 || bytes[3] != expected_dims) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%02x %02x %02x %02x", bytes[0], bytes[1], bytes[2],
                  bytes[3]);
    throw FormatError(path.string() + ": bad IDX magic " + buf + " (expected 00 00 08 " +
                      (expected_dims == 3 ? "03" : "01") + ")");
  }
  const std::size_t header = 4 + 4 * std::size_t{expected_dims};
  if (bytes.size() < header) throw LengthError(path.string() + ": truncated IDX header");
  std::vector<std::size_t> dims(expected_dims);
  std::size_t count = 1;
  for (std::size_t i = 0; i < expected_dims; ++i) {
    dims[i] = read_be32(bytes.data() + 4 + 4 * i);
    count *= dims[i];
  }
  if (bytes.size() - header < count) {
    throw LengthError(path.string() + ": payload has " + std::to_string(bytes.size() - header) +
                      " bytes, header declares " + std::to_string(count));
  }
  return dims;
}

}  // namespace

IndexedDataset load_idx(const std::filesystem::path& images,
                        const std::optional<std::filesystem::path>& labels) {
  const auto bytes = read_file(images);
  const auto dims = parse_idx_header(bytes, 3, images);
  const std::size_t n = dims[0], h = dims[1], w = dims[2];
  Matrix x(n, h * w);
  const std::uint8_t* px = bytes.data() + 16;
  auto out = x.data();
  for (std::size_t i = 0; i < n * h * w; ++i) out[i] = px[i] / 255.0;

  std::optional<std::vector<int>> y;
  if (labels) {
    const auto lbytes = read_file(*labels);
    const auto ldims = parse_idx_header(lbytes, 1, *labels);
    if (ldims[0] != n) {
      throw FormatError(labels->string() + ": " + std::to_string(ldims[0]) +
                        " labels for " + std::to_string(n) + " images");
    }
    y.emplace(lbytes.begin() + 8, lbytes.begin() + 8 + static_cast<std::ptrdiff_t>(n));
  }
  return IndexedDataset(std::move(x), std::move(y), ImageShape{1, h, w});
}

void write_idx_images(const std::filesystem::path& path, std::size_t height,
                      std::size_t width, std::span<const std::uint8_t> pixels) {
  if (height == 0 || width == 0 || pixels.size() % (height * width) != 0) {
    throw ArgumentError("write_idx_images: pixel count is not a multiple of H*W");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const char magic[4] = {0, 0, 0x08, 0x03};
  out.write(magic, 4);
  put_be32(out, static_cast<std::uint32_t>(pixels.size() / (height * width)));
  put_be32(out, static_cast<std::uint32_t>(height));
  put_be32(out, static_cast<std::uint32_t>(width));
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  const char magic[4] = {0, 0, 0x08, 0x01};
  out.write(magic, 4);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

// --- CSV ---------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view f = line.substr(start, comma == std::string_view::npos
                                                ? std::string_view::npos
                                                : comma - start);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r'))
      f.remove_suffix(1);
    out.push_back(f);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

void append_double(std::string& out, double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  out.append(buf, res.ptr);
}

}  // namespace

IndexedDataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  bool first = true;
  bool has_labels = false;
  std::size_t width = 0;
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t rows = 0, line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    if (first) {
      first = false;
      double probe;
      if (!parse_double(fields[0], probe)) {
        has_labels = fields[0] == "label";
        width = fields.size() - (has_labels ? 1 : 0);
        continue;
      }
      width = fields.size();
    }
    const std::size_t expect = width + (has_labels ? 1 : 0);
    if (fields.size() != expect) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(expect) + " fields, got " +
                        std::to_string(fields.size()));
    }
    std::size_t start = 0;
    if (has_labels) {
      int y = 0;
      const auto f = fields[0];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), y);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || y < 0) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad label");
      }
      labels.push_back(y);
      start = 1;
    }
    for (std::size_t i = start; i < fields.size(); ++i) {
      double x;
      if (!parse_double(fields[i], x)) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": bad number '" + std::string(fields[i]) + "'");
      }
      values.push_back(x);
    }
    ++rows;
  }
  if (rows == 0) throw ArgumentError(path.string() + ": no samples");
  std::optional<std::vector<int>> y;
  if (has_labels) y = std::move(labels);
  return IndexedDataset(Matrix(rows, width, std::move(values)), std::move(y), std::nullopt);
}

void save_csv(const IndexedDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  std::string line;
  if (ds.has_labels()) line = "label";
  for (std::size_t j = 0; j < ds.dim(); ++j) {
    if (!line.empty()) line += ',';
    line += 'f';
    line += std::to_string(j);
  }
  line += '\n';
  out << line;
  for (std::size_t n = 0; n < ds.size(); ++n) {
    line.clear();
    if (ds.has_labels()) {
      line += std::to_string(ds.labels()[n]);
      line += ',';
    }
    const auto row = ds.sample(n);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) line += ',';
      append_double(line, row[j]);
    }
    line += '\n';
    out << line;
  }
  if (!out) throw IoError("write failed: " + path.string());
}

// --- Blobs -------------------------------------------------------------------

namespace {

void validate(const BlobsSpec& s) {
  if (s.classes == 0 || s.per_class == 0 || s.dim == 0) {
    throw ArgumentError("gen_blobs: classes, per_class and dim must be >= 1");
  }
  if (!(s.spread >= 0.0) || !std::isfinite(s.spread)) {
    throw ArgumentError("gen_blobs: spread must be >= 0");
  }
  if (!(s.center_scale > 0.0)) throw ArgumentError("gen_blobs: center_scale must be > 0");
}

Matrix blob_centroids(const BlobsSpec& s) {
  // Rejection keeps every pair at least half the typical distance apart.
  Rng rng(derive_seed(s.seed, "blobs/centroids"));
  const double min_dist = 0.5 * s.center_scale * std::sqrt(2.0 * static_cast<double>(s.dim));
  Matrix c(s.classes, s.dim);
  for (std::size_t k = 0; k < s.classes; ++k) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (double& x : c.row(k)) x = s.center_scale * rng.normal();
      bool ok = true;
      for (std::size_t j = 0; j < k && ok; ++j) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < s.dim; ++i) d2 += std::pow(c(k, i) - c(j, i), 2);
        ok = std::sqrt(d2) >= min_dist;
      }
      if (ok) break;
    }
  }
  return c;
}

IndexedDataset draw_blobs(const BlobsSpec& s, std::size_t per_class, std::uint64_t split) {
  const Matrix c = blob_centroids(s);
  Rng rng(derive_seed(s.seed, "blobs/noise", split));
  Matrix x(s.classes * per_class, s.dim);
  std::vector<int> y(x.rows());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    const std::size_t k = n / per_class;
    y[n] = static_cast<int>(k);
    for (std::size_t i = 0; i < s.dim; ++i) {
      x(n, i) = c(k, i) + (s.spread > 0.0 ? s.spread * rng.normal() : 0.0);
    }
  }
  return IndexedDataset(std::move(x), std::move(y), std::nullopt);
}

}  // namespace

IndexedDataset gen_blobs(const BlobsSpec& spec) {
  validate(spec);
  return draw_blobs(spec, spec.per_class, 0);
}

IndexedDataset gen_blobs_split(const BlobsSpec& spec, std::size_t per_class,
                               std::uint64_t split) {
  validate(spec);
  if (per_class == 0) throw ArgumentError("gen_blobs_split: per_class must be >= 1");
  return draw_blobs(spec, per_class, split);
}

// --- Batching ----------------------------------------------------------------

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, std::uint64_t seed,
                                     std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (shuffle && n > 1) {
    Rng rng(derive_seed(seed, "data/shuffle", epoch));
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[rng.below(i + 1)]);
    }
  }
  return order;
}

BatchStream::BatchStream(const IndexedDataset& ds, std::size_t batch_size, bool shuffle,
                         std::uint64_t seed, std::size_t epoch)
    : ds_(&ds), batch_size_(batch_size), order_(epoch_order(ds.size(), shuffle, seed, epoch)) {
  if (batch_size == 0) throw ArgumentError("BatchStream: batch_size must be >= 1");
}

std::size_t BatchStream::num_batches() const noexcept {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::optional<Batch> BatchStream::next() {
  if (pos_ >= order_.size()) return std::nullopt;
  const std::size_t end = std::min(order_.size(), pos_ + batch_size_);
  Batch b;
  b.indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                   order_.begin() + static_cast<std::ptrdiff_t>(end));
  b.inputs = gather_rows(ds_->samples(), b.indices);
  pos_ = end;
  return b;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

FeatureNormalizer FeatureNormalizer::fit(const IndexedDataset& ds) {
  FeatureNormalizer f{std::vector<double>(ds.dim(), 0.0), std::vector<double>(ds.dim(), 0.0)};
  const double inv = 1.0 / static_cast<double>(ds.size());
  for (std::size_t n = 0; n < ds.size(); ++n) {
    const auto r = ds.sample(n);
    for (std::size_t j = 0; j < r.size(); ++j) f.mean[j] += r[j] * inv;
  }
  for (std::size_t n = 0; n < ds.size(); ++n) {
    const auto r = ds.sample(n);
    for (std::size_t j = 0; j < r.size(); ++j) f.stddev[j] += std::pow(r[j] - f.mean[j], 2) * inv;
  }
  for (double& s : f.stddev) s = s > 0.0 ? std::sqrt(s) : 1.0;
  return f;
}

IndexedDataset FeatureNormalizer::apply(const IndexedDataset& ds) const {
  if (ds.dim() != mean.size()) throw ShapeError("FeatureNormalizer: width mismatch");
  if (ds.image_shape()) {
    throw ArgumentError("feature normalization applies to flat features only");
  }
  Matrix x = ds.samples();
  for (std::size_t n = 0; n < x.rows(); ++n) {
    auto r = x.row(n);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = (r[j] - mean[j]) / stddev[j];
  }
  std::optional<std::vector<int>> y;
  if (ds.has_labels()) y = ds.labels();
  return IndexedDataset(std::move(x), std::move(y), std::nullopt);
}

}  // namespace diet
