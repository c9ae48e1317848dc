// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <gtest/gtest.h>

#include "diet/data.hpp"
#include "diet/error.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace {

using diet::IndexedDataset;
using diet::Matrix;

TEST(IndexedDataset, ItemsCarryTheirIndex) {
  const IndexedDataset ds = diet::with_indices(Matrix{{1, 2}, {3, 4}, {5, 6}});
  for (std::size_t n = 0; n < 3; ++n) {
    const auto item = ds.item(n);
    EXPECT_EQ(item.index, n);
    EXPECT_EQ(item.sample[0], 2.0 * n + 1);
  }
  EXPECT_THROW(ds.item(3), diet::ArgumentError);
  EXPECT_FALSE(ds.has_labels());
}

TEST(IndexedDataset, RejectsInconsistentInputs) {
  EXPECT_THROW(diet::with_indices(Matrix()), diet::ArgumentError);
  EXPECT_THROW(diet::with_indices(Matrix(2, 2), std::vector<int>{0}), diet::ArgumentError);
  EXPECT_THROW(diet::with_indices(Matrix(2, 2), std::vector<int>{0, -1}), diet::ArgumentError);
  EXPECT_THROW(diet::with_indices(Matrix(2, 4), {}, diet::ImageShape{1, 3, 3}), diet::ArgumentError);
}

TEST(IndexedDataset, ShuffledBatchesReportOriginalIndices) {
  const IndexedDataset ds = diet::with_indices(oracle::random_matrix(13, 3, 1));
  diet::BatchStream stream(ds, 4, true, 9, 2);
  while (auto b = stream.next()) {
    for (std::size_t i = 0; i < b->indices.size(); ++i) {
      const auto row = b->inputs.row(i);
      const auto src = ds.sample(b->indices[i]);
      EXPECT_TRUE(std::equal(row.begin(), row.end(), src.begin()));
    }
  }
}

TEST(Csv, RoundTripIsBitExact) {
  TempDir dir;
  const IndexedDataset ds = diet::with_indices(oracle::random_matrix(5, 4, 2, 1e3), std::vector<int>{0, 1, 2, 1, 0});
  diet::save_csv(ds, dir / "a.csv");
  const IndexedDataset back = diet::load_csv(dir / "a.csv");
  EXPECT_EQ(back, ds);
  for (std::size_t n = 0; n < ds.size(); ++n) EXPECT_EQ(back.item(n).index, n);
}

TEST(Csv, HeaderlessFeaturesOnly) {
  TempDir dir;
  std::ofstream(dir / "b.csv") << "0.5,1\n-2,3e-1\n";
  const IndexedDataset ds = diet::load_csv(dir / "b.csv");
  EXPECT_EQ(ds.samples(), (Matrix{{0.5, 1}, {-2, 0.3}}));
  EXPECT_FALSE(ds.has_labels());
}

TEST(Csv, MalformedInputsThrow) {
  TempDir dir;
  std::ofstream(dir / "ragged.csv") << "1,2\n3\n";
  std::ofstream(dir / "text.csv") << "1,abc\n";
  EXPECT_THROW(diet::load_csv(dir / "ragged.csv"), diet::FormatError);
  EXPECT_THROW(diet::load_csv(dir / "text.csv"), diet::FormatError);
  EXPECT_THROW(diet::load_csv(dir / "missing.csv"), diet::IoError);
}

std::vector<std::uint8_t> be32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
          static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(p, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

TEST(Idx, ParsesHandWrittenHeader) {
  TempDir dir;
  std::vector<std::uint8_t> img{0, 0, 8, 3};
  for (std::uint32_t v : {2u, 2u, 3u})
    for (auto b : be32(v)) img.push_back(b);
  for (int i = 0; i < 12; ++i) img.push_back(static_cast<std::uint8_t>(i * 20));
  write_bytes(dir / "img.idx", img);
  std::vector<std::uint8_t> lab{0, 0, 8, 1};
  for (auto b : be32(2)) lab.push_back(b);
  lab.push_back(7);
  lab.push_back(3);
  write_bytes(dir / "lab.idx", lab);

  const IndexedDataset ds = diet::load_idx(dir / "img.idx", dir / "lab.idx");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.dim(), 6u);
  EXPECT_EQ(*ds.image_shape(), (diet::ImageShape{1, 2, 3}));
  EXPECT_DOUBLE_EQ(ds.sample(1)[0], 120.0 / 255.0);
  EXPECT_EQ(ds.labels(), (std::vector<int>{7, 3}));
}

TEST(Idx, WriterRoundTrip) {
  TempDir dir;
  std::vector<std::uint8_t> px(3 * 4 * 5);
  std::iota(px.begin(), px.end(), 0);
  diet::write_idx_images(dir / "i", 4, 5, px);
  const std::vector<std::uint8_t> labels{1, 0, 2};
  diet::write_idx_labels(dir / "l", labels);
  const IndexedDataset ds = diet::load_idx(dir / "i", dir / "l");
  for (std::size_t n = 0; n < 3; ++n)
    for (std::size_t j = 0; j < 20; ++j) EXPECT_EQ(ds.sample(n)[j], px[n * 20 + j] / 255.0);
  EXPECT_EQ(ds.num_classes(), 3u);
}

TEST(Idx, CorruptMagicIsFormatError) {
  TempDir dir;
  std::vector<std::uint8_t> img{0, 0, 8, 0x99};
  for (std::uint32_t v : {1u, 2u, 2u})
    for (auto b : be32(v)) img.push_back(b);
  img.insert(img.end(), 4, 0);
  write_bytes(dir / "bad", img);
  EXPECT_THROW(diet::load_idx(dir / "bad"), diet::FormatError);
}

TEST(Idx, TruncationAndCountMismatch) {
  TempDir dir;
  std::vector<std::uint8_t> img{0, 0, 8, 3};
  for (std::uint32_t v : {3u, 2u, 2u})
    for (auto b : be32(v)) img.push_back(b);
  img.insert(img.end(), 8, 0);  // 2 of 3 images
  write_bytes(dir / "short", img);
  EXPECT_THROW(diet::load_idx(dir / "short"), diet::LengthError);

  std::vector<std::uint8_t> px(2 * 4);
  diet::write_idx_images(dir / "i", 2, 2, px);
  diet::write_idx_labels(dir / "l", std::vector<std::uint8_t>{1});
  EXPECT_THROW(diet::load_idx(dir / "i", dir / "l"), diet::FormatError);
}

TEST(Blobs, ZeroSpreadIsClusteredModel) {
  diet::BlobsSpec spec{.classes = 4, .per_class = 4, .dim = 10, .spread = 0.0, .seed = 3};
  const IndexedDataset ds = diet::gen_blobs(spec);
  EXPECT_LE(diet::svd_thin(ds.samples()).rank(), 4u);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) {
      const auto a = ds.sample(i), b = ds.sample(j);
      EXPECT_EQ(std::equal(a.begin(), a.end(), b.begin()), i / 4 == j / 4);
    }
  EXPECT_EQ(ds.labels()[5], 1);
}

TEST(Blobs, SameSeedIdenticalDifferentSeedDifferent) {
  diet::BlobsSpec spec;
  EXPECT_EQ(diet::gen_blobs(spec), diet::gen_blobs(spec));
  diet::BlobsSpec other = spec;
  other.seed = 1;
  EXPECT_NE(diet::gen_blobs(spec).samples(), diet::gen_blobs(other).samples());
}

TEST(Blobs, TestSplitSharesCentroidsButNotNoise) {
  diet::BlobsSpec spec{.classes = 3, .per_class = 5, .dim = 4, .spread = 0.0};
  EXPECT_EQ(diet::gen_blobs_split(spec, 5).samples(), diet::gen_blobs(spec).samples());
  spec.spread = 0.1;
  EXPECT_NE(diet::gen_blobs_split(spec, 5).samples(), diet::gen_blobs(spec).samples());
  EXPECT_EQ(diet::gen_blobs_split(spec, 2).size(), 6u);
}

TEST(Blobs, RawFeaturesAreLinearlySeparableForReferenceClassifier) {
  diet::BlobsSpec spec;  // 8 × 125, dim 32, spread 0.1
  const IndexedDataset train = diet::gen_blobs(spec);
  const IndexedDataset test = diet::gen_blobs_split(spec, 125);
  const auto fit = oracle::logreg_fit(train.samples(), train.labels(), 300, 2.0L);
  EXPECT_GT(oracle::logreg_accuracy(fit, test.samples(), test.labels()), 0.95);
}

TEST(Batching, PartialFinalBatchIsKept) {
  const IndexedDataset ds = diet::with_indices(Matrix(10, 1));
  diet::BatchStream stream(ds, 4, false, 0, 0);
  EXPECT_EQ(stream.num_batches(), 3u);
  std::vector<std::size_t> sizes, seen;
  while (auto b = stream.next()) {
    sizes.push_back(b->indices.size());
    seen.insert(seen.end(), b->indices.begin(), b->indices.end());
  }
  EXPECT_EQ(sizes, (std::vector<std::size_t>{4, 4, 2}));
  std::vector<std::size_t> ordered(10);
  std::iota(ordered.begin(), ordered.end(), 0);
  EXPECT_EQ(seen, ordered);
}

TEST(Batching, ShuffleReplaysForSameSeedAndEpoch) {
  EXPECT_EQ(diet::epoch_order(50, true, 4, 3), diet::epoch_order(50, true, 4, 3));
  EXPECT_NE(diet::epoch_order(50, true, 4, 3), diet::epoch_order(50, true, 4, 4));
  EXPECT_NE(diet::epoch_order(50, true, 4, 3), diet::epoch_order(50, true, 5, 3));
}

TEST(Batching, EveryEpochCoversEachIndexOnce) {
  for (std::size_t n : {1u, 7u, 32u, 33u})
    for (std::size_t bs : {1u, 3u, 32u, 100u})
      for (bool shuffle : {false, true}) {
        const IndexedDataset ds = diet::with_indices(Matrix(n, 2));
        diet::BatchStream stream(ds, bs, shuffle, 1, 0);
        std::vector<std::size_t> seen;
        while (auto b = stream.next()) seen.insert(seen.end(), b->indices.begin(), b->indices.end());
        std::sort(seen.begin(), seen.end());
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        EXPECT_EQ(seen, all) << n << " " << bs << " " << shuffle;
      }
}

TEST(Batching, StreamsAreByteIdenticalAcrossRuns) {
  const IndexedDataset ds = diet::with_indices(oracle::random_matrix(20, 3, 5));
  diet::BatchStream a(ds, 6, true, 2, 1), b(ds, 6, true, 2, 1);
  while (auto x = a.next()) {
    auto y = b.next();
    ASSERT_TRUE(y);
    EXPECT_EQ(x->indices, y->indices);
    EXPECT_EQ(x->inputs, y->inputs);
  }
  EXPECT_FALSE(b.next());
}

TEST(Normalizer, StandardizesTrainSplit) {
  const IndexedDataset ds = diet::with_indices(oracle::random_matrix(40, 3, 6, 5.0));
  const auto norm = diet::FeatureNormalizer::fit(ds);
  const IndexedDataset z = norm.apply(ds);
  for (std::size_t j = 0; j < 3; ++j) {
    double m = 0, v = 0;
    for (std::size_t n = 0; n < 40; ++n) m += z.sample(n)[j] / 40.0;
    for (std::size_t n = 0; n < 40; ++n) v += (z.sample(n)[j] - m) * (z.sample(n)[j] - m) / 40.0;
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v, 1.0, 1e-12);
  }
}

}  // namespace
