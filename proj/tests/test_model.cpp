// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <fstream>
#include <numeric>

#include <gtest/gtest.h>
#include <json.hpp>

#include "diet/error.hpp"
#include "diet/model.hpp"
#include "diet/rng.hpp"
#include "diet/theory.hpp"
#include "diet/train.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace {

using diet::Backbone;
using diet::BackboneKind;
using diet::Matrix;
using diet::Model;

// Layer-by-layer evaluation with explicit loops.
Matrix reference_forward(const Backbone& b, const Matrix& x) {
  Matrix h = x;
  const auto& layers = b.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    Matrix next(h.rows(), layer.weight.rows());
    for (std::size_t i = 0; i < h.rows(); ++i)
      for (std::size_t o = 0; o < layer.weight.rows(); ++o) {
        long double s = layer.bias.empty() ? 0.0L : layer.bias[o];
        for (std::size_t k = 0; k < h.cols(); ++k) s += static_cast<long double>(h(i, k)) * layer.weight(o, k);
        if (l + 1 < layers.size() && s < 0) s = 0;
        next(i, o) = static_cast<double>(s);
      }
    h = next;
  }
  return h;
}

void randomize(Model& m, std::uint64_t seed) {
  diet::Rng rng(seed);
  for (auto view : diet::parameter_views(m))
    for (double& v : view) v = rng.uniform(-1.0, 1.0);
}

Model random_mlp(std::size_t n, std::size_t d, std::size_t hidden, std::size_t k, std::uint64_t seed) {
  Model m{diet::init_backbone(BackboneKind::kMlp, {d, hidden, k}, seed),
          diet::init_head(n, k, seed)};
  randomize(m, seed + 1000);
  return m;
}

TEST(Backbone, LinearHasSingleLayer) {
  const Backbone b = diet::init_backbone(BackboneKind::kLinear, {5, 3}, 1);
  ASSERT_EQ(b.layers().size(), 1u);
  EXPECT_EQ(b.layers()[0].weight.rows(), 3u);
  EXPECT_EQ(b.layers()[0].weight.cols(), 5u);
  EXPECT_EQ(b.parameter_count(), 18u);
  EXPECT_THROW(diet::init_backbone(BackboneKind::kLinear, {5, 4, 3}, 1), diet::ArgumentError);
  EXPECT_THROW(diet::init_backbone(BackboneKind::kMlp, {5, 3}, 1), diet::ArgumentError);
}

TEST(Backbone, SameSeedSameParameters) {
  EXPECT_EQ(diet::init_backbone(BackboneKind::kMlp, {6, 8, 4}, 3),
            diet::init_backbone(BackboneKind::kMlp, {6, 8, 4}, 3));
  EXPECT_NE(diet::init_backbone(BackboneKind::kMlp, {6, 8, 4}, 3).layers(),
            diet::init_backbone(BackboneKind::kMlp, {6, 8, 4}, 4).layers());
}

TEST(Backbone, InitBoundedByInverseSqrtFanIn) {
  const Backbone b = diet::init_backbone(BackboneKind::kLinear, {100, 50}, 9);
  for (double w : b.layers()[0].weight.values()) {
    EXPECT_GE(w, -0.1);
    EXPECT_LE(w, 0.1);
  }
  for (double v : b.layers()[0].bias) EXPECT_EQ(v, 0.0);
}

TEST(Backbone, LinearForwardIsAffine) {
  Backbone b = diet::init_backbone(BackboneKind::kLinear, {4, 3}, 2);
  b.layers()[0].bias = {0.1, -0.2, 0.3};
  const Matrix x = oracle::random_matrix(5, 4, 3);
  Matrix expected = oracle::naive_matmul(x, oracle::naive_transpose(b.layers()[0].weight));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) expected(i, j) += b.layers()[0].bias[j];
  EXPECT_LT(diet::max_abs_diff(b.forward(x), expected), 1e-14);
}

TEST(Backbone, ZeroWeightsGiveFinalBias) {
  Backbone b = diet::init_backbone(BackboneKind::kMlp, {3, 5, 2}, 1);
  for (auto& layer : b.layers()) {
    layer.weight = Matrix(layer.weight.rows(), layer.weight.cols());
    std::fill(layer.bias.begin(), layer.bias.end(), 0.7);
  }
  b.layers().back().bias = {0.25, -1.5};
  // Hidden units see only their bias 0.7, but the last layer has zero weights.
  const Matrix out = b.infer(oracle::random_matrix(4, 3, 2));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(out(i, 0), 0.25);
    EXPECT_EQ(out(i, 1), -1.5);
  }
}

TEST(Backbone, MatchesReferenceEvaluation) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    Model full{diet::init_backbone(BackboneKind::kMlp, {7, 9, 6, 5}, s), diet::init_head(4, 5, s)};
    randomize(full, s + 7);
    const Matrix x = oracle::random_matrix(11, 7, s + 50);
    EXPECT_LT(diet::max_abs_diff(full.backbone.infer(x), reference_forward(full.backbone, x)), 1e-12);
  }
}

TEST(Backbone, ForwardIsDeterministicAndMatchesInfer) {
  Model m = random_mlp(4, 6, 8, 3, 1);
  const Matrix x = oracle::random_matrix(9, 6, 2);
  const Matrix a = m.backbone.forward(x);
  EXPECT_EQ(a, m.backbone.forward(x));
  EXPECT_EQ(a, m.backbone.infer(x));
  EXPECT_EQ(a, m.backbone.cached_output());
}

TEST(Backbone, BackwardWithoutForwardIsStateError) {
  Backbone b = diet::init_backbone(BackboneKind::kLinear, {3, 2}, 0);
  EXPECT_THROW(b.backward(Matrix(1, 2)), diet::StateError);
  EXPECT_THROW(b.cached_output(), diet::StateError);
}

TEST(Backbone, KindNamesRoundTrip) {
  for (auto k : {BackboneKind::kLinear, BackboneKind::kMlp})
    EXPECT_EQ(diet::parse_backbone_kind(diet::to_string(k)), k);
  EXPECT_THROW(diet::parse_backbone_kind("resnet"), diet::ArgumentError);
}

TEST(Head, ZeroFeaturesGiveUniformSoftmax) {
  const auto head = diet::init_head(6, 3, 1);
  const Matrix p = diet::softmax_rows(diet::head_logits(head, Matrix(2, 3)));
  for (double v : p.values()) EXPECT_NEAR(v, 1.0 / 6.0, 1e-15);
}

TEST(Head, IdentityHeadReturnsFeatures) {
  const diet::DietHead head{Matrix::identity(4)};
  const Matrix f = oracle::random_matrix(3, 4, 2);
  EXPECT_EQ(diet::head_logits(head, f), f);
}

TEST(Head, RandomCaseMatchesTripleLoop) {
  const auto head = diet::init_head(7, 5, 3);
  const Matrix f = oracle::random_matrix(4, 5, 4);
  EXPECT_LT(diet::max_abs_diff(diet::head_logits(head, f),
                               oracle::naive_matmul(f, oracle::naive_transpose(head.w))),
            1e-14);
  EXPECT_EQ(diet::init_head(7, 5, 3, diet::HeadInit::kZeros).w, Matrix(7, 5));
  for (double v : head.w.values()) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(5.0));
}

// Mean smoothed cross-entropy of the model evaluated without library kernels.
long double reference_loss(const Model& m, const Matrix& x, const std::vector<std::size_t>& t,
                           double eps) {
  const Matrix logits = oracle::naive_matmul(reference_forward(m.backbone, x), oracle::naive_transpose(m.head.w));
  long double total = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) total += oracle::smoothed_xent(logits.row(i), t[i], eps);
  return total / static_cast<long double>(x.rows());
}

void check_gradients(Model m, const Matrix& x, const std::vector<std::size_t>& t, double eps) {
  const diet::XentResult xent = diet::smoothed_xent(diet::model_forward(m, x), t, eps);
  const auto grads = diet::model_backward(m, xent.grad);
  auto params = diet::parameter_views(m);
  const auto analytic = diet::gradient_views(grads);
  ASSERT_EQ(params.size(), analytic.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto fd = oracle::finite_difference([&] { return reference_loss(m, x, t, eps); }, params[p]);
    EXPECT_LT(oracle::relative_error(analytic[p], fd), 1e-6) << "parameter block " << p;
  }
}

TEST(Gradients, MlpMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    Model m = random_mlp(12, 6, 8, 4, s);
    const Matrix x = oracle::random_matrix(12, 6, s + 20);
    std::vector<std::size_t> t(12);
    std::iota(t.begin(), t.end(), 0);
    check_gradients(m, x, t, 0.8);
  }
}

TEST(Gradients, LinearWithoutBiasMatchesFiniteDifferences) {
  Model m{diet::init_backbone(BackboneKind::kLinear, {5, 3}, 1, false), diet::init_head(6, 3, 1)};
  check_gradients(m, oracle::random_matrix(6, 5, 2), {0, 1, 2, 3, 4, 5}, 0.0);
}

TEST(Gradients, ZeroUpstreamGivesZeroGradients) {
  Model m = random_mlp(5, 4, 6, 3, 1);
  diet::model_forward(m, oracle::random_matrix(5, 4, 2));
  const auto g = diet::model_backward(m, Matrix(5, 5));
  for (auto view : diet::gradient_views(g))
    for (double v : view) EXPECT_EQ(v, 0.0);
}

Model linear_model_from(const Matrix& v, const Matrix& w) {
  Backbone b = diet::init_backbone(BackboneKind::kLinear, {v.rows(), v.cols()}, 0, false);
  b.layers()[0].weight = diet::transpose(v);
  return {b, {w}};
}

TEST(LinearEquivalence, LogitsEqualXVWt) {
  const Matrix x = oracle::random_matrix(6, 4, 1), v = oracle::random_matrix(4, 3, 2);
  const Matrix w = oracle::random_matrix(6, 3, 3);
  Model m = linear_model_from(v, w);
  EXPECT_LT(diet::max_abs_diff(diet::model_forward(m, x), diet::matmul_nt(diet::matmul(x, v), w)), 1e-14);
}

TEST(LinearEquivalence, BackwardMatchesTheoryGradients) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix x = oracle::random_matrix(7, 5, s), v = oracle::random_matrix(5, 3, s + 1);
    const Matrix w = oracle::random_matrix(7, 3, s + 2);
    Model m = linear_model_from(v, w);
    std::vector<std::size_t> t(7);
    std::iota(t.begin(), t.end(), 0);
    const auto xent = diet::smoothed_xent(diet::model_forward(m, x), t, 0.0);
    const auto g = diet::model_backward(m, xent.grad);
    const auto ref = diet::theory::diet_gradients(x, v, w);
    // The model's loss is the mean over rows; the theory gradients are sums.
    EXPECT_LT(diet::max_abs_diff(7.0 * g.head, ref.grad_w), 1e-10);
    EXPECT_LT(diet::max_abs_diff(7.0 * diet::transpose(g.backbone.weight[0]), ref.grad_v), 1e-10);
  }
}

TEST(LinearEquivalence, ClosedFormIsStationaryThroughModelPath) {
  const auto spec = diet::theory::ClusteredSpec{diet::theory::orthogonal_centroids(4, 8, 0), 4};
  const Matrix x = diet::theory::make_clustered_data(spec);
  const auto cf = diet::theory::closed_form_params(x, 160.0);
  Model m = linear_model_from(cf.v, cf.w);
  std::vector<std::size_t> t(16);
  std::iota(t.begin(), t.end(), 0);
  const auto g = diet::model_backward(m, diet::smoothed_xent(diet::model_forward(m, x), t, 0.0).grad);
  const double bound = 1e-8 * diet::frobenius_norm(x);
  EXPECT_LT(16.0 * diet::frobenius_norm(g.head), bound);
  EXPECT_LT(16.0 * diet::frobenius_norm(g.backbone.weight[0]), bound);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TempDir dir;
  Model m = random_mlp(9, 5, 7, 3, 4);
  const auto manifest = diet::save_checkpoint(m, dir / "ck");
  EXPECT_EQ(manifest.filename(), "ck.json");
  const Model back = diet::load_checkpoint(manifest);
  EXPECT_EQ(back, m);
  Model lin{diet::init_backbone(BackboneKind::kLinear, {3, 2}, 1, false), diet::init_head(4, 2, 1)};
  EXPECT_EQ(diet::load_checkpoint(diet::save_checkpoint(lin, dir / "lin")), lin);
}

TEST(Checkpoint, ManifestDescribesModel) {
  TempDir dir;
  const Model m = random_mlp(9, 5, 7, 3, 4);
  std::ifstream in(diet::save_checkpoint(m, dir / "ck"));
  const auto j = nlohmann::json::parse(in);
  EXPECT_EQ(j["kind"], "mlp");
  EXPECT_EQ(j["widths"], (std::vector<std::size_t>{5, 7, 3}));
  EXPECT_EQ(j["n"], 9);
  EXPECT_EQ(j["k"], 3);
  EXPECT_EQ(std::filesystem::file_size(dir / "ck.bin"), 8 * (7 * 5 + 7 + 3 * 7 + 3 + 9 * 3));
}

TEST(Checkpoint, DamagedFilesAreRejected) {
  TempDir dir;
  const Model m = random_mlp(4, 3, 5, 2, 1);
  const auto manifest = diet::save_checkpoint(m, dir / "ck");
  std::filesystem::resize_file(dir / "ck.bin", 16);
  EXPECT_THROW(diet::load_checkpoint(manifest), diet::LengthError);
  std::ofstream(dir / "bad.json") << "{\"format\": \"something-else\"}";
  EXPECT_THROW(diet::load_checkpoint(dir / "bad.json"), diet::FormatError);
  std::ofstream(dir / "junk.json") << "not json";
  EXPECT_THROW(diet::load_checkpoint(dir / "junk.json"), diet::FormatError);
}

}  // namespace
