// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "diet/data.hpp"
#include "diet/rng.hpp"

namespace diet::augment {

/// CHW image with values in [0,1].
struct Image {
  ImageShape shape;
  std::vector<double> values;

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return values[(c * shape.height + y) * shape.width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * shape.height + y) * shape.width + x];
  }
  friend bool operator==(const Image&, const Image&) = default;
};

inline constexpr std::size_t kMinImageSide = 2;

enum class Transform {
  kRandomResizedCrop,
  kHorizontalFlip,
  kColorJitter,
  kGrayscale,
  kGaussianBlur,
  kRandomErasing,
};

std::string_view transform_name(Transform t);

struct CropParams {
  double scale_lo = 0.08, scale_hi = 1.0;
  double ratio_lo = 3.0 / 4.0, ratio_hi = 4.0 / 3.0;
};

struct JitterParams {
  double brightness = 0.4, contrast = 0.4, saturation = 0.4, hue = 0.2;
};

/// One concrete draw of the jitter: multiplicative factors and a hue shift in turns.
struct JitterFactors {
  double brightness = 1.0, contrast = 1.0, saturation = 1.0, hue = 0.0;
};

struct BlurParams {
  double sigma_lo = 1.0, sigma_hi = 2.0;
};

struct EraseParams {
  double scale_lo = 0.02, scale_hi = 0.33;
  double ratio_lo = 0.3, ratio_hi = 3.3;
  double fill = 0.0;
};

/// Application probabilities; forced values (0 or 1) are used by tests.
struct Probabilities {
  double flip = 0.5;
  double jitter = 0.3;
  double grayscale = 0.2;
  double blur = 0.2;
  double erase = 0.25;
};

struct AugmentPipeline {
  int strength = 1;
  std::size_t out_height = 0;
  std::size_t out_width = 0;
  CropParams crop;
  JitterParams jitter;
  BlurParams blur;
  EraseParams erase;
  Probabilities prob;

  /// Ordered transform list: 2 at strength 1, 4 at strength 2, 6 at strength 3.
  std::vector<Transform> transforms() const;
};

AugmentPipeline build_pipeline(int strength, std::size_t out_height, std::size_t out_width);

Image apply(const AugmentPipeline& p, const Image& img, Rng& rng);

// Individual transforms, applied unconditionally.
Image hflip(const Image& img);
Image random_resized_crop(const Image& img, Rng& rng, std::size_t out_height,
                          std::size_t out_width, const CropParams& params = {});
Image resize_bilinear(const Image& img, std::size_t out_height, std::size_t out_width);
Image color_jitter(const Image& img, Rng& rng, const JitterParams& params = {});
Image color_jitter_with(const Image& img, const JitterFactors& f);
Image grayscale(const Image& img);
Image gaussian_blur(const Image& img, Rng& rng, const BlurParams& params = {});
Image gaussian_blur_sigma(const Image& img, double sigma);
Image random_erase(const Image& img, Rng& rng, const EraseParams& params = {});

/// Normalized 3-tap Gaussian weights for `sigma`.
std::vector<double> gaussian_kernel3(double sigma);

Image to_image(std::span<const double> flat, const ImageShape& shape);

// Augments each row of `inputs` (images of `shape`). Row i uses an rng seeded
// from (seed, epoch, indices[i]), so the result does not depend on `threads`.
Matrix augment_batch(const AugmentPipeline& p, const Matrix& inputs,
                     std::span<const std::size_t> indices, const ImageShape& shape,
                     std::uint64_t seed, std::size_t epoch, unsigned threads = 1);

}  // namespace diet::augment
