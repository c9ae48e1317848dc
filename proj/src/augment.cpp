// Copyright 2026 The diet-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "diet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "diet/error.hpp"

namespace diet::augment {

namespace {

void check_image(const Image& img) {
  if (img.shape.channels == 0 || img.values.size() != img.shape.size()) {
    throw ArgumentError("augment: malformed image");
  }
  if (img.shape.height < kMinImageSide || img.shape.width < kMinImageSide) {
    throw ArgumentError("augment: image " + std::to_string(img.shape.height) + "x" +
                        std::to_string(img.shape.width) + " is smaller than the minimum " +
                        std::to_string(kMinImageSide) + "x" + std::to_string(kMinImageSide));
  }
}

void clamp01(Image& img) {
  for (double& v : img.values) v = std::clamp(v, 0.0, 1.0);
}

long round_half_even(double x) { return static_cast<long>(std::nearbyint(x)); }

Image crop(const Image& img, std::size_t top, std::size_t left, std::size_t h, std::size_t w) {
  Image out{{img.shape.channels, h, w}, std::vector<double>(img.shape.channels * h * w)};
  for (std::size_t c = 0; c < img.shape.channels; ++c)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, top + y, left + x);
  return out;
}

double luma(const Image& img, std::size_t y, std::size_t x) {
  return 0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double d = mx - mn;
  v = mx;
  s = mx > 0.0 ? d / mx : 0.0;
  if (d == 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d, 6.0);
  } else if (mx == g) {
    h = (b - r) / d + 2.0;
  } else {
    h = (r - g) / d + 4.0;
  }
  h /= 6.0;
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double h6 = h * 6.0;
  const double sector = std::floor(h6);
  const double f = h6 - sector;
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));
  switch (static_cast<int>(sector) % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace

std::string_view transform_name(Transform t) {
  switch (t) {
    case Transform::kRandomResizedCrop: return "random_resized_crop";
    case Transform::kHorizontalFlip: return "horizontal_flip";
    case Transform::kColorJitter: return "color_jitter";
    case Transform::kGrayscale: return "grayscale";
    case Transform::kGaussianBlur: return "gaussian_blur";
    case Transform::kRandomErasing: return "random_erasing";
  }
  return "unknown";
}

std::vector<Transform> AugmentPipeline::transforms() const {
  std::vector<Transform> t{Transform::kRandomResizedCrop, Transform::kHorizontalFlip};
  if (strength > 1) {
    t.push_back(Transform::kColorJitter);
    t.push_back(Transform::kGrayscale);
  }
  if (strength > 2) {
    t.push_back(Transform::kGaussianBlur);
    t.push_back(Transform::kRandomErasing);
  }
  return t;
}

AugmentPipeline build_pipeline(int strength, std::size_t out_height, std::size_t out_width) {
  if (strength < 1 || strength > 3) {
    throw ArgumentError("augment strength must be 1, 2 or 3 (got " + std::to_string(strength) +
                        ")");
  }
  if (out_height < kMinImageSide || out_width < kMinImageSide) {
    throw ArgumentError("augment: output sides must be at least " + std::to_string(kMinImageSide));
  }
  AugmentPipeline p;
  p.strength = strength;
  p.out_height = out_height;
  p.out_width = out_width;
  return p;
}

Image apply(const AugmentPipeline& p, const Image& img, Rng& rng) {
  check_image(img);
  Image out = random_resized_crop(img, rng, p.out_height, p.out_width, p.crop);
  if (rng.bernoulli(p.prob.flip)) out = hflip(out);
  if (p.strength > 1) {
    if (rng.bernoulli(p.prob.jitter)) out = color_jitter(out, rng, p.jitter);
    if (rng.bernoulli(p.prob.grayscale)) out = grayscale(out);
  }
  if (p.strength > 2) {
    if (rng.bernoulli(p.prob.blur)) out = gaussian_blur(out, rng, p.blur);
    if (rng.bernoulli(p.prob.erase)) out = random_erase(out, rng, p.erase);
  }
  clamp01(out);
  return out;
}

Image hflip(const Image& img) {
  Image out = img;
  const auto& s = img.shape;
  for (std::size_t c = 0; c < s.channels; ++c)
    for (std::size_t y = 0; y < s.height; ++y)
      for (std::size_t x = 0; x < s.width; ++x) out.at(c, y, x) = img.at(c, y, s.width - 1 - x);
  return out;
}

Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w) {
  const auto& s = img.shape;
  if (s.height == out_h && s.width == out_w) return img;
  Image out{{s.channels, out_h, out_w}, std::vector<double>(s.channels * out_h * out_w)};
  const double sy = static_cast<double>(s.height) / static_cast<double>(out_h);
  const double sx = static_cast<double>(s.width) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(s.height - 1));
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, s.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(s.width - 1));
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, s.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < s.channels; ++c) {
        const double top = (1.0 - wx) * img.at(c, y0, x0) + wx * img.at(c, y0, x1);
        const double bot = (1.0 - wx) * img.at(c, y1, x0) + wx * img.at(c, y1, x1);
        out.at(c, y, x) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Image random_resized_crop(const Image& img, Rng& rng, std::size_t out_h, std::size_t out_w,
                          const CropParams& params) {
  check_image(img);
  const double height = static_cast<double>(img.shape.height);
  const double width = static_cast<double>(img.shape.width);
  const double area = height * width;
  const double log_lo = std::log(params.ratio_lo);
  const double log_hi = std::log(params.ratio_hi);

  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(params.scale_lo, params.scale_hi);
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const long w = round_half_even(std::sqrt(target * aspect));
    const long h = round_half_even(std::sqrt(target / aspect));
    if (w > 0 && h > 0 && w <= static_cast<long>(width) && h <= static_cast<long>(height)) {
      const std::size_t top = rng.below(img.shape.height - static_cast<std::size_t>(h) + 1);
      const std::size_t left = rng.below(img.shape.width - static_cast<std::size_t>(w) + 1);
      return resize_bilinear(
          crop(img, top, left, static_cast<std::size_t>(h), static_cast<std::size_t>(w)),
          out_h, out_w);
    }
  }
  // Fallback: central crop at the nearest admissible aspect ratio.
  const double in_ratio = width / height;
  std::size_t w = img.shape.width, h = img.shape.height;
  if (in_ratio < params.ratio_lo) {
    h = static_cast<std::size_t>(round_half_even(width / params.ratio_lo));
  } else if (in_ratio > params.ratio_hi) {
    w = static_cast<std::size_t>(round_half_even(height * params.ratio_hi));
  }
  h = std::clamp<std::size_t>(h, 1, img.shape.height);
  w = std::clamp<std::size_t>(w, 1, img.shape.width);
  return resize_bilinear(crop(img, (img.shape.height - h) / 2, (img.shape.width - w) / 2, h, w),
                         out_h, out_w);
}

Image color_jitter(const Image& img, Rng& rng, const JitterParams& p) {
  JitterFactors f;
  f.brightness = rng.uniform(std::max(0.0, 1.0 - p.brightness), 1.0 + p.brightness);
  f.contrast = rng.uniform(std::max(0.0, 1.0 - p.contrast), 1.0 + p.contrast);
  f.saturation = rng.uniform(std::max(0.0, 1.0 - p.saturation), 1.0 + p.saturation);
  f.hue = rng.uniform(-p.hue, p.hue);
  return color_jitter_with(img, f);
}

Image color_jitter_with(const Image& img, const JitterFactors& f) {
  if (img.shape.channels != 3) return img;
  Image out = img;
  const std::size_t h = img.shape.height, w = img.shape.width;

  if (f.brightness != 1.0) {
    for (double& v : out.values) v = std::clamp(v * f.brightness, 0.0, 1.0);
  }
  if (f.contrast != 1.0) {
    double mean = 0.0;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) mean += luma(out, y, x);
    mean /= static_cast<double>(h * w);
    for (double& v : out.values) v = std::clamp(f.contrast * v + (1.0 - f.contrast) * mean, 0.0, 1.0);
  }
  if (f.saturation != 1.0) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double g = luma(out, y, x);
        for (std::size_t c = 0; c < 3; ++c) {
          out.at(c, y, x) = std::clamp(f.saturation * out.at(c, y, x) + (1.0 - f.saturation) * g,
                                       0.0, 1.0);
        }
      }
    }
  }
  if (f.hue != 0.0) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double hh, s, v;
        rgb_to_hsv(out.at(0, y, x), out.at(1, y, x), out.at(2, y, x), hh, s, v);
        hh = std::fmod(hh + f.hue + 1.0, 1.0);
        hsv_to_rgb(hh, s, v, out.at(0, y, x), out.at(1, y, x), out.at(2, y, x));
      }
    }
  }
  return out;
}

Image grayscale(const Image& img) {
  if (img.shape.channels != 3) return img;
  Image out = img;
  for (std::size_t y = 0; y < img.shape.height; ++y) {
    for (std::size_t x = 0; x < img.shape.width; ++x) {
      const double g = luma(img, y, x);
      for (std::size_t c = 0; c < 3; ++c) out.at(c, y, x) = g;
    }
  }
  return out;
}

std::vector<double> gaussian_kernel3(double sigma) {
  const double side = std::exp(-1.0 / (2.0 * sigma * sigma));
  const double z = 1.0 + 2.0 * side;
  return {side / z, 1.0 / z, side / z};
}

Image gaussian_blur(const Image& img, Rng& rng, const BlurParams& p) {
  return gaussian_blur_sigma(img, rng.uniform(p.sigma_lo, p.sigma_hi));
}

Image gaussian_blur_sigma(const Image& img, double sigma) {
  const auto k = gaussian_kernel3(sigma);
  const auto& s = img.shape;
  // Reflect padding: index -1 maps to 1, index n maps to n-2.
  auto reflect = [](long i, std::size_t n) -> std::size_t {
    if (i < 0) return static_cast<std::size_t>(-i);
    if (i >= static_cast<long>(n)) return 2 * n - 2 - static_cast<std::size_t>(i);
    return static_cast<std::size_t>(i);
  };
  Image tmp = img;
  for (std::size_t c = 0; c < s.channels; ++c)
    for (std::size_t y = 0; y < s.height; ++y)
      for (std::size_t x = 0; x < s.width; ++x) {
        double acc = 0.0;
        for (long d = -1; d <= 1; ++d)
          acc += k[static_cast<std::size_t>(d + 1)] *
                 img.at(c, y, reflect(static_cast<long>(x) + d, s.width));
        tmp.at(c, y, x) = acc;
      }
  Image out = tmp;
  for (std::size_t c = 0; c < s.channels; ++c)
    for (std::size_t y = 0; y < s.height; ++y)
      for (std::size_t x = 0; x < s.width; ++x) {
        double acc = 0.0;
        for (long d = -1; d <= 1; ++d)
          acc += k[static_cast<std::size_t>(d + 1)] *
                 tmp.at(c, reflect(static_cast<long>(y) + d, s.height), x);
        out.at(c, y, x) = acc;
      }
  return out;
}

Image random_erase(const Image& img, Rng& rng, const EraseParams& p) {
  const auto& s = img.shape;
  const double area = static_cast<double>(s.height * s.width);
  const double log_lo = std::log(p.ratio_lo);
  const double log_hi = std::log(p.ratio_hi);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(p.scale_lo, p.scale_hi);
    const double aspect = std::exp(rng.uniform(log_lo, log_hi));
    const long h = round_half_even(std::sqrt(target * aspect));
    const long w = round_half_even(std::sqrt(target / aspect));
    if (h <= 0 || w <= 0 || h >= static_cast<long>(s.height) || w >= static_cast<long>(s.width)) {
      continue;
    }
    // Rounding may push the rectangle outside the area range; redraw then.
    const double frac = static_cast<double>(h * w) / area;
    if (frac < p.scale_lo || frac > p.scale_hi) continue;
    const std::size_t top = rng.below(s.height - static_cast<std::size_t>(h) + 1);
    const std::size_t left = rng.below(s.width - static_cast<std::size_t>(w) + 1);
    Image out = img;
    for (std::size_t c = 0; c < s.channels; ++c)
      for (std::size_t y = top; y < top + static_cast<std::size_t>(h); ++y)
        for (std::size_t x = left; x < left + static_cast<std::size_t>(w); ++x)
          out.at(c, y, x) = p.fill;
    return out;
  }
  return img;
}

Image to_image(std::span<const double> flat, const ImageShape& shape) {
  if (flat.size() != shape.size()) throw ShapeError("to_image: size mismatch");
  return {shape, std::vector<double>(flat.begin(), flat.end())};
}

Matrix augment_batch(const AugmentPipeline& p, const Matrix& inputs,
                     std::span<const std::size_t> indices, const ImageShape& shape,
                     std::uint64_t seed, std::size_t epoch, unsigned threads) {
  if (inputs.cols() != shape.size() || indices.size() != inputs.rows()) {
    throw ShapeError("augment_batch: inputs do not match image shape / indices");
  }
  const ImageShape out_shape{shape.channels, p.out_height, p.out_width};
  Matrix out(inputs.rows(), out_shape.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(derive_seed(seed, "augment", epoch, indices[i]));
      const Image a = apply(p, to_image(inputs.row(i), shape), rng);
      std::copy(a.values.begin(), a.values.end(), out.row(i).begin());
    }
  };
  const std::size_t n = inputs.rows();
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    work(0, n);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(n, b + chunk);
      if (b >= e) continue;
      pool.emplace_back([&, w, b, e] {
        try {
          work(b, e);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
  return out;
}

}  // namespace diet::augment
