#include "exemplar/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace exemplar::data {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// BT.601 luma weights, the usual grayscale convention.
double luma(const Image& img, int y, int x) {
  if (img.channels == 1) return img.at(y, x, 0);
  return 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
}

int reflect_index(int i, int n) {
  // Reflect without repeating the border sample: -1 -> 1, n -> n-2.
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i < n ? i : period - i;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  v = mx;
  const double d = mx - mn;
  s = mx == 0.0 ? 0.0 : d / mx;
  if (d == 0.0) {
    h = 0.0;
  } else if (mx == r) {
    h = std::fmod((g - b) / d, 6.0) / 6.0;
  } else if (mx == g) {
    h = ((b - r) / d + 2.0) / 6.0;
  } else {
    h = ((r - g) / d + 4.0) / 6.0;
  }
  if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  h = h - std::floor(h);
  const int i = static_cast<int>(std::floor(h * 6.0)) % 6;
  const double f = h * 6.0 - std::floor(h * 6.0);
  const double p = v * (1.0 - s);
  const double q = v * (1.0 - f * s);
  const double t = v * (1.0 - (1.0 - f) * s);
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

}  // namespace

AugmentationPipeline pipeline_stage(int level, PipelineMode mode, int output_size) {
  if (level < 1 || level > 5)
    throw std::invalid_argument("pipeline_stage: level must be in 1..5, got " +
                                std::to_string(level));
  AugmentationPipeline p;
  p.stage = level;
  p.output_size = output_size;
  p.crop_scale_min = mode == PipelineMode::Supervised ? 0.08 : 0.2;
  return p;
}

Image flip_horizontal(const Image& img) {
  Image out(img.height, img.width, img.channels);
  out.source_id = img.source_id;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
  return out;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_bilinear: bad output size");
  Image out(out_h, out_w, img.channels);
  out.source_id = img.source_id;
  const double sy = static_cast<double>(img.height) / out_h;
  const double sx = static_cast<double>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    // Pixel-center mapping (align_corners = false convention).
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const double bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = clamp01(top * (1 - wy) + bot * wy);
      }
    }
  }
  return out;
}

Image crop(const Image& img, int top, int left, int h, int w) {
  if (top < 0 || left < 0 || h < 1 || w < 1 || top + h > img.height || left + w > img.width)
    throw std::invalid_argument("crop: window out of bounds");
  Image out(h, w, img.channels);
  out.source_id = img.source_id;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(top + y, left + x, c);
  return out;
}

Image to_grayscale(const Image& img) {
  Image out(img.height, img.width, img.channels);
  out.source_id = img.source_id;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double g = clamp01(luma(img, y, x));
      for (int c = 0; c < img.channels; ++c) out.at(y, x, c) = g;
    }
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("gaussian_blur: sigma must be positive");
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  // Separable convolution with reflect padding.
  Image tmp(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * img.at(y, reflect_index(x + i, img.width), c);
        tmp.at(y, x, c) = acc;
      }
  Image out(img.height, img.width, img.channels);
  out.source_id = img.source_id;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i)
          acc += kernel[i + radius] * tmp.at(reflect_index(y + i, img.height), x, c);
        out.at(y, x, c) = clamp01(acc);
      }
  return out;
}

Image adjust_brightness(const Image& img, double factor) {
  Image out = img;
  for (double& p : out.pixels) p = clamp01(p * factor);
  return out;
}

Image adjust_contrast(const Image& img, double factor) {
  // Blend toward the mean luma of the whole image.
  double mean = 0.0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) mean += luma(img, y, x);
  mean /= static_cast<double>(img.height) * img.width;
  Image out = img;
  for (double& p : out.pixels) p = clamp01(mean + (p - mean) * factor);
  return out;
}

Image adjust_saturation(const Image& img, double factor) {
  if (img.channels == 1) return img;
  Image out(img.height, img.width, img.channels);
  out.source_id = img.source_id;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const double g = luma(img, y, x);
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = clamp01(g + (img.at(y, x, c) - g) * factor);
    }
  return out;
}

Image adjust_hue(const Image& img, double delta) {
  if (img.channels == 1) return img;
  Image out(img.height, img.width, img.channels);
  out.source_id = img.source_id;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      double h, s, v, r, g, b;
      rgb_to_hsv(img.at(y, x, 0), img.at(y, x, 1), img.at(y, x, 2), h, s, v);
      hsv_to_rgb(h + delta, s, v, r, g, b);
      out.at(y, x, 0) = clamp01(r);
      out.at(y, x, 1) = clamp01(g);
      out.at(y, x, 2) = clamp01(b);
    }
  return out;
}

namespace {

// Random resized crop window in the torchvision style: sample a target area
// and log-uniform aspect ratio, fall back to a clamped center crop after ten
// failed attempts.
struct CropWindow {
  int top, left, h, w;
};

CropWindow sample_crop_window(const Image& img, const AugmentationPipeline& p, Rng& rng) {
  const double area = static_cast<double>(img.height) * img.width;
  const double log_rmin = std::log(p.crop_ratio_min);
  const double log_rmax = std::log(p.crop_ratio_max);
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * rng.uniform(p.crop_scale_min, p.crop_scale_max);
    const double ratio = std::exp(rng.uniform(log_rmin, log_rmax));
    const int w = static_cast<int>(std::lround(std::sqrt(target * ratio)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / ratio)));
    if (w >= 1 && h >= 1 && w <= img.width && h <= img.height) {
      const int top = static_cast<int>(rng.uniform_int(0, img.height - h));
      const int left = static_cast<int>(rng.uniform_int(0, img.width - w));
      return {top, left, h, w};
    }
  }
  // Center-crop fallback at the closest valid aspect ratio.
  const double in_ratio = static_cast<double>(img.width) / img.height;
  int w, h;
  if (in_ratio < p.crop_ratio_min) {
    w = img.width;
    h = static_cast<int>(std::lround(w / p.crop_ratio_min));
  } else if (in_ratio > p.crop_ratio_max) {
    h = img.height;
    w = static_cast<int>(std::lround(h * p.crop_ratio_max));
  } else {
    w = img.width;
    h = img.height;
  }
  return {(img.height - h) / 2, (img.width - w) / 2, h, w};
}

}  // namespace

Image augment(const Image& image, const AugmentationPipeline& pipeline, Rng& rng) {
  if (image.height < 8 || image.width < 8)
    throw std::invalid_argument("augment: image smaller than minimum croppable size (8x8)");
  if (pipeline.stage < 1 || pipeline.stage > 5)
    throw std::invalid_argument("augment: pipeline stage out of range");

  Image img = image;

  // Stage 1: horizontal flip.
  if (rng.bernoulli(pipeline.flip_p)) img = flip_horizontal(img);

  // Stage 2: random resized crop; below stage 2 only a deterministic resize.
  if (pipeline.stage >= 2) {
    const CropWindow win = sample_crop_window(img, pipeline, rng);
    img = resize_bilinear(crop(img, win.top, win.left, win.h, win.w),
                          pipeline.output_size, pipeline.output_size);
  } else {
    img = resize_bilinear(img, pipeline.output_size, pipeline.output_size);
  }

  // Stage 3: color jitter, fixed order brightness/contrast/saturation/hue.
  if (pipeline.stage >= 3) {
    if (pipeline.jitter_brightness > 0)
      img = adjust_brightness(img, rng.uniform(std::max(0.0, 1 - pipeline.jitter_brightness),
                                               1 + pipeline.jitter_brightness));
    if (pipeline.jitter_contrast > 0)
      img = adjust_contrast(img, rng.uniform(std::max(0.0, 1 - pipeline.jitter_contrast),
                                             1 + pipeline.jitter_contrast));
    if (pipeline.jitter_saturation > 0)
      img = adjust_saturation(img, rng.uniform(std::max(0.0, 1 - pipeline.jitter_saturation),
                                               1 + pipeline.jitter_saturation));
    if (pipeline.jitter_hue > 0)
      img = adjust_hue(img, rng.uniform(-pipeline.jitter_hue, pipeline.jitter_hue));
  }

  // Stage 4: random grayscale.
  if (pipeline.stage >= 4 && rng.bernoulli(pipeline.grayscale_p)) img = to_grayscale(img);

  // Stage 5: gaussian blur with random sigma.
  if (pipeline.stage >= 5)
    img = gaussian_blur(img, rng.uniform(pipeline.blur_sigma_min, pipeline.blur_sigma_max));

  img.source_id = image.source_id;
  return img;
}

std::pair<Image, Image> make_two_views(const Image& image,
                                       const AugmentationPipeline& pipeline, Rng& rng) {
  Image q = augment(image, pipeline, rng);
  Image k = augment(image, pipeline, rng);
  return {std::move(q), std::move(k)};
}

}  // namespace exemplar::data
