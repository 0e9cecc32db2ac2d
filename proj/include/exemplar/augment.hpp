#pragma once

#include <utility>

#include "exemplar/image.hpp"
#include "exemplar/rng.hpp"

namespace exemplar::data {

enum class PipelineMode { Supervised, Unsupervised };

// Cumulative augmentation pipeline. Stage k enables all transforms of stages
// <= k, applied in stage order:
//   1 horizontal flip p=0.5
//   2 random resized crop (scale lower bound 0.08 supervised / 0.2 unsupervised)
//   3 color jitter (0.4, 0.4, 0.4, 0.1)
//   4 random grayscale p=0.2
//   5 gaussian blur, sigma uniform in [0.1, 2.0]
// Without the crop stage the image is still resized to output_size.
struct AugmentationPipeline {
  int stage = 5;
  double flip_p = 0.5;
  double crop_scale_min = 0.2;
  double crop_scale_max = 1.0;
  double crop_ratio_min = 3.0 / 4.0;
  double crop_ratio_max = 4.0 / 3.0;
  double jitter_brightness = 0.4;
  double jitter_contrast = 0.4;
  double jitter_saturation = 0.4;
  double jitter_hue = 0.1;
  double grayscale_p = 0.2;
  double blur_sigma_min = 0.1;
  double blur_sigma_max = 2.0;
  int output_size = 32;

  bool operator==(const AugmentationPipeline&) const = default;
};

// Pipeline for one row of the cumulative augmentation table.
AugmentationPipeline pipeline_stage(int level, PipelineMode mode, int output_size = 32);

// One stochastic draw through the pipeline. Pure in (image, pipeline, rng
// state); output is output_size x output_size with values in [0,1].
Image augment(const Image& image, const AugmentationPipeline& pipeline, Rng& rng);

// Two independent draws from the same pipeline (query view, key view).
std::pair<Image, Image> make_two_views(const Image& image,
                                       const AugmentationPipeline& pipeline, Rng& rng);

// Individual transforms, exposed for direct use and testing.
Image flip_horizontal(const Image& img);
Image resize_bilinear(const Image& img, int out_h, int out_w);
Image crop(const Image& img, int top, int left, int h, int w);
Image to_grayscale(const Image& img);  // channels preserved, BT.601 luma
Image gaussian_blur(const Image& img, double sigma);  // reflect padding
Image adjust_brightness(const Image& img, double factor);
Image adjust_contrast(const Image& img, double factor);
Image adjust_saturation(const Image& img, double factor);
Image adjust_hue(const Image& img, double delta);  // delta in [-0.5, 0.5] hue turns

}  // namespace exemplar::data
