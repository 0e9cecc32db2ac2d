#pragma once

#include <functional>
#include <string>
#include <vector>

#include "exemplar/encoder.hpp"
#include "exemplar/image.hpp"
#include "exemplar/nn/layers.hpp"

namespace exemplar::inversion {

enum class BlockKind { Conv, ConvDown, ConvUp };

struct Block {
  BlockKind kind = BlockKind::Conv;
  int channels = 0;
  int kernel = 0;

  bool operator==(const Block&) const = default;
};

// Encoder-decoder reconstruction network description. Every block is a
// Convolution-BatchNorm-LeakyReLU unit; ConvDown uses a stride-2 convolution,
// ConvUp appends a 2x upsample. A fixed 1x1 convolution with a sigmoid maps
// the last decoder block to image channels in [0,1].
struct ReconstructorSpec {
  std::vector<Block> encoder;
  std::vector<Block> decoder;
  int noise_channels = 32;

  bool operator==(const ReconstructorSpec&) const = default;

  int downsample_count() const;
  int upsample_count() const;

  // Block notation: C16^7, CD32^5, CU128^3, joined with '-'.
  std::string to_string() const;
  static ReconstructorSpec parse(const std::string& text);
};

// The six-stage default architecture.
ReconstructorSpec default_reconstructor_spec();
// A three-stage reduction for small (e.g. 32x32) targets.
ReconstructorSpec small_reconstructor_spec();

class Reconstructor {
 public:
  Reconstructor(const ReconstructorSpec& spec, int out_channels, std::uint64_t init_seed);

  nn::Tensor forward(const nn::Tensor& noise, bool training);
  void backward(const nn::Tensor& grad_out);

  std::size_t param_count() const { return net_.param_count(); }
  nn::Vec params() const { return net_.params(); }
  void set_params(const nn::Vec& p) { net_.set_params(p); }
  nn::Vec grads() const { return net_.grads(); }
  void zero_grads() { net_.zero_grads(); }

 private:
  nn::Sequential net_;
};

// Deterministic parameter construction for a spec (shapes from the spec,
// init from the seed).
Reconstructor build_reconstructor(const ReconstructorSpec& spec, int out_channels,
                                  std::uint64_t seed);

struct InversionConfig {
  ReconstructorSpec spec = default_reconstructor_spec();
  int iterations = 3000;
  double lr = 0.001;
  double noise_low = 0.0;
  double noise_high = 0.1;
  std::uint64_t seed = 0;
};

struct ReconstructionResult {
  Image image;                   // best-objective reconstruction, clamped to [0,1]
  Image last_image;              // last-iterate reconstruction
  std::vector<double> trace;     // objective per iteration
  double final_objective = 0.0;  // min of the trace
};

// Feature abstraction for the inversion objective: forward returns the
// embedding tensor for an image tensor; backward maps the embedding gradient
// back to the image. The identity feature makes the objective plain pixel MSE.
struct FeatureTransform {
  std::function<nn::Tensor(const nn::Tensor&)> forward;
  std::function<nn::Tensor(const nn::Tensor&)> backward;  // grad w.r.t. input
};

FeatureTransform identity_features();
// Final pre-pooling map of a frozen trained encoder.
FeatureTransform encoder_features(contrast::Encoder& encoder);

// Optimizes reconstructor parameters so that features(reconstruction) match
// features(target) under mean squared distance; the input noise is sampled
// once from U(noise_low, noise_high) and kept fixed.
ReconstructionResult invert_features(const FeatureTransform& features, const Image& target,
                                     const InversionConfig& config);

// Sum over the encoder's block feature maps of size-normalized L2
// differences: sum_l ||F_l(a) - F_l(b)||_2 / sqrt(numel_l). Symmetric and
// zero exactly when all compared feature maps agree.
double perceptual_distance(const Image& a, const Image& b, contrast::Encoder& metric_encoder);

struct ReconstructionReportRow {
  std::string image_id;
  std::string encoder_name;
  double distance = 0.0;
};

struct ReconstructionReport {
  std::vector<ReconstructionReportRow> rows;
  std::vector<std::pair<std::string, double>> encoder_means;

  // CSV with header "image,encoder,distance".
  std::string to_csv() const;
};

// Per-image perceptual distance of each named encoder's reconstruction
// against the original, plus per-encoder means.
ReconstructionReport reconstruction_report(
    const std::vector<Image>& images,
    const std::vector<std::pair<std::string, contrast::Encoder*>>& encoders,
    const InversionConfig& config);

// 10 log10(1 / MSE) for images in [0,1].
double psnr(const Image& a, const Image& b);

}  // namespace exemplar::inversion
