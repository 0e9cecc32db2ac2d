#pragma once

#include <cstdint>
#include <vector>

#include "exemplar/image.hpp"
#include "exemplar/nn/layers.hpp"

namespace exemplar::contrast {

using nn::Mat;
using nn::Vec;

// Small convolutional backbone standing in for the paper-scale residual
// networks: stride-2 conv blocks, global average pooling, and either a
// two-layer projection head (contrastive variants) or a linear classifier
// (cross-entropy variant). Pluggable behind the encode contract.
struct BackboneSpec {
  int in_channels = 3;
  int input_size = 32;
  std::vector<int> channels = {32, 64, 128, 128};
  int embed_dim = 128;   // projection output
  int proj_hidden = 128;
  int n_classes = 0;     // > 0 selects the classifier head
  bool batchnorm = true;

  bool operator==(const BackboneSpec&) const = default;

  int feature_dim() const { return channels.empty() ? 0 : channels.back(); }
  int head_dim() const { return n_classes > 0 ? n_classes : embed_dim; }
};

struct EmbeddingBatch {
  Mat vectors;  // B x d
  bool normalized = false;
};

// One encoder tower with explicit forward/backward. Owns its parameters;
// the flattened vector (blocks then head) is the spec-level parameter vector.
class Encoder {
 public:
  explicit Encoder(BackboneSpec spec, std::uint64_t init_seed = 0);
  Encoder(Encoder&&) = default;
  Encoder& operator=(Encoder&&) = default;

  const BackboneSpec& spec() const { return spec_; }

  std::size_t param_count() const;
  Vec params() const;
  void set_params(const Vec& p);
  Vec grads() const;
  void zero_grads();
  Vec buffers() const;
  void set_buffers(const Vec& b);

  // Last pre-pooling feature map.
  nn::Tensor feature_map(const nn::Tensor& images, bool training);
  // Per-block activation maps (the designated layers for perceptual distances).
  std::vector<nn::Tensor> block_maps(const nn::Tensor& images, bool training);
  // Pooled features, B x feature_dim.
  Mat features(const nn::Tensor& images, bool training);
  // Head output, B x head_dim (projection embedding or class logits).
  Mat head_out(const nn::Tensor& images, bool training);

  // Backward passes; parameter gradients accumulate into the tower.
  void backward_from_head(const Mat& grad_head);
  nn::Tensor backward_from_feature_map(const nn::Tensor& grad_map);

 private:
  BackboneSpec spec_;
  nn::Sequential blocks_;
  nn::GlobalAvgPool gap_;
  nn::Sequential head_;
  std::vector<int> block_taps_;  // activation layer index per block
};

// Query/key parameter sets coupled by a momentum coefficient.
struct EncoderPair {
  Vec query_params;
  Vec key_params;
  double momentum = 0.999;
};

// theta_k <- m * theta_k + (1 - m) * theta_q, elementwise; every updated key
// parameter stays within the closed interval between its previous value and
// the query value. Query parameters are untouched.
EncoderPair momentum_update(const EncoderPair& pair);

// Batch of images as an NCHW tensor.
nn::Tensor batch_to_tensor(const std::vector<const Image*>& images);
nn::Tensor batch_to_tensor(const std::vector<Image>& images);

// Embeds a batch with an encoder; normalized=true L2-normalizes each row
// (the contrastive-variant convention).
EmbeddingBatch encode(Encoder& encoder, const nn::Tensor& images, bool normalize,
                      bool training = false);

// Row-wise L2 normalization and its backward map
//   dL/dz = (dL/dq - q (q . dL/dq)) / ||z||.
Mat normalize_rows(const Mat& z);
Mat normalize_rows_backward(const Mat& z, const Mat& grad_q);

}  // namespace exemplar::contrast
