#include "exemplar/encoder.hpp"

#include <algorithm>
#include <memory>
#include <stdexcept>

namespace exemplar::contrast {

Encoder::Encoder(BackboneSpec spec, std::uint64_t init_seed) : spec_(std::move(spec)) {
  if (spec_.channels.empty()) throw std::invalid_argument("Encoder: no blocks configured");
  int in_c = spec_.in_channels;
  int layer_idx = 0;
  for (int out_c : spec_.channels) {
    blocks_.add(std::make_unique<nn::Conv2d>(in_c, out_c, 3, /*stride=*/2));
    ++layer_idx;
    if (spec_.batchnorm) {
      blocks_.add(std::make_unique<nn::BatchNorm2d>(out_c));
      ++layer_idx;
    }
    blocks_.add(std::make_unique<nn::LeakyReLU>(0.0));  // plain ReLU
    block_taps_.push_back(layer_idx);
    ++layer_idx;
    in_c = out_c;
  }
  const int feat = spec_.feature_dim();
  if (spec_.n_classes > 0) {
    head_.add(std::make_unique<nn::Linear>(feat, spec_.n_classes));
  } else {
    // Leaky slope keeps the projection away from exact-zero rows, which the
    // normalization step rejects.
    head_.add(std::make_unique<nn::Linear>(feat, spec_.proj_hidden));
    head_.add(std::make_unique<nn::LeakyReLU>(0.1));
    head_.add(std::make_unique<nn::Linear>(spec_.proj_hidden, spec_.embed_dim));
  }
  Rng rng(init_seed);
  blocks_.init_params(rng);
  head_.init_params(rng);
}

std::size_t Encoder::param_count() const { return blocks_.param_count() + head_.param_count(); }

Vec Encoder::params() const {
  Vec p(param_count());
  p.head(blocks_.param_count()) = blocks_.params();
  p.tail(head_.param_count()) = head_.params();
  return p;
}

void Encoder::set_params(const Vec& p) {
  if (static_cast<std::size_t>(p.size()) != param_count())
    throw std::invalid_argument("Encoder::set_params: size mismatch");
  blocks_.set_params(p.head(blocks_.param_count()));
  head_.set_params(p.tail(head_.param_count()));
}

Vec Encoder::grads() const {
  Vec g(param_count());
  g.head(blocks_.param_count()) = blocks_.grads();
  g.tail(head_.param_count()) = head_.grads();
  return g;
}

void Encoder::zero_grads() {
  blocks_.zero_grads();
  head_.zero_grads();
}

Vec Encoder::buffers() const {
  Vec b(blocks_.buffer_count() + head_.buffer_count());
  b.head(blocks_.buffer_count()) = blocks_.buffers();
  b.tail(head_.buffer_count()) = head_.buffers();
  return b;
}

void Encoder::set_buffers(const Vec& b) {
  blocks_.set_buffers(b.head(blocks_.buffer_count()));
  head_.set_buffers(b.tail(head_.buffer_count()));
}

nn::Tensor Encoder::feature_map(const nn::Tensor& images, bool training) {
  if (images.c != spec_.in_channels)
    throw std::invalid_argument("Encoder: image channel count does not match spec");
  if (images.h != spec_.input_size || images.w != spec_.input_size)
    throw std::invalid_argument("Encoder: image size " + std::to_string(images.h) + "x" +
                                std::to_string(images.w) + " does not match spec input size " +
                                std::to_string(spec_.input_size));
  return blocks_.forward(images, training);
}

std::vector<nn::Tensor> Encoder::block_maps(const nn::Tensor& images, bool training) {
  std::vector<nn::Tensor> tapped;
  blocks_.forward_collect(images, training, block_taps_, tapped);
  return tapped;
}

Mat Encoder::features(const nn::Tensor& images, bool training) {
  const nn::Tensor pooled = gap_.forward(feature_map(images, training), training);
  return Eigen::Map<const Mat>(pooled.data.data(), pooled.c, pooled.n).transpose();
}

Mat Encoder::head_out(const nn::Tensor& images, bool training) {
  const nn::Tensor pooled = gap_.forward(feature_map(images, training), training);
  const nn::Tensor out = head_.forward(pooled, training);
  return Eigen::Map<const Mat>(out.data.data(), out.c, out.n).transpose();
}

void Encoder::backward_from_head(const Mat& grad_head) {
  nn::Tensor g(static_cast<int>(grad_head.rows()), static_cast<int>(grad_head.cols()), 1, 1);
  Eigen::Map<Mat>(g.data.data(), grad_head.cols(), grad_head.rows()) = grad_head.transpose();
  const nn::Tensor g_pooled = head_.backward(g);
  blocks_.backward(gap_.backward(g_pooled));
}

nn::Tensor Encoder::backward_from_feature_map(const nn::Tensor& grad_map) {
  return blocks_.backward(grad_map);
}

EncoderPair momentum_update(const EncoderPair& pair) {
  if (pair.query_params.size() != pair.key_params.size())
    throw std::invalid_argument("momentum_update: parameter shape mismatch");
  if (pair.momentum < 0.0 || pair.momentum > 1.0)
    throw std::invalid_argument("momentum_update: momentum outside [0,1]");
  EncoderPair out = pair;
  const double m = pair.momentum;
  for (Eigen::Index i = 0; i < out.key_params.size(); ++i) {
    const double k = pair.key_params[i];
    const double q = pair.query_params[i];
    // Clamp shields the containment invariant against last-ulp rounding.
    const double v = m * k + (1.0 - m) * q;
    out.key_params[i] = std::clamp(v, std::min(k, q), std::max(k, q));
  }
  return out;
}

nn::Tensor batch_to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw std::invalid_argument("batch_to_tensor: empty batch");
  const Image& first = *images.front();
  nn::Tensor t(static_cast<int>(images.size()), first.channels, first.height, first.width);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = *images[i];
    if (!img.same_shape(first))
      throw std::invalid_argument("batch_to_tensor: mixed image shapes in batch");
    for (int c = 0; c < img.channels; ++c)
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
          t.at(static_cast<int>(i), c, y, x) = img.at(y, x, c);
  }
  return t;
}

nn::Tensor batch_to_tensor(const std::vector<Image>& images) {
  std::vector<const Image*> ptrs;
  ptrs.reserve(images.size());
  for (const auto& img : images) ptrs.push_back(&img);
  return batch_to_tensor(ptrs);
}

EmbeddingBatch encode(Encoder& encoder, const nn::Tensor& images, bool normalize,
                      bool training) {
  EmbeddingBatch out;
  Mat z = encoder.head_out(images, training);
  out.vectors = normalize ? normalize_rows(z) : std::move(z);
  out.normalized = normalize;
  return out;
}

Mat normalize_rows(const Mat& z) {
  Mat q = z;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double n = q.row(i).norm();
    if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
    q.row(i) /= n;
  }
  return q;
}

Mat normalize_rows_backward(const Mat& z, const Mat& grad_q) {
  Mat g(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double n = z.row(i).norm();
    const Eigen::RowVectorXd q = z.row(i) / n;
    g.row(i) = (grad_q.row(i) - q * q.dot(grad_q.row(i))) / n;
  }
  return g;
}

}  // namespace exemplar::contrast
