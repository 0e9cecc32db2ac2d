#pragma once

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "exemplar/nn/tensor.hpp"
#include "exemplar/rng.hpp"

namespace exemplar::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Layer with explicit forward/backward. A layer caches whatever it needs from
// the last forward; backward accumulates parameter gradients and returns the
// gradient w.r.t. its input.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor forward(const Tensor& in, bool training) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::size_t param_count() const { return 0; }
  virtual void copy_params_to(std::span<double> out) const { (void)out; }
  virtual void copy_params_from(std::span<const double> in) { (void)in; }
  virtual void copy_grads_to(std::span<double> out) const { (void)out; }
  virtual void zero_grads() {}
  virtual void init_params(Rng& rng) { (void)rng; }

  // Non-learned state (batch-norm running statistics).
  virtual std::size_t buffer_count() const { return 0; }
  virtual void copy_buffers_to(std::span<double> out) const { (void)out; }
  virtual void copy_buffers_from(std::span<const double> in) { (void)in; }

  virtual std::string describe() const = 0;
};

// 2D convolution, zero padding, square kernel. He-normal initialization.
class Conv2d final : public Layer {
 public:
  Conv2d(int in_channels, int out_channels, int kernel, int stride = 1, int pad = -1);

  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

  std::size_t param_count() const override;
  void copy_params_to(std::span<double> out) const override;
  void copy_params_from(std::span<const double> in) override;
  void copy_grads_to(std::span<double> out) const override;
  void zero_grads() override;
  void init_params(Rng& rng) override;
  std::string describe() const override;

  int out_size(int in_size) const { return (in_size + 2 * pad_ - kernel_) / stride_ + 1; }

 private:
  int in_c_, out_c_, kernel_, stride_, pad_;
  Mat weight_;   // out_c x (in_c * k * k)
  Vec bias_;     // out_c
  Mat grad_w_;
  Vec grad_b_;
  Tensor cached_in_;
};

// Per-channel batch normalization over (N, H, W). Training mode uses batch
// statistics and updates running estimates; eval mode uses the running ones.
class BatchNorm2d final : public Layer {
 public:
  explicit BatchNorm2d(int channels, double eps = 1e-5, double momentum = 0.1);

  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

  std::size_t param_count() const override { return 2 * static_cast<std::size_t>(c_); }
  void copy_params_to(std::span<double> out) const override;
  void copy_params_from(std::span<const double> in) override;
  void copy_grads_to(std::span<double> out) const override;
  void zero_grads() override;
  void init_params(Rng& rng) override;

  std::size_t buffer_count() const override { return 2 * static_cast<std::size_t>(c_); }
  void copy_buffers_to(std::span<double> out) const override;
  void copy_buffers_from(std::span<const double> in) override;

  std::string describe() const override { return "bn" + std::to_string(c_); }

 private:
  int c_;
  double eps_, momentum_;
  Vec gamma_, beta_, grad_gamma_, grad_beta_;
  Vec running_mean_, running_var_;
  // forward cache
  Tensor xhat_;
  Vec inv_std_;
  bool cached_training_ = false;
};

class LeakyReLU final : public Layer {
 public:
  explicit LeakyReLU(double slope = 0.2) : slope_(slope) {}
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string describe() const override;

 private:
  double slope_;
  Tensor cached_in_;
};

class Sigmoid final : public Layer {
 public:
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string describe() const override { return "sigmoid"; }

 private:
  Tensor cached_out_;
};

// Nearest-neighbour 2x upsampling.
class Upsample2x final : public Layer {
 public:
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string describe() const override { return "up2x"; }

 private:
  int in_h_ = 0, in_w_ = 0;
};

// Fully connected layer over flattened (C*H*W) features; emits (N, out, 1, 1).
class Linear final : public Layer {
 public:
  Linear(int in_features, int out_features);
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

  std::size_t param_count() const override;
  void copy_params_to(std::span<double> out) const override;
  void copy_params_from(std::span<const double> in) override;
  void copy_grads_to(std::span<double> out) const override;
  void zero_grads() override;
  void init_params(Rng& rng) override;
  std::string describe() const override;

 private:
  int in_f_, out_f_;
  Mat weight_;  // out x in
  Vec bias_;
  Mat grad_w_;
  Vec grad_b_;
  Mat cached_in_;          // in x N
  std::array<int, 4> cached_shape_{};
};

class GlobalAvgPool final : public Layer {
 public:
  Tensor forward(const Tensor& in, bool training) override;
  Tensor backward(const Tensor& grad_out) override;
  std::string describe() const override { return "gap"; }

 private:
  int in_h_ = 0, in_w_ = 0;
};

// Layer pipeline with flattened parameter access. Parameter order is layer
// order; within a layer, the layer's own canonical order. The flattened
// vector is the spec-level "parameter vector" of an encoder.
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

  Tensor forward(const Tensor& in, bool training);
  // Input gradient; parameter gradients accumulate into the layers.
  Tensor backward(const Tensor& grad_out);

  // Forward that also records the output of selected layer indices
  // (used for perceptual distances over designated feature maps).
  Tensor forward_collect(const Tensor& in, bool training,
                         const std::vector<int>& taps, std::vector<Tensor>& tapped);

  std::size_t param_count() const;
  Vec params() const;
  void set_params(const Vec& p);
  Vec grads() const;
  void zero_grads();
  void init_params(Rng& rng);

  std::size_t buffer_count() const;
  Vec buffers() const;
  void set_buffers(const Vec& b);

  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }

  std::string describe() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace exemplar::nn
