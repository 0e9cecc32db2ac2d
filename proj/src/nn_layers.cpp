#include "exemplar/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exemplar::nn {

namespace {

// col has shape (in_c*k*k) x (oh*ow); out-of-image taps stay zero.
void im2col(const Tensor& in, int sample, int kernel, int stride, int pad, int oh, int ow,
            Mat& col) {
  col.setZero();
  for (int ic = 0; ic < in.c; ++ic) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const int row = (ic * kernel + ky) * kernel + kx;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= in.h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= in.w) continue;
            col(row, oy * ow + ox) = in.at(sample, ic, iy, ix);
          }
        }
      }
    }
  }
}

void col2im_accumulate(const Mat& col, int sample, int kernel, int stride, int pad, int oh,
                       int ow, Tensor& out) {
  for (int ic = 0; ic < out.c; ++ic) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const int row = (ic * kernel + ky) * kernel + kx;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= out.h) continue;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix < 0 || ix >= out.w) continue;
            out.at(sample, ic, iy, ix) += col(row, oy * ow + ox);
          }
        }
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(int in_channels, int out_channels, int kernel, int stride, int pad)
    : in_c_(in_channels), out_c_(out_channels), kernel_(kernel), stride_(stride),
      pad_(pad >= 0 ? pad : (kernel - 1) / 2) {
  if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1)
    throw std::invalid_argument("Conv2d: bad constructor arguments");
  const int k = in_c_ * kernel_ * kernel_;
  weight_ = Mat::Zero(out_c_, k);
  bias_ = Vec::Zero(out_c_);
  grad_w_ = Mat::Zero(out_c_, k);
  grad_b_ = Vec::Zero(out_c_);
}

Tensor Conv2d::forward(const Tensor& in, bool) {
  if (in.c != in_c_)
    throw std::invalid_argument("Conv2d: expected " + std::to_string(in_c_) +
                                " input channels, got " + std::to_string(in.c));
  const int oh = out_size(in.h), ow = out_size(in.w);
  if (oh < 1 || ow < 1) throw std::invalid_argument("Conv2d: input too small for kernel");
  cached_in_ = in;

  Tensor out(in.n, out_c_, oh, ow);
  Mat col(weight_.cols(), static_cast<Eigen::Index>(oh) * ow);
  for (int s = 0; s < in.n; ++s) {
    im2col(in, s, kernel_, stride_, pad_, oh, ow, col);
    Mat o = weight_ * col;  // out_c x (oh*ow)
    o.colwise() += bias_;
    for (int oc = 0; oc < out_c_; ++oc)
      for (int p = 0; p < oh * ow; ++p) out.at(s, oc, p / ow, p % ow) = o(oc, p);
  }
  return out;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
  const Tensor& in = cached_in_;
  const int oh = grad_out.h, ow = grad_out.w;
  Tensor grad_in(in.n, in.c, in.h, in.w);
  Mat col(weight_.cols(), static_cast<Eigen::Index>(oh) * ow);
  Mat g(out_c_, static_cast<Eigen::Index>(oh) * ow);
  for (int s = 0; s < in.n; ++s) {
    for (int oc = 0; oc < out_c_; ++oc)
      for (int p = 0; p < oh * ow; ++p) g(oc, p) = grad_out.at(s, oc, p / ow, p % ow);
    im2col(in, s, kernel_, stride_, pad_, oh, ow, col);
    grad_w_.noalias() += g * col.transpose();
    grad_b_ += g.rowwise().sum();
    Mat dcol = weight_.transpose() * g;
    col2im_accumulate(dcol, s, kernel_, stride_, pad_, oh, ow, grad_in);
  }
  return grad_in;
}

std::size_t Conv2d::param_count() const {
  return static_cast<std::size_t>(weight_.size()) + static_cast<std::size_t>(bias_.size());
}

void Conv2d::copy_params_to(std::span<double> out) const {
  std::copy_n(weight_.data(), weight_.size(), out.begin());
  std::copy_n(bias_.data(), bias_.size(), out.begin() + weight_.size());
}

void Conv2d::copy_params_from(std::span<const double> in) {
  std::copy_n(in.begin(), weight_.size(), weight_.data());
  std::copy_n(in.begin() + weight_.size(), bias_.size(), bias_.data());
}

void Conv2d::copy_grads_to(std::span<double> out) const {
  std::copy_n(grad_w_.data(), grad_w_.size(), out.begin());
  std::copy_n(grad_b_.data(), grad_b_.size(), out.begin() + grad_w_.size());
}

void Conv2d::zero_grads() {
  grad_w_.setZero();
  grad_b_.setZero();
}

void Conv2d::init_params(Rng& rng) {
  // He-normal for the leaky/relu family.
  const double std = std::sqrt(2.0 / static_cast<double>(weight_.cols()));
  for (Eigen::Index i = 0; i < weight_.size(); ++i) weight_.data()[i] = rng.normal(0.0, std);
  bias_.setZero();
}

std::string Conv2d::describe() const {
  return "conv" + std::to_string(in_c_) + "->" + std::to_string(out_c_) + "k" +
         std::to_string(kernel_) + "s" + std::to_string(stride_);
}

// ---------------------------------------------------------------------------
// BatchNorm2d

BatchNorm2d::BatchNorm2d(int channels, double eps, double momentum)
    : c_(channels), eps_(eps), momentum_(momentum) {
  gamma_ = Vec::Ones(c_);
  beta_ = Vec::Zero(c_);
  grad_gamma_ = Vec::Zero(c_);
  grad_beta_ = Vec::Zero(c_);
  running_mean_ = Vec::Zero(c_);
  running_var_ = Vec::Ones(c_);
}

Tensor BatchNorm2d::forward(const Tensor& in, bool training) {
  if (in.c != c_) throw std::invalid_argument("BatchNorm2d: channel mismatch");
  const double count = static_cast<double>(in.n) * in.h * in.w;
  Tensor out(in.n, in.c, in.h, in.w);
  xhat_ = Tensor(in.n, in.c, in.h, in.w);
  inv_std_ = Vec::Zero(c_);
  cached_training_ = training;

  for (int ch = 0; ch < c_; ++ch) {
    double mean, var;
    if (training) {
      double sum = 0.0, sq = 0.0;
      for (int s = 0; s < in.n; ++s)
        for (int y = 0; y < in.h; ++y)
          for (int x = 0; x < in.w; ++x) {
            const double v = in.at(s, ch, y, x);
            sum += v;
            sq += v * v;
          }
      mean = sum / count;
      var = std::max(0.0, sq / count - mean * mean);
      running_mean_[ch] = (1.0 - momentum_) * running_mean_[ch] + momentum_ * mean;
      running_var_[ch] = (1.0 - momentum_) * running_var_[ch] + momentum_ * var;
    } else {
      mean = running_mean_[ch];
      var = running_var_[ch];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[ch] = inv;
    for (int s = 0; s < in.n; ++s)
      for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) {
          const double xh = (in.at(s, ch, y, x) - mean) * inv;
          xhat_.at(s, ch, y, x) = xh;
          out.at(s, ch, y, x) = gamma_[ch] * xh + beta_[ch];
        }
  }
  return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out) {
  const Tensor& xh = xhat_;
  const double count = static_cast<double>(xh.n) * xh.h * xh.w;
  Tensor grad_in(xh.n, xh.c, xh.h, xh.w);

  for (int ch = 0; ch < c_; ++ch) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int s = 0; s < xh.n; ++s)
      for (int y = 0; y < xh.h; ++y)
        for (int x = 0; x < xh.w; ++x) {
          const double dy = grad_out.at(s, ch, y, x);
          sum_dy += dy;
          sum_dy_xhat += dy * xh.at(s, ch, y, x);
        }
    grad_beta_[ch] += sum_dy;
    grad_gamma_[ch] += sum_dy_xhat;

    const double g = gamma_[ch] * inv_std_[ch];
    for (int s = 0; s < xh.n; ++s)
      for (int y = 0; y < xh.h; ++y)
        for (int x = 0; x < xh.w; ++x) {
          const double dy = grad_out.at(s, ch, y, x);
          if (cached_training_) {
            grad_in.at(s, ch, y, x) =
                g * (dy - sum_dy / count - xh.at(s, ch, y, x) * sum_dy_xhat / count);
          } else {
            grad_in.at(s, ch, y, x) = g * dy;
          }
        }
  }
  return grad_in;
}

void BatchNorm2d::copy_params_to(std::span<double> out) const {
  std::copy_n(gamma_.data(), c_, out.begin());
  std::copy_n(beta_.data(), c_, out.begin() + c_);
}

void BatchNorm2d::copy_params_from(std::span<const double> in) {
  std::copy_n(in.begin(), c_, gamma_.data());
  std::copy_n(in.begin() + c_, c_, beta_.data());
}

void BatchNorm2d::copy_grads_to(std::span<double> out) const {
  std::copy_n(grad_gamma_.data(), c_, out.begin());
  std::copy_n(grad_beta_.data(), c_, out.begin() + c_);
}

void BatchNorm2d::zero_grads() {
  grad_gamma_.setZero();
  grad_beta_.setZero();
}

void BatchNorm2d::init_params(Rng&) {
  gamma_.setOnes();
  beta_.setZero();
  running_mean_.setZero();
  running_var_.setOnes();
}

void BatchNorm2d::copy_buffers_to(std::span<double> out) const {
  std::copy_n(running_mean_.data(), c_, out.begin());
  std::copy_n(running_var_.data(), c_, out.begin() + c_);
}

void BatchNorm2d::copy_buffers_from(std::span<const double> in) {
  std::copy_n(in.begin(), c_, running_mean_.data());
  std::copy_n(in.begin() + c_, c_, running_var_.data());
}

// ---------------------------------------------------------------------------
// Activations and shape ops

Tensor LeakyReLU::forward(const Tensor& in, bool) {
  cached_in_ = in;
  Tensor out = in;
  for (double& v : out.data)
    if (v < 0.0) v *= slope_;
  return out;
}

Tensor LeakyReLU::backward(const Tensor& grad_out) {
  Tensor grad_in = grad_out;
  for (std::size_t i = 0; i < grad_in.data.size(); ++i)
    if (cached_in_.data[i] < 0.0) grad_in.data[i] *= slope_;
  return grad_in;
}

std::string LeakyReLU::describe() const {
  return slope_ == 0.0 ? "relu" : "lrelu(" + std::to_string(slope_) + ")";
}

Tensor Sigmoid::forward(const Tensor& in, bool) {
  Tensor out = in;
  for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
  cached_out_ = out;
  return out;
}

Tensor Sigmoid::backward(const Tensor& grad_out) {
  Tensor grad_in = grad_out;
  for (std::size_t i = 0; i < grad_in.data.size(); ++i) {
    const double s = cached_out_.data[i];
    grad_in.data[i] *= s * (1.0 - s);
  }
  return grad_in;
}

Tensor Upsample2x::forward(const Tensor& in, bool) {
  in_h_ = in.h;
  in_w_ = in.w;
  Tensor out(in.n, in.c, in.h * 2, in.w * 2);
  for (int s = 0; s < in.n; ++s)
    for (int ch = 0; ch < in.c; ++ch)
      for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
          out.at(s, ch, y, x) = in.at(s, ch, y / 2, x / 2);
  return out;
}

Tensor Upsample2x::backward(const Tensor& grad_out) {
  Tensor grad_in(grad_out.n, grad_out.c, in_h_, in_w_);
  for (int s = 0; s < grad_out.n; ++s)
    for (int ch = 0; ch < grad_out.c; ++ch)
      for (int y = 0; y < grad_out.h; ++y)
        for (int x = 0; x < grad_out.w; ++x)
          grad_in.at(s, ch, y / 2, x / 2) += grad_out.at(s, ch, y, x);
  return grad_in;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(int in_features, int out_features) : in_f_(in_features), out_f_(out_features) {
  weight_ = Mat::Zero(out_f_, in_f_);
  bias_ = Vec::Zero(out_f_);
  grad_w_ = Mat::Zero(out_f_, in_f_);
  grad_b_ = Vec::Zero(out_f_);
}

Tensor Linear::forward(const Tensor& in, bool) {
  const int flat = in.c * in.h * in.w;
  if (flat != in_f_)
    throw std::invalid_argument("Linear: expected " + std::to_string(in_f_) +
                                " input features, got " + std::to_string(flat));
  cached_shape_ = {in.n, in.c, in.h, in.w};
  cached_in_ = Eigen::Map<const Mat>(in.data.data(), flat, in.n);  // features x batch
  Mat o = weight_ * cached_in_;                                    // out x batch
  o.colwise() += bias_;
  Tensor out(in.n, out_f_, 1, 1);
  Eigen::Map<Mat>(out.data.data(), out_f_, in.n) = o;
  return out;
}

Tensor Linear::backward(const Tensor& grad_out) {
  const int n = cached_shape_[0];
  Eigen::Map<const Mat> g(grad_out.data.data(), out_f_, n);
  grad_w_.noalias() += g * cached_in_.transpose();
  grad_b_ += g.rowwise().sum();
  Mat gin = weight_.transpose() * g;  // in x batch
  Tensor grad_in(n, cached_shape_[1], cached_shape_[2], cached_shape_[3]);
  Eigen::Map<Mat>(grad_in.data.data(), in_f_, n) = gin;
  return grad_in;
}

std::size_t Linear::param_count() const {
  return static_cast<std::size_t>(weight_.size()) + static_cast<std::size_t>(bias_.size());
}

void Linear::copy_params_to(std::span<double> out) const {
  std::copy_n(weight_.data(), weight_.size(), out.begin());
  std::copy_n(bias_.data(), bias_.size(), out.begin() + weight_.size());
}

void Linear::copy_params_from(std::span<const double> in) {
  std::copy_n(in.begin(), weight_.size(), weight_.data());
  std::copy_n(in.begin() + weight_.size(), bias_.size(), bias_.data());
}

void Linear::copy_grads_to(std::span<double> out) const {
  std::copy_n(grad_w_.data(), grad_w_.size(), out.begin());
  std::copy_n(grad_b_.data(), grad_b_.size(), out.begin() + grad_w_.size());
}

void Linear::zero_grads() {
  grad_w_.setZero();
  grad_b_.setZero();
}

void Linear::init_params(Rng& rng) {
  const double std = std::sqrt(2.0 / static_cast<double>(in_f_));
  for (Eigen::Index i = 0; i < weight_.size(); ++i) weight_.data()[i] = rng.normal(0.0, std);
  bias_.setZero();
}

std::string Linear::describe() const {
  return "fc" + std::to_string(in_f_) + "->" + std::to_string(out_f_);
}

// ---------------------------------------------------------------------------
// GlobalAvgPool

Tensor GlobalAvgPool::forward(const Tensor& in, bool) {
  in_h_ = in.h;
  in_w_ = in.w;
  Tensor out(in.n, in.c, 1, 1);
  const double inv = 1.0 / (static_cast<double>(in.h) * in.w);
  for (int s = 0; s < in.n; ++s)
    for (int ch = 0; ch < in.c; ++ch) {
      double acc = 0.0;
      for (int y = 0; y < in.h; ++y)
        for (int x = 0; x < in.w; ++x) acc += in.at(s, ch, y, x);
      out.at(s, ch, 0, 0) = acc * inv;
    }
  return out;
}

Tensor GlobalAvgPool::backward(const Tensor& grad_out) {
  Tensor grad_in(grad_out.n, grad_out.c, in_h_, in_w_);
  const double inv = 1.0 / (static_cast<double>(in_h_) * in_w_);
  for (int s = 0; s < grad_out.n; ++s)
    for (int ch = 0; ch < grad_out.c; ++ch) {
      const double g = grad_out.at(s, ch, 0, 0) * inv;
      for (int y = 0; y < in_h_; ++y)
        for (int x = 0; x < in_w_; ++x) grad_in.at(s, ch, y, x) = g;
    }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Sequential

Tensor Sequential::forward(const Tensor& in, bool training) {
  Tensor x = in;
  for (auto& l : layers_) x = l->forward(x, training);
  return x;
}

Tensor Sequential::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

Tensor Sequential::forward_collect(const Tensor& in, bool training,
                                   const std::vector<int>& taps, std::vector<Tensor>& tapped) {
  Tensor x = in;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i]->forward(x, training);
    if (std::find(taps.begin(), taps.end(), static_cast<int>(i)) != taps.end())
      tapped.push_back(x);
  }
  return x;
}

std::size_t Sequential::param_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l->param_count();
  return n;
}

Vec Sequential::params() const {
  Vec p(param_count());
  std::size_t off = 0;
  for (const auto& l : layers_) {
    l->copy_params_to(std::span<double>(p.data() + off, l->param_count()));
    off += l->param_count();
  }
  return p;
}

void Sequential::set_params(const Vec& p) {
  if (static_cast<std::size_t>(p.size()) != param_count())
    throw std::invalid_argument("Sequential::set_params: size mismatch");
  std::size_t off = 0;
  for (auto& l : layers_) {
    l->copy_params_from(std::span<const double>(p.data() + off, l->param_count()));
    off += l->param_count();
  }
}

Vec Sequential::grads() const {
  Vec g(param_count());
  std::size_t off = 0;
  for (const auto& l : layers_) {
    l->copy_grads_to(std::span<double>(g.data() + off, l->param_count()));
    off += l->param_count();
  }
  return g;
}

void Sequential::zero_grads() {
  for (auto& l : layers_) l->zero_grads();
}

void Sequential::init_params(Rng& rng) {
  for (auto& l : layers_) l->init_params(rng);
}

std::size_t Sequential::buffer_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l->buffer_count();
  return n;
}

Vec Sequential::buffers() const {
  Vec b(buffer_count());
  std::size_t off = 0;
  for (const auto& l : layers_) {
    l->copy_buffers_to(std::span<double>(b.data() + off, l->buffer_count()));
    off += l->buffer_count();
  }
  return b;
}

void Sequential::set_buffers(const Vec& b) {
  if (static_cast<std::size_t>(b.size()) != buffer_count())
    throw std::invalid_argument("Sequential::set_buffers: size mismatch");
  std::size_t off = 0;
  for (auto& l : layers_) {
    l->copy_buffers_from(std::span<const double>(b.data() + off, l->buffer_count()));
    off += l->buffer_count();
  }
}

std::string Sequential::describe() const {
  std::string s;
  for (const auto& l : layers_) {
    if (!s.empty()) s += "-";
    s += l->describe();
  }
  return s;
}

}  // namespace exemplar::nn
