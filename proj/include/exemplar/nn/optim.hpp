#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "exemplar/nn/layers.hpp"

namespace exemplar::nn {

// SGD with classical momentum and decoupled-from-nothing weight decay
// (decay is added to the gradient, the common convention).
class SgdMomentum {
 public:
  SgdMomentum(double lr, double momentum = 0.9, double weight_decay = 0.0)
      : lr_(lr), momentum_(momentum), weight_decay_(weight_decay) {}

  void step(Vec& params, const Vec& grads) {
    if (velocity_.size() == 0) velocity_ = Vec::Zero(params.size());
    if (params.size() != grads.size() || params.size() != velocity_.size())
      throw std::invalid_argument("SgdMomentum::step: size mismatch");
    Vec g = grads;
    if (weight_decay_ != 0.0) g += weight_decay_ * params;
    velocity_ = momentum_ * velocity_ + g;
    params -= lr_ * velocity_;
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

  Vec& velocity() { return velocity_; }
  const Vec& velocity() const { return velocity_; }

 private:
  double lr_, momentum_, weight_decay_;
  Vec velocity_;
};

class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(Vec& params, const Vec& grads) {
    if (m_.size() == 0) {
      m_ = Vec::Zero(params.size());
      v_ = Vec::Zero(params.size());
    }
    if (params.size() != grads.size() || params.size() != m_.size())
      throw std::invalid_argument("Adam::step: size mismatch");
    ++t_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grads;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grads.cwiseProduct(grads);
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    params -= (lr_ / bc1) * m_.cwiseQuotient(((v_ / bc2).cwiseSqrt().array() + eps_).matrix());
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  Vec m_, v_;
};

// Cosine decay from base_lr to 0 over total steps; t counts from 0.
inline double cosine_lr(double base_lr, long t, long total) {
  if (total <= 0) return base_lr;
  const double frac = std::min(1.0, static_cast<double>(t) / static_cast<double>(total));
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

}  // namespace exemplar::nn
