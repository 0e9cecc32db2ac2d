#pragma once

#include <optional>

#include "exemplar/memory_queue.hpp"
#include "exemplar/nn/layers.hpp"

namespace exemplar::contrast {

using nn::Mat;
using nn::Vec;

// v / ||v||. Throws on the zero vector.
Vec l2_normalize(const Vec& v);

struct ContrastiveLossResult {
  double value = 0.0;
  Vec grad_q;  // gradient of the loss w.r.t. q
};

// Instance-discrimination InfoNCE:
//   -log( exp(q.k+/tau) / (exp(q.k+/tau) + sum_j exp(q.k_j/tau)) )
// with the sum over all filled queue rows. Empty queue gives loss 0.
ContrastiveLossResult infonce_loss(const Vec& q, const Vec& k_pos, const MemoryQueue& queue,
                                   double tau);

// Label-filtered contrastive loss: queue rows whose label equals y_i are
// excluded from the negative sum; no constraint is placed on them.
ContrastiveLossResult exemplar_loss(const Vec& q, const Vec& k_pos, const MemoryQueue& queue,
                                    int y_i, double tau);

// Mean softmax cross-entropy over a batch of logit rows.
double cross_entropy_loss(const Mat& logits, const std::vector<int>& labels);

// Same, also producing d(loss)/d(logits) (mean reduction).
double cross_entropy_loss_grad(const Mat& logits, const std::vector<int>& labels,
                               Mat& grad_logits);

namespace detail {
// Shared implementation: when filter_label is set, rows with that label are
// skipped. Both public losses route through this single arithmetic path, so
// the vacuous-filter case is bit-identical to InfoNCE.
ContrastiveLossResult contrastive_loss(const Vec& q, const Vec& k_pos, const MemoryQueue& queue,
                                       std::optional<int> filter_label, double tau);
}  // namespace detail

}  // namespace exemplar::contrast
