#include "exemplar/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace exemplar::contrast {

Vec l2_normalize(const Vec& v) {
  const double n = v.norm();
  if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
  return v / n;
}

namespace detail {

ContrastiveLossResult contrastive_loss(const Vec& q, const Vec& k_pos, const MemoryQueue& queue,
                                       std::optional<int> filter_label, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("contrastive loss: tau must be positive");
  if (q.size() != k_pos.size())
    throw std::invalid_argument("contrastive loss: q and k_pos dimension mismatch");
  if (queue.filled > 0 && queue.dim() != q.size())
    throw std::invalid_argument("contrastive loss: queue dimension mismatch");

  const double l_pos = q.dot(k_pos) / tau;

  // Gather the participating negative logits.
  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(queue.filled));
  for (int j = 0; j < queue.filled; ++j)
    if (!filter_label || queue.labels[j] != *filter_label) rows.push_back(j);

  std::vector<double> logits(rows.size());
  double max_logit = l_pos;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    logits[i] = queue.keys.row(rows[i]).dot(q.transpose()) / tau;
    max_logit = std::max(max_logit, logits[i]);
  }

  // loss = -l_pos + logsumexp(l_pos, negatives). With no negatives this is
  // exactly zero.
  double denom = std::exp(l_pos - max_logit);
  for (double l : logits) denom += std::exp(l - max_logit);
  const double lse = max_logit + std::log(denom);

  ContrastiveLossResult res;
  res.value = -l_pos + lse;

  // d(loss)/dq = ((p_pos - 1) k_pos + sum_j p_j k_j) / tau
  const double p_pos = std::exp(l_pos - lse);
  res.grad_q = (p_pos - 1.0) / tau * k_pos;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double p = std::exp(logits[i] - lse);
    res.grad_q += (p / tau) * queue.keys.row(rows[i]).transpose();
  }
  return res;
}

}  // namespace detail

ContrastiveLossResult infonce_loss(const Vec& q, const Vec& k_pos, const MemoryQueue& queue,
                                   double tau) {
  return detail::contrastive_loss(q, k_pos, queue, std::nullopt, tau);
}

ContrastiveLossResult exemplar_loss(const Vec& q, const Vec& k_pos, const MemoryQueue& queue,
                                    int y_i, double tau) {
  return detail::contrastive_loss(q, k_pos, queue, y_i, tau);
}

double cross_entropy_loss(const Mat& logits, const std::vector<int>& labels) {
  Mat unused;
  return cross_entropy_loss_grad(logits, labels, unused);
}

double cross_entropy_loss_grad(const Mat& logits, const std::vector<int>& labels,
                               Mat& grad_logits) {
  const int b = static_cast<int>(logits.rows());
  const int n = static_cast<int>(logits.cols());
  if (static_cast<int>(labels.size()) != b)
    throw std::invalid_argument("cross_entropy_loss: batch size mismatch");
  for (int l : labels)
    if (l < 0 || l >= n)
      throw std::invalid_argument("cross_entropy_loss: label " + std::to_string(l) +
                                  " out of range [0," + std::to_string(n) + ")");

  grad_logits = Mat::Zero(b, n);
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    const double m = logits.row(i).maxCoeff();
    double denom = 0.0;
    for (int j = 0; j < n; ++j) denom += std::exp(logits(i, j) - m);
    const double lse = m + std::log(denom);
    total += lse - logits(i, labels[i]);
    for (int j = 0; j < n; ++j)
      grad_logits(i, j) = std::exp(logits(i, j) - lse) / b;
    grad_logits(i, labels[i]) -= 1.0 / b;
  }
  return total / b;
}

}  // namespace exemplar::contrast
