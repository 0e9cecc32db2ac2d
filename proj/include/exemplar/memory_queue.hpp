#pragma once

#include <vector>

#include "exemplar/nn/layers.hpp"

namespace exemplar::contrast {

// Fixed-capacity FIFO of unit-norm key embeddings paired with labels.
// Rows 0..filled-1 are valid; write_ptr wraps, overwriting the oldest rows.
struct MemoryQueue {
  nn::Mat keys;             // capacity x dim, row i is one key
  std::vector<int> labels;  // aligned with rows
  int write_ptr = 0;
  int filled = 0;

  MemoryQueue() = default;
  MemoryQueue(int capacity, int dim)
      : keys(nn::Mat::Zero(capacity, dim)), labels(static_cast<std::size_t>(capacity), -1) {}

  int capacity() const { return static_cast<int>(keys.rows()); }
  int dim() const { return static_cast<int>(keys.cols()); }
};

// FIFO write of a batch of normalized keys with their labels. Requires
// batch size <= capacity and every row unit-norm (1e-6 tolerance).
void enqueue(MemoryQueue& queue, const nn::Mat& batch_keys, const std::vector<int>& batch_labels);

}  // namespace exemplar::contrast
