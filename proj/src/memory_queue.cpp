#include "exemplar/memory_queue.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace exemplar::contrast {

void enqueue(MemoryQueue& queue, const nn::Mat& batch_keys,
             const std::vector<int>& batch_labels) {
  const int b = static_cast<int>(batch_keys.rows());
  const int cap = queue.capacity();
  if (b > cap)
    throw std::invalid_argument("enqueue: batch size " + std::to_string(b) +
                                " exceeds queue capacity " + std::to_string(cap));
  if (static_cast<int>(batch_labels.size()) != b)
    throw std::invalid_argument("enqueue: key/label count mismatch");
  if (batch_keys.cols() != queue.keys.cols())
    throw std::invalid_argument("enqueue: key dimension mismatch");
  for (int i = 0; i < b; ++i) {
    const double n = batch_keys.row(i).norm();
    if (std::abs(n - 1.0) > 1e-6)
      throw std::invalid_argument("enqueue: key row " + std::to_string(i) +
                                  " is not unit-norm (norm=" + std::to_string(n) + ")");
  }

  for (int i = 0; i < b; ++i) {
    queue.keys.row(queue.write_ptr) = batch_keys.row(i);
    queue.labels[static_cast<std::size_t>(queue.write_ptr)] = batch_labels[i];
    queue.write_ptr = (queue.write_ptr + 1) % cap;
  }
  queue.filled = std::min(queue.filled + b, cap);
}

}  // namespace exemplar::contrast
