#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "exemplar/augment.hpp"
#include "exemplar/dataset.hpp"
#include "exemplar/encoder.hpp"
#include "exemplar/losses.hpp"
#include "exemplar/memory_queue.hpp"
#include "exemplar/nn/optim.hpp"

namespace exemplar::contrast {

enum class Variant { Moco, Exemplar, CrossEntropy };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ContrastConfig {
  Variant variant = Variant::Exemplar;
  double tau = 0.1;          // 0.07 for the v1 regime, 0.1 for Exemplar-v2, 0.2 for MoCo-v2
  int queue_capacity = 4096;
  double momentum = 0.999;
  int epochs = 30;
  int batch_size = 32;
  double lr = 0.05;
  bool cosine = true;
  double weight_decay = 1e-4;
  double sgd_momentum = 0.9;

  bool operator==(const ContrastConfig&) const = default;

  void validate() const {
    if (tau <= 0.0) throw std::invalid_argument("ContrastConfig: tau must be positive");
    if (queue_capacity < 1) throw std::invalid_argument("ContrastConfig: queue capacity < 1");
    if (momentum < 0.0 || momentum > 1.0)
      throw std::invalid_argument("ContrastConfig: momentum outside [0,1]");
    if (epochs < 1 || batch_size < 1)
      throw std::invalid_argument("ContrastConfig: epochs and batch size must be >= 1");
  }
};

// Raised when training hits a non-finite loss; the harness maps it to the
// numeric-abort exit code.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Single-owner training state: exactly one loop mutates it.
struct TrainState {
  BackboneSpec backbone;
  ContrastConfig config;
  Encoder query;
  Encoder key;
  MemoryQueue queue;
  nn::SgdMomentum optimizer;
  Rng rng;
  long global_step = 0;
  long total_steps = 0;  // for the cosine schedule
  int epoch = 0;

  TrainState(BackboneSpec b, ContrastConfig c, std::uint64_t seed, long planned_steps);
};

TrainState init_train_state(const BackboneSpec& backbone, const ContrastConfig& config,
                            std::uint64_t seed, std::size_t dataset_size);

struct EpochMetrics {
  double mean_loss = 0.0;
  double throughput = 0.0;  // images per second, wall clock
  std::vector<double> step_losses;
};

// One pass over the dataset: per batch, two augmented views, query/key
// embeddings, the variant's loss, a gradient step on the query parameters
// only, the momentum update, and a queue write of the key embeddings.
// The cross-entropy variant uses one view and leaves queue and key untouched.
EpochMetrics train_epoch(TrainState& state, const data::LabeledImageSet& dataset,
                         const data::AugmentationPipeline& pipeline);

}  // namespace exemplar::contrast
