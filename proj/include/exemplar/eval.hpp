#pragma once

#include <functional>
#include <vector>

#include "exemplar/dataset.hpp"
#include "exemplar/encoder.hpp"
#include "exemplar/rng.hpp"

namespace exemplar::eval {

using nn::Mat;
using nn::Vec;

struct EvalResult {
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal-approximation half interval
  int n = 0;
};

// mean +- 1.96 * s / sqrt(n) with the sample standard deviation. n >= 2.
EvalResult confidence_interval(const std::vector<double>& samples);

struct ProbeConfig {
  int epochs = 200;  // full-batch gradient steps
  double lr = 0.5;
  double momentum = 0.9;
};

// Trains a single linear softmax classifier on frozen features (zero-initial
// weights, full-batch gradient descent) and reports test accuracy.
double linear_probe(const Mat& train_feats, const std::vector<int>& train_labels,
                    const Mat& test_feats, const std::vector<int>& test_labels,
                    const ProbeConfig& config = {});

// Fits the probe classifier and returns it (weights n_classes x d, bias).
struct LinearClassifier {
  Mat weight;
  Vec bias;
  int predict(const Vec& feat) const;
};
LinearClassifier fit_linear_classifier(const Mat& feats, const std::vector<int>& labels,
                                       int n_classes, const ProbeConfig& config);

struct Episode {
  std::vector<std::size_t> support_indices;
  std::vector<int> support_labels;  // remapped to 0..n_way-1
  std::vector<std::size_t> query_indices;
  std::vector<int> query_labels;
  std::vector<int> way_classes;  // original class ids, sorted
};

// n_way classes sampled without replacement, then k_shot support and n_query
// query items per way, disjoint, also without replacement. The way label
// remap is stable: sorted original class ids.
Episode sample_episode(const data::LabeledImageSet& dataset, int n_way, int k_shot, int n_query,
                       Rng& rng);

struct FewShotConfig {
  int n_way = 5;
  int k_shot = 1;
  int n_query = 15;
  int rounds = 100;  // optimization rounds for the episode classifier
  std::vector<double> lr_grid = {0.1, 0.3, 1.0, 3.0};
  int validation_episodes = 20;  // episodes used to pick the learning rate
  std::uint64_t seed = 0;
};

// Feature extractor contract: rows of the returned matrix are the features
// of the requested dataset indices.
using FeatureFn =
    std::function<Mat(const data::LabeledImageSet&, const std::vector<std::size_t>&)>;

// Frozen-encoder episodic evaluation: per episode, fit a linear classifier
// for `rounds` full-batch steps on the support features and score query
// accuracy. The learning rate is cross-validated once on separate validation
// episodes. Returns mean accuracy with a 95% half-interval over episodes.
EvalResult few_shot_eval(const FeatureFn& features, const data::LabeledImageSet& dataset,
                         int n_episodes, const FewShotConfig& config);

// Convenience wrapper: eval-mode pooled features of a trained encoder.
FeatureFn encoder_features(contrast::Encoder& encoder);

}  // namespace exemplar::eval
