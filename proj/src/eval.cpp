#include "exemplar/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "exemplar/losses.hpp"

namespace exemplar::eval {

EvalResult confidence_interval(const std::vector<double>& samples) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw std::invalid_argument("confidence_interval: need at least 2 samples");
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : samples) ss += (s - mean) * (s - mean);
  const double stddev = std::sqrt(ss / (n - 1));
  return {mean, 1.96 * stddev / std::sqrt(static_cast<double>(n)), n};
}

int LinearClassifier::predict(const Vec& feat) const {
  Eigen::Index best;
  (weight * feat + bias).maxCoeff(&best);
  return static_cast<int>(best);
}

LinearClassifier fit_linear_classifier(const Mat& feats, const std::vector<int>& labels,
                                       int n_classes, const ProbeConfig& config) {
  if (feats.rows() == 0) throw std::invalid_argument("fit_linear_classifier: empty split");
  if (feats.rows() != static_cast<Eigen::Index>(labels.size()))
    throw std::invalid_argument("fit_linear_classifier: feature/label count mismatch");
  for (int l : labels)
    if (l < 0 || l >= n_classes)
      throw std::invalid_argument("fit_linear_classifier: label out of range");

  const int d = static_cast<int>(feats.cols());
  LinearClassifier clf{Mat::Zero(n_classes, d), Vec::Zero(n_classes)};
  Mat vel_w = Mat::Zero(n_classes, d);
  Vec vel_b = Vec::Zero(n_classes);

  // Full-batch softmax regression: convex, so zero init is fine and the run
  // is deterministic without any RNG.
  for (int step = 0; step < config.epochs; ++step) {
    const Mat logits = feats * clf.weight.transpose();  // B x n_classes
    Mat logits_b = logits;
    logits_b.rowwise() += clf.bias.transpose();
    Mat grad_logits;
    contrast::cross_entropy_loss_grad(logits_b, labels, grad_logits);
    const Mat grad_w = grad_logits.transpose() * feats;  // n_classes x d
    const Vec grad_b = grad_logits.colwise().sum().transpose();
    vel_w = config.momentum * vel_w + grad_w;
    vel_b = config.momentum * vel_b + grad_b;
    clf.weight -= config.lr * vel_w;
    clf.bias -= config.lr * vel_b;
  }
  return clf;
}

namespace {

double classifier_accuracy(const LinearClassifier& clf, const Mat& feats,
                           const std::vector<int>& labels) {
  int correct = 0;
  for (Eigen::Index i = 0; i < feats.rows(); ++i)
    if (clf.predict(feats.row(i).transpose()) == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(feats.rows());
}

}  // namespace

double linear_probe(const Mat& train_feats, const std::vector<int>& train_labels,
                    const Mat& test_feats, const std::vector<int>& test_labels,
                    const ProbeConfig& config) {
  if (train_feats.rows() == 0 || test_feats.rows() == 0)
    throw std::invalid_argument("linear_probe: empty split");
  if (train_feats.cols() != test_feats.cols())
    throw std::invalid_argument("linear_probe: feature dimension mismatch");
  int n_classes = 0;
  for (int l : train_labels) n_classes = std::max(n_classes, l + 1);
  for (int l : test_labels) n_classes = std::max(n_classes, l + 1);
  const LinearClassifier clf =
      fit_linear_classifier(train_feats, train_labels, n_classes, config);
  return classifier_accuracy(clf, test_feats, test_labels);
}

Episode sample_episode(const data::LabeledImageSet& dataset, int n_way, int k_shot, int n_query,
                       Rng& rng) {
  if (n_way < 2 || k_shot < 1 || n_query < 1)
    throw std::invalid_argument("sample_episode: need n_way >= 2, k_shot >= 1, n_query >= 1");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < dataset.size(); ++i) by_class[dataset.labels[i]].push_back(i);

  std::vector<int> eligible;
  for (const auto& [cls, idx] : by_class)
    if (static_cast<int>(idx.size()) >= k_shot + n_query) eligible.push_back(cls);
  if (static_cast<int>(eligible.size()) < n_way)
    throw std::invalid_argument(
        "sample_episode: only " + std::to_string(eligible.size()) + " classes have at least " +
        std::to_string(k_shot + n_query) + " items, need " + std::to_string(n_way));

  // Ways without replacement, then stable remap by sorted class id.
  std::vector<int> ways;
  {
    std::vector<int> pool = eligible;
    for (int w = 0; w < n_way; ++w) {
      const auto pick =
          static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
      ways.push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
  }
  std::sort(ways.begin(), ways.end());

  Episode ep;
  ep.way_classes = ways;
  for (int w = 0; w < n_way; ++w) {
    std::vector<std::size_t> pool = by_class[ways[w]];
    // Draw k_shot + n_query distinct items: support first, then query.
    for (int j = 0; j < k_shot + n_query; ++j) {
      const auto pick =
          static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
      const std::size_t item = pool[pick];
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
      if (j < k_shot) {
        ep.support_indices.push_back(item);
        ep.support_labels.push_back(w);
      } else {
        ep.query_indices.push_back(item);
        ep.query_labels.push_back(w);
      }
    }
  }
  return ep;
}

EvalResult few_shot_eval(const FeatureFn& features, const data::LabeledImageSet& dataset,
                         int n_episodes, const FewShotConfig& config) {
  if (n_episodes < 2) throw std::invalid_argument("few_shot_eval: need at least 2 episodes");
  if (config.lr_grid.empty()) throw std::invalid_argument("few_shot_eval: empty lr grid");

  const Rng root(config.seed);

  auto run_episode = [&](Rng& rng, double lr) {
    const Episode ep =
        sample_episode(dataset, config.n_way, config.k_shot, config.n_query, rng);
    const Mat support = features(dataset, ep.support_indices);
    const Mat query = features(dataset, ep.query_indices);
    ProbeConfig pc;
    pc.epochs = config.rounds;
    pc.lr = lr;
    // No extra normalization layer before the classifier; with as few as
    // n_way support images there is nothing meaningful to normalize over.
    const LinearClassifier clf =
        fit_linear_classifier(support, ep.support_labels, config.n_way, pc);
    return classifier_accuracy(clf, query, ep.query_labels);
  };

  // Cross-validate the learning rate on a separate episode stream; every
  // grid entry sees the same validation episodes.
  double best_lr = config.lr_grid.front();
  if (config.lr_grid.size() > 1 && config.validation_episodes > 0) {
    double best_acc = -1.0;
    for (double lr : config.lr_grid) {
      Rng stream = root.split(0xFEEDull);
      double acc = 0.0;
      for (int e = 0; e < config.validation_episodes; ++e) acc += run_episode(stream, lr);
      acc /= config.validation_episodes;
      if (acc > best_acc) {
        best_acc = acc;
        best_lr = lr;
      }
    }
  }

  std::vector<double> accs;
  accs.reserve(static_cast<std::size_t>(n_episodes));
  Rng stream = root.split(0xE7A1ull);
  for (int e = 0; e < n_episodes; ++e) accs.push_back(run_episode(stream, best_lr));
  return confidence_interval(accs);
}

FeatureFn encoder_features(contrast::Encoder& encoder) {
  return [&encoder](const data::LabeledImageSet& dataset,
                    const std::vector<std::size_t>& indices) {
    std::vector<const Image*> batch;
    batch.reserve(indices.size());
    for (std::size_t i : indices) batch.push_back(&dataset.images[i]);
    return encoder.features(contrast::batch_to_tensor(batch), /*training=*/false);
  };
}

}  // namespace exemplar::eval
