#include "exemplar/train.hpp"

#include <chrono>
#include <cmath>

namespace exemplar::contrast {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Moco: return "moco";
    case Variant::Exemplar: return "exemplar";
    case Variant::CrossEntropy: return "cross_entropy";
  }
  return "?";
}

Variant variant_from_name(const std::string& name) {
  if (name == "moco") return Variant::Moco;
  if (name == "exemplar") return Variant::Exemplar;
  if (name == "cross_entropy") return Variant::CrossEntropy;
  throw std::invalid_argument("unknown loss variant: " + name);
}

TrainState::TrainState(BackboneSpec b, ContrastConfig c, std::uint64_t seed, long planned_steps)
    : backbone(std::move(b)),
      config(c),
      query(backbone, Rng(seed).split(1).seed()),
      key(backbone, 0),
      queue(c.queue_capacity, backbone.head_dim()),
      optimizer(c.lr, c.sgd_momentum, c.weight_decay),
      rng(Rng(seed).split(2).seed()),
      total_steps(planned_steps) {
  key.set_params(query.params());  // key tower starts as a copy
}

TrainState init_train_state(const BackboneSpec& backbone, const ContrastConfig& config,
                            std::uint64_t seed, std::size_t dataset_size) {
  config.validate();
  if (dataset_size == 0) throw std::invalid_argument("init_train_state: empty dataset");
  if (config.variant == Variant::CrossEntropy && backbone.n_classes < 1)
    throw std::invalid_argument("init_train_state: cross_entropy needs n_classes in the backbone");
  const long steps_per_epoch =
      static_cast<long>((dataset_size + config.batch_size - 1) / config.batch_size);
  return TrainState(backbone, config, seed, steps_per_epoch * config.epochs);
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

}  // namespace

EpochMetrics train_epoch(TrainState& state, const data::LabeledImageSet& dataset,
                         const data::AugmentationPipeline& pipeline) {
  if (dataset.size() == 0) throw std::invalid_argument("train_epoch: empty dataset");
  const auto t0 = std::chrono::steady_clock::now();
  const ContrastConfig& cfg = state.config;
  const bool contrastive = cfg.variant != Variant::CrossEntropy;

  EpochMetrics metrics;
  const std::vector<std::size_t> order = shuffled_indices(dataset.size(), state.rng);

  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), start + cfg.batch_size);
    const int b = static_cast<int>(end - start);

    // Augment. Contrastive variants draw two views, cross-entropy one.
    std::vector<Image> query_views, key_views;
    std::vector<int> labels;
    query_views.reserve(b);
    labels.reserve(b);
    for (std::size_t i = start; i < end; ++i) {
      const Image& img = dataset.images[order[i]];
      labels.push_back(dataset.labels[order[i]]);
      if (contrastive) {
        auto [vq, vk] = data::make_two_views(img, pipeline, state.rng);
        query_views.push_back(std::move(vq));
        key_views.push_back(std::move(vk));
      } else {
        query_views.push_back(data::augment(img, pipeline, state.rng));
      }
    }
    const nn::Tensor query_batch = batch_to_tensor(query_views);

    state.query.zero_grads();
    double batch_loss = 0.0;

    if (contrastive) {
      const Mat z = state.query.head_out(query_batch, /*training=*/true);
      const Mat q = normalize_rows(z);
      const nn::Tensor key_batch = batch_to_tensor(key_views);
      const Mat k = normalize_rows(state.key.head_out(key_batch, /*training=*/true));

      Mat grad_q = Mat::Zero(q.rows(), q.cols());
      for (int i = 0; i < b; ++i) {
        const Vec qi = q.row(i).transpose();
        const Vec ki = k.row(i).transpose();
        const ContrastiveLossResult r =
            cfg.variant == Variant::Exemplar
                ? exemplar_loss(qi, ki, state.queue, labels[i], cfg.tau)
                : infonce_loss(qi, ki, state.queue, cfg.tau);
        batch_loss += r.value;
        grad_q.row(i) = r.grad_q.transpose();
      }
      batch_loss /= b;
      grad_q /= static_cast<double>(b);  // batch loss is the mean of per-instance losses

      if (!std::isfinite(batch_loss))
        throw NumericError("non-finite loss at batch index " + std::to_string(start / cfg.batch_size) +
                           " (epoch " + std::to_string(state.epoch) + ")");

      state.query.backward_from_head(normalize_rows_backward(z, grad_q));

      // Gradient step on the query tower only.
      const double lr = cfg.cosine ? nn::cosine_lr(cfg.lr, state.global_step, state.total_steps)
                                   : cfg.lr;
      state.optimizer.set_lr(lr);
      Vec params = state.query.params();
      state.optimizer.step(params, state.query.grads());
      state.query.set_params(params);

      // Momentum update of the key tower, then enqueue the fresh keys.
      EncoderPair pair{state.query.params(), state.key.params(), cfg.momentum};
      state.key.set_params(momentum_update(pair).key_params);
      enqueue(state.queue, k, labels);
    } else {
      const Mat logits = state.query.head_out(query_batch, /*training=*/true);
      Mat grad_logits;
      batch_loss = cross_entropy_loss_grad(logits, labels, grad_logits);
      if (!std::isfinite(batch_loss))
        throw NumericError("non-finite loss at batch index " + std::to_string(start / cfg.batch_size) +
                           " (epoch " + std::to_string(state.epoch) + ")");
      state.query.backward_from_head(grad_logits);
      const double lr = cfg.cosine ? nn::cosine_lr(cfg.lr, state.global_step, state.total_steps)
                                   : cfg.lr;
      state.optimizer.set_lr(lr);
      Vec params = state.query.params();
      state.optimizer.step(params, state.query.grads());
      state.query.set_params(params);
    }

    metrics.step_losses.push_back(batch_loss);
    ++state.global_step;
  }
  ++state.epoch;

  double total = 0.0;
  for (double l : metrics.step_losses) total += l;
  metrics.mean_loss = metrics.step_losses.empty() ? 0.0 : total / metrics.step_losses.size();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  metrics.throughput = secs > 0.0 ? static_cast<double>(dataset.size()) / secs : 0.0;
  return metrics;
}

}  // namespace exemplar::contrast
