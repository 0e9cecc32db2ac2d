#include "exemplar/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "exemplar/nn/optim.hpp"

namespace exemplar::inversion {

int ReconstructorSpec::downsample_count() const {
  int n = 0;
  for (const auto& b : encoder) n += b.kind == BlockKind::ConvDown ? 1 : 0;
  return n;
}

int ReconstructorSpec::upsample_count() const {
  int n = 0;
  for (const auto& b : decoder) n += b.kind == BlockKind::ConvUp ? 1 : 0;
  return n;
}

namespace {

std::string block_to_string(const Block& b) {
  std::string prefix;
  switch (b.kind) {
    case BlockKind::Conv: prefix = "C"; break;
    case BlockKind::ConvDown: prefix = "CD"; break;
    case BlockKind::ConvUp: prefix = "CU"; break;
  }
  return prefix + std::to_string(b.channels) + "^" + std::to_string(b.kernel);
}

Block block_from_string(const std::string& text) {
  Block b;
  std::size_t pos = 0;
  if (text.rfind("CD", 0) == 0) {
    b.kind = BlockKind::ConvDown;
    pos = 2;
  } else if (text.rfind("CU", 0) == 0) {
    b.kind = BlockKind::ConvUp;
    pos = 2;
  } else if (text.rfind("C", 0) == 0) {
    b.kind = BlockKind::Conv;
    pos = 1;
  } else {
    throw std::invalid_argument("ReconstructorSpec: bad block '" + text + "'");
  }
  const auto caret = text.find('^', pos);
  if (caret == std::string::npos)
    throw std::invalid_argument("ReconstructorSpec: bad block '" + text + "'");
  b.channels = std::stoi(text.substr(pos, caret - pos));
  b.kernel = std::stoi(text.substr(caret + 1));
  if (b.channels < 1 || b.kernel < 1 || b.kernel % 2 == 0)
    throw std::invalid_argument("ReconstructorSpec: bad block '" + text + "'");
  return b;
}

std::vector<Block> blocks_from_string(const std::string& text) {
  std::vector<Block> blocks;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto dash = text.find('-', start);
    const std::string tok =
        text.substr(start, dash == std::string::npos ? std::string::npos : dash - start);
    if (!tok.empty()) blocks.push_back(block_from_string(tok));
    if (dash == std::string::npos) break;
    start = dash + 1;
  }
  return blocks;
}

std::string blocks_to_string(const std::vector<Block>& blocks) {
  std::string s;
  for (const auto& b : blocks) {
    if (!s.empty()) s += "-";
    s += block_to_string(b);
  }
  return s;
}

}  // namespace

std::string ReconstructorSpec::to_string() const {
  return "encoder: " + blocks_to_string(encoder) + "\ndecoder: " + blocks_to_string(decoder) +
         "\n";
}

ReconstructorSpec ReconstructorSpec::parse(const std::string& text) {
  std::istringstream ss(text);
  std::string line;
  ReconstructorSpec spec;
  bool saw_encoder = false, saw_decoder = false;
  while (std::getline(ss, line)) {
    if (line.rfind("encoder: ", 0) == 0) {
      spec.encoder = blocks_from_string(line.substr(9));
      saw_encoder = true;
    } else if (line.rfind("decoder: ", 0) == 0) {
      spec.decoder = blocks_from_string(line.substr(9));
      saw_decoder = true;
    } else if (!line.empty()) {
      throw std::invalid_argument("ReconstructorSpec::parse: unexpected line '" + line + "'");
    }
  }
  if (!saw_encoder || !saw_decoder)
    throw std::invalid_argument("ReconstructorSpec::parse: missing encoder or decoder line");
  return spec;
}

ReconstructorSpec default_reconstructor_spec() {
  ReconstructorSpec spec;
  const int enc_ch[] = {16, 16, 32, 32, 64, 64, 128, 128, 128, 128, 128, 128};
  const int enc_k[] = {7, 7, 7, 7, 5, 5, 5, 5, 3, 3, 3, 3};
  for (int i = 0; i < 12; ++i)
    spec.encoder.push_back(
        {i % 2 == 0 ? BlockKind::ConvDown : BlockKind::Conv, enc_ch[i], enc_k[i]});
  const int dec_ch[] = {16, 16, 32, 32, 64, 64, 128, 128, 128, 128, 128, 128};
  const int dec_k[] = {7, 7, 7, 7, 5, 5, 5, 5, 3, 3, 3, 3};
  for (int i = 0; i < 12; ++i)
    spec.decoder.push_back(
        {i % 2 == 0 ? BlockKind::Conv : BlockKind::ConvUp, dec_ch[i], dec_k[i]});
  return spec;
}

ReconstructorSpec small_reconstructor_spec() {
  ReconstructorSpec spec;
  spec.encoder = {{BlockKind::ConvDown, 16, 5}, {BlockKind::Conv, 16, 5},
                  {BlockKind::ConvDown, 32, 5}, {BlockKind::Conv, 32, 5},
                  {BlockKind::ConvDown, 64, 3}, {BlockKind::Conv, 64, 3}};
  spec.decoder = {{BlockKind::Conv, 32, 3}, {BlockKind::ConvUp, 32, 3},
                  {BlockKind::Conv, 32, 5}, {BlockKind::ConvUp, 32, 5},
                  {BlockKind::Conv, 16, 5}, {BlockKind::ConvUp, 16, 5}};
  return spec;
}

Reconstructor::Reconstructor(const ReconstructorSpec& spec, int out_channels,
                             std::uint64_t init_seed) {
  if (spec.downsample_count() != spec.upsample_count())
    throw std::invalid_argument(
        "Reconstructor: mismatched encoder/decoder resolution schedules (" +
        std::to_string(spec.downsample_count()) + " downsamples vs " +
        std::to_string(spec.upsample_count()) + " upsamples)");
  int in_c = spec.noise_channels;
  auto add_block = [&](const Block& b) {
    const int stride = b.kind == BlockKind::ConvDown ? 2 : 1;
    net_.add(std::make_unique<nn::Conv2d>(in_c, b.channels, b.kernel, stride));
    net_.add(std::make_unique<nn::BatchNorm2d>(b.channels));
    net_.add(std::make_unique<nn::LeakyReLU>(0.2));
    if (b.kind == BlockKind::ConvUp) net_.add(std::make_unique<nn::Upsample2x>());
    in_c = b.channels;
  };
  for (const auto& b : spec.encoder) add_block(b);
  for (const auto& b : spec.decoder) add_block(b);
  // Output projection: 1x1 conv to image channels, sigmoid keeps values in [0,1].
  net_.add(std::make_unique<nn::Conv2d>(in_c, out_channels, 1));
  net_.add(std::make_unique<nn::Sigmoid>());

  Rng rng(init_seed);
  net_.init_params(rng);
}

nn::Tensor Reconstructor::forward(const nn::Tensor& noise, bool training) {
  return net_.forward(noise, training);
}

void Reconstructor::backward(const nn::Tensor& grad_out) { net_.backward(grad_out); }

Reconstructor build_reconstructor(const ReconstructorSpec& spec, int out_channels,
                                  std::uint64_t seed) {
  return Reconstructor(spec, out_channels, seed);
}

FeatureTransform identity_features() {
  FeatureTransform f;
  f.forward = [](const nn::Tensor& x) { return x; };
  f.backward = [](const nn::Tensor& g) { return g; };
  return f;
}

FeatureTransform encoder_features(contrast::Encoder& encoder) {
  // Eval mode: the feature encoder is frozen, so its normalization buffers
  // must not drift while the reconstructor is optimized against it.
  FeatureTransform f;
  f.forward = [&encoder](const nn::Tensor& x) { return encoder.feature_map(x, /*training=*/false); };
  f.backward = [&encoder](const nn::Tensor& g) { return encoder.backward_from_feature_map(g); };
  return f;
}

namespace {

Image tensor_to_image(const nn::Tensor& t, const std::string& source_id) {
  Image img(t.h, t.w, t.c);
  img.source_id = source_id;
  for (int c = 0; c < t.c; ++c)
    for (int y = 0; y < t.h; ++y)
      for (int x = 0; x < t.w; ++x) img.at(y, x, c) = std::clamp(t.at(0, c, y, x), 0.0, 1.0);
  return img;
}

}  // namespace

ReconstructionResult invert_features(const FeatureTransform& features, const Image& target,
                                     const InversionConfig& config) {
  if (config.iterations < 1)
    throw std::invalid_argument("invert_features: iterations must be >= 1");
  if (!(config.lr > 0.0)) throw std::invalid_argument("invert_features: lr must be positive");
  if (config.noise_low > config.noise_high)
    throw std::invalid_argument("invert_features: noise bounds out of order");
  const int down = config.spec.downsample_count();
  const int div = 1 << down;
  if (target.height % div != 0 || target.width % div != 0)
    throw std::invalid_argument("invert_features: target dimensions must be divisible by 2^" +
                                std::to_string(down));

  Rng rng(config.seed);
  Reconstructor recon(config.spec, target.channels, rng.split(1).seed());

  // z0 is sampled once and fixed for the whole optimization.
  nn::Tensor z0(1, config.spec.noise_channels, target.height, target.width);
  {
    Rng noise_rng = rng.split(2);
    for (double& v : z0.data) v = noise_rng.uniform(config.noise_low, config.noise_high);
  }

  nn::Tensor target_t(1, target.channels, target.height, target.width);
  for (int c = 0; c < target.channels; ++c)
    for (int y = 0; y < target.height; ++y)
      for (int x = 0; x < target.width; ++x) target_t.at(0, c, y, x) = target.at(y, x, c);
  const nn::Tensor target_feat = features.forward(target_t);

  nn::Adam adam(config.lr);
  ReconstructionResult result;
  result.trace.reserve(static_cast<std::size_t>(config.iterations));
  double best = std::numeric_limits<double>::infinity();

  for (int it = 0; it < config.iterations; ++it) {
    recon.zero_grads();
    const nn::Tensor x = recon.forward(z0, /*training=*/true);
    const nn::Tensor fx = features.forward(x);
    if (!fx.same_shape(target_feat))
      throw std::runtime_error("invert_features: feature shape changed under reconstruction");

    // Mean squared embedding distance and its gradient.
    const double inv_n = 1.0 / static_cast<double>(fx.size());
    double obj = 0.0;
    nn::Tensor grad_feat(fx.n, fx.c, fx.h, fx.w);
    for (std::size_t i = 0; i < fx.data.size(); ++i) {
      const double d = fx.data[i] - target_feat.data[i];
      obj += d * d * inv_n;
      grad_feat.data[i] = 2.0 * d * inv_n;
    }
    if (!std::isfinite(obj))
      throw std::runtime_error("invert_features: non-finite objective at iteration " +
                               std::to_string(it));
    result.trace.push_back(obj);
    if (obj < best) {
      best = obj;
      result.image = tensor_to_image(x, target.source_id);
    }
    if (it + 1 == config.iterations) result.last_image = tensor_to_image(x, target.source_id);

    recon.backward(features.backward(grad_feat));
    nn::Vec params = recon.params();
    adam.step(params, recon.grads());
    recon.set_params(params);
  }
  result.final_objective = best;
  return result;
}

double perceptual_distance(const Image& a, const Image& b, contrast::Encoder& metric_encoder) {
  if (!a.same_shape(b)) throw std::invalid_argument("perceptual_distance: dimension mismatch");
  const nn::Tensor ta = contrast::batch_to_tensor(std::vector<Image>{a});
  const nn::Tensor tb = contrast::batch_to_tensor(std::vector<Image>{b});
  const std::vector<nn::Tensor> fa = metric_encoder.block_maps(ta, /*training=*/false);
  const std::vector<nn::Tensor> fb = metric_encoder.block_maps(tb, /*training=*/false);
  double total = 0.0;
  for (std::size_t l = 0; l < fa.size(); ++l) {
    double ss = 0.0;
    for (std::size_t i = 0; i < fa[l].data.size(); ++i) {
      const double d = fa[l].data[i] - fb[l].data[i];
      ss += d * d;
    }
    total += std::sqrt(ss) / std::sqrt(static_cast<double>(fa[l].data.size()));
  }
  return total;
}

std::string ReconstructionReport::to_csv() const {
  std::ostringstream out;
  out.imbue(std::locale::classic());
  out.precision(17);
  out << "image,encoder,distance\n";
  for (const auto& row : rows)
    out << row.image_id << "," << row.encoder_name << "," << row.distance << "\n";
  return out.str();
}

ReconstructionReport reconstruction_report(
    const std::vector<Image>& images,
    const std::vector<std::pair<std::string, contrast::Encoder*>>& encoders,
    const InversionConfig& config) {
  if (images.empty() || encoders.empty())
    throw std::invalid_argument("reconstruction_report: need at least one image and encoder");
  ReconstructionReport report;
  for (const auto& [name, encoder] : encoders) {
    double mean = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const FeatureTransform f = encoder_features(*encoder);
      const ReconstructionResult res = invert_features(f, images[i], config);
      const double dist = perceptual_distance(images[i], res.image, *encoder);
      const std::string id =
          images[i].source_id.empty() ? "image_" + std::to_string(i) : images[i].source_id;
      report.rows.push_back({id, name, dist});
      mean += dist;
    }
    report.encoder_means.emplace_back(name, mean / static_cast<double>(images.size()));
  }
  return report;
}

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: dimension mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace exemplar::inversion
