#include "exemplar/harness.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "exemplar/checkpoint.hpp"
#include "exemplar/eval.hpp"
#include "exemplar/inversion.hpp"
#include "exemplar/landmark.hpp"
#include "exemplar/plot.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace exemplar::harness {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string metrics_to_csv(const std::vector<MetricRow>& rows) {
  std::string out = "epoch,step,metric,value\n";
  for (const auto& r : rows)
    out += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + r.metric + "," +
           fmt_double(r.value) + "\n";
  return out;
}

void RunRecord::write(const std::string& dir) const {
  fs::create_directories(dir);
  write_text_file((fs::path(dir) / "metrics.csv").string(), metrics_to_csv(metrics));

  json j;
  j["seed"] = seed;
  j["run_dir"] = run_dir;
  j["config"] = config_text;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["final_evals"] = final_evals;
  j["artifacts"] = artifacts;
  json rows = json::array();
  for (const auto& r : metrics) rows.push_back({r.epoch, r.step, r.metric, r.value});
  j["metrics"] = rows;
  write_text_file((fs::path(dir) / "record.json").string(), j.dump(2) + "\n");
}

RunRecord RunRecord::load(const std::string& dir) {
  const json j = json::parse(read_text_file((fs::path(dir) / "record.json").string()));
  RunRecord rec;
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.run_dir = j.at("run_dir");
  rec.config_text = j.at("config");
  rec.wall_clock_seconds = j.at("wall_clock_seconds");
  rec.final_evals = j.at("final_evals").get<std::map<std::string, double>>();
  rec.artifacts = j.at("artifacts").get<std::vector<std::string>>();
  for (const auto& row : j.at("metrics"))
    rec.metrics.push_back({row.at(0).get<int>(), row.at(1).get<long>(),
                           row.at(2).get<std::string>(), row.at(3).get<double>()});
  return rec;
}

std::string resolve_output_dir(const std::string& configured) {
  if (const char* root = std::getenv(kOutputRootEnv); root && *root)
    return (fs::path(root) / configured).string();
  return configured;
}

data::LabeledImageSet make_train_set(const DataConfig& data, std::uint64_t seed) {
  if (data.source == "synthetic")
    return data::make_synthetic_dataset(data.n_classes, data.per_class, data.image_size,
                                        Rng(seed).split(101).seed());
  if (data.source == "directory")
    return data::load_dataset(data.path, data::DatasetFormat::DirectoryPerClass);
  return data::load_dataset(data.path, data::DatasetFormat::ManifestFile);
}

data::LabeledImageSet make_test_set(const DataConfig& data, std::uint64_t seed) {
  if (data.source == "synthetic")
    return data::make_synthetic_dataset(data.n_classes, data.test_per_class, data.image_size,
                                        Rng(seed).split(202).seed());
  if (!data.test_path.empty()) {
    const auto fmt = data.source == "directory" ? data::DatasetFormat::DirectoryPerClass
                                                : data::DatasetFormat::ManifestFile;
    return data::load_dataset(data.test_path, fmt);
  }
  // Fall back to the training set (in-distribution readout on seen images).
  return make_train_set(data, seed);
}

namespace {

nn::Tensor whole_set_tensor(const data::LabeledImageSet& set) {
  return contrast::batch_to_tensor(set.images);
}

}  // namespace

double probe_accuracy(contrast::Encoder& encoder, const data::LabeledImageSet& train,
                      const data::LabeledImageSet& test, const ProbeSettings& settings) {
  const nn::Mat train_feats = encoder.features(whole_set_tensor(train), /*training=*/false);
  const nn::Mat test_feats = encoder.features(whole_set_tensor(test), /*training=*/false);
  eval::ProbeConfig pc;
  pc.epochs = settings.epochs;
  pc.lr = settings.lr;
  return eval::linear_probe(train_feats, train.labels, test_feats, test.labels, pc);
}

namespace {

// ---- per-kind experiment bodies, one seed each ----------------------------

void add_artifact(RunRecord& rec, const std::string& path) { rec.artifacts.push_back(path); }

contrast::TrainState pretrain_once(const ExperimentConfig& cfg, std::uint64_t seed,
                                   const data::LabeledImageSet& train, RunRecord& rec,
                                   bool record_metrics = true) {
  contrast::BackboneSpec backbone = cfg.backbone;
  backbone.input_size = cfg.data.image_size;
  backbone.n_classes =
      cfg.contrast.variant == contrast::Variant::CrossEntropy ? train.num_classes() : 0;
  auto state = contrast::init_train_state(backbone, cfg.contrast, seed, train.size());
  const auto pipeline = data::pipeline_stage(cfg.data.pipeline_level, cfg.data.pipeline_mode,
                                             cfg.data.image_size);
  for (int e = 0; e < cfg.contrast.epochs; ++e) {
    const auto metrics = contrast::train_epoch(state, train, pipeline);
    if (record_metrics)
      rec.metrics.push_back({e, state.global_step, "train_loss", metrics.mean_loss});
  }
  return state;
}

void run_pretrain(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& dir,
                  RunRecord& rec) {
  const auto train = make_train_set(cfg.data, seed);
  auto state = pretrain_once(cfg, seed, train, rec);
  const std::string ckpt_dir = (fs::path(dir) / "checkpoint").string();
  contrast::save_checkpoint(ckpt_dir, state);
  add_artifact(rec, (fs::path(ckpt_dir) / "manifest.json").string());
  rec.final_evals["train_loss"] = rec.metrics.empty() ? 0.0 : rec.metrics.back().value;
}

void run_linear_probe(const ExperimentConfig& cfg, std::uint64_t seed, const std::string&,
                      RunRecord& rec) {
  auto state = contrast::load_checkpoint(cfg.probe.checkpoint);
  const auto train = make_train_set(cfg.data, seed);
  const auto test = make_test_set(cfg.data, seed);
  const double acc = probe_accuracy(state.query, train, test, cfg.probe);
  rec.metrics.push_back({0, 0, "probe_acc", acc});
  rec.final_evals["probe_acc"] = acc;
}

void run_few_shot(const ExperimentConfig& cfg, std::uint64_t seed, const std::string&,
                  RunRecord& rec) {
  const auto dataset = make_train_set(cfg.data, seed);
  contrast::BackboneSpec backbone = cfg.backbone;
  backbone.input_size = cfg.data.image_size;

  std::optional<contrast::TrainState> loaded;
  std::optional<contrast::Encoder> random_encoder;
  contrast::Encoder* encoder = nullptr;
  if (cfg.few_shot.encoder == "checkpoint") {
    loaded.emplace(contrast::load_checkpoint(cfg.few_shot.checkpoint));
    encoder = &loaded->query;
  } else {
    random_encoder.emplace(backbone, Rng(seed).split(7).seed());
    encoder = &random_encoder.value();
  }

  eval::FewShotConfig fsc;
  fsc.n_way = cfg.few_shot.n_way;
  fsc.k_shot = cfg.few_shot.k_shot;
  fsc.n_query = cfg.few_shot.n_query;
  fsc.rounds = cfg.few_shot.rounds;
  fsc.lr_grid = cfg.few_shot.lr_grid;
  fsc.validation_episodes = cfg.few_shot.validation_episodes;
  fsc.seed = Rng(seed).split(8).seed();

  const auto result =
      eval::few_shot_eval(eval::encoder_features(*encoder), dataset, cfg.few_shot.episodes, fsc);
  rec.metrics.push_back({0, 0, "fewshot_mean", result.mean});
  rec.metrics.push_back({0, 0, "fewshot_half_width", result.half_width});
  rec.final_evals["fewshot_mean"] = result.mean;
  rec.final_evals["fewshot_half_width"] = result.half_width;
}

void run_landmark(const ExperimentConfig& cfg, std::uint64_t seed, const std::string&,
                  RunRecord& rec) {
  const int size = cfg.data.image_size;
  const auto all = data::make_synthetic_landmarks(
      cfg.landmark.n_images + cfg.landmark.n_test_images, size, Rng(seed).split(301).seed());

  contrast::BackboneSpec backbone = cfg.backbone;
  backbone.input_size = size;
  std::optional<contrast::TrainState> loaded;
  std::optional<contrast::Encoder> random_encoder;
  contrast::Encoder* encoder = nullptr;
  if (cfg.landmark.encoder == "checkpoint") {
    loaded.emplace(contrast::load_checkpoint(cfg.landmark.checkpoint));
    encoder = &loaded->query;
  } else {
    random_encoder.emplace(backbone, Rng(seed).split(9).seed());
    encoder = &random_encoder.value();
  }

  // Frozen-backbone feature maps for the whole corpus.
  const nn::Tensor images = contrast::batch_to_tensor(all.images);
  const nn::Tensor maps = encoder->feature_map(images, /*training=*/false);
  const int n_train = cfg.landmark.n_images;
  const int n_test = cfg.landmark.n_test_images;

  auto slice = [&](int from, int count) {
    nn::Tensor t(count, maps.c, maps.h, maps.w);
    const std::size_t per_sample = static_cast<std::size_t>(maps.c) * maps.plane();
    std::copy_n(maps.data.begin() + static_cast<std::ptrdiff_t>(per_sample * static_cast<std::size_t>(from)),
                static_cast<std::ptrdiff_t>(per_sample * static_cast<std::size_t>(count)),
                t.data.begin());
    return t;
  };
  const nn::Tensor train_maps = slice(0, n_train);
  const nn::Tensor test_maps = slice(n_train, n_test);

  // Coordinates are regressed in units of image size.
  nn::Mat train_targets(n_train, 10), test_targets(n_test, 10);
  for (int i = 0; i < n_train + n_test; ++i)
    for (int k = 0; k < 10; ++k) {
      if (i < n_train) train_targets(i, k) = all.coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] / size;
      else test_targets(i - n_train, k) = all.coords[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] / size;
    }

  eval::LandmarkHead head(maps.c, maps.h, maps.w, 5, cfg.landmark.reduced_channels,
                          Rng(seed).split(10).seed());
  nn::Adam opt(cfg.landmark.lr);
  for (int e = 0; e < cfg.landmark.epochs; ++e) {
    head.zero_grads();
    const nn::Mat pred = head.forward(train_maps, /*training=*/true);
    const nn::Mat diff = pred - train_targets;
    const double mse = diff.squaredNorm() / static_cast<double>(diff.size());
    head.backward(2.0 * diff / static_cast<double>(diff.size()));
    nn::Vec params = head.params();
    opt.step(params, head.grads());
    head.set_params(params);
    rec.metrics.push_back({e, e, "landmark_train_mse", mse});
  }

  // Inter-ocular-normalized test error.
  const nn::Mat pred = head.forward(test_maps, /*training=*/false);
  double err = 0.0;
  for (int i = 0; i < n_test; ++i) {
    nn::Mat scaled = pred * size;
    const auto pred_set = eval::coords_to_landmarks(scaled, i, all.inter_ocular[static_cast<std::size_t>(n_train + i)]);
    eval::LandmarkSet gt_set;
    gt_set.coords = nn::Mat(5, 2);
    for (int l = 0; l < 5; ++l) {
      gt_set.coords(l, 0) = all.coords[static_cast<std::size_t>(n_train + i)][static_cast<std::size_t>(2 * l)];
      gt_set.coords(l, 1) = all.coords[static_cast<std::size_t>(n_train + i)][static_cast<std::size_t>(2 * l + 1)];
    }
    gt_set.inter_ocular = all.inter_ocular[static_cast<std::size_t>(n_train + i)];
    err += eval::landmark_error(pred_set, gt_set);
  }
  err /= n_test;
  rec.metrics.push_back({cfg.landmark.epochs, cfg.landmark.epochs, "landmark_error", err});
  rec.final_evals["landmark_error"] = err;
}

// Smooth multi-blob targets for inversion demos.
Image smooth_target(int size, std::uint64_t seed) {
  Rng rng(seed);
  Image img(size, size, 3);
  const int blobs = 3;
  std::vector<double> cx(blobs), cy(blobs), sigma(blobs);
  std::vector<std::array<double, 3>> color(blobs);
  for (int b = 0; b < blobs; ++b) {
    cx[b] = rng.uniform(0.2, 0.8) * size;
    cy[b] = rng.uniform(0.2, 0.8) * size;
    sigma[b] = rng.uniform(0.15, 0.3) * size;
    color[b] = {rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)};
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = 0.1;
        for (int b = 0; b < blobs; ++b) {
          const double d2 = (x - cx[b]) * (x - cx[b]) + (y - cy[b]) * (y - cy[b]);
          v += color[b][static_cast<std::size_t>(c)] * std::exp(-d2 / (2 * sigma[b] * sigma[b]));
        }
        img.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
  img.source_id = "smooth_" + std::to_string(seed);
  return img;
}

inversion::ReconstructorSpec spec_from_setting(const std::string& setting) {
  if (setting == "default") return inversion::default_reconstructor_spec();
  if (setting == "small") return inversion::small_reconstructor_spec();
  return inversion::ReconstructorSpec::parse(setting);
}

void run_invert(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& dir,
                RunRecord& rec) {
  contrast::BackboneSpec backbone = cfg.backbone;
  backbone.input_size = cfg.data.image_size;

  std::optional<contrast::TrainState> loaded;
  std::optional<contrast::Encoder> random_encoder;
  contrast::Encoder* encoder = nullptr;
  std::string encoder_name = "identity";
  if (cfg.invert.encoder == "checkpoint") {
    loaded.emplace(contrast::load_checkpoint(cfg.invert.checkpoint));
    encoder = &loaded->query;
    encoder_name = "checkpoint";
  } else if (cfg.invert.encoder == "random") {
    random_encoder.emplace(backbone, Rng(seed).split(11).seed());
    encoder = &random_encoder.value();
    encoder_name = "random";
  }

  inversion::InversionConfig icfg;
  icfg.spec = spec_from_setting(cfg.invert.spec);
  icfg.iterations = cfg.invert.iterations;
  icfg.lr = cfg.invert.lr;
  icfg.noise_low = cfg.invert.noise_low;
  icfg.noise_high = cfg.invert.noise_high;

  inversion::ReconstructionReport report;
  json manifest;
  manifest["encoder"] = encoder_name;
  manifest["spec"] = icfg.spec.to_string();
  manifest["iterations"] = icfg.iterations;
  manifest["lr"] = icfg.lr;
  json per_image = json::array();

  for (int i = 0; i < cfg.invert.n_images; ++i) {
    const Image target = smooth_target(cfg.data.image_size, Rng(seed).split(400 + static_cast<std::uint64_t>(i)).seed());
    icfg.seed = Rng(seed).split(500 + static_cast<std::uint64_t>(i)).seed();
    const auto features =
        encoder ? inversion::encoder_features(*encoder) : inversion::identity_features();
    const auto result = inversion::invert_features(features, target, icfg);

    const std::string target_path = (fs::path(dir) / ("target_" + std::to_string(i) + ".png")).string();
    const std::string recon_path = (fs::path(dir) / ("recon_" + std::to_string(i) + ".png")).string();
    write_image(target_path, target);
    write_image(recon_path, result.image);
    add_artifact(rec, target_path);
    add_artifact(rec, recon_path);

    rec.metrics.push_back({0, i, "final_objective", result.final_objective});
    rec.metrics.push_back({0, i, "psnr", inversion::psnr(target, result.image)});
    if (encoder) {
      const double dist = inversion::perceptual_distance(target, result.image, *encoder);
      report.rows.push_back({target.source_id, encoder_name, dist});
      rec.metrics.push_back({0, i, "perceptual_distance", dist});
    }
    per_image.push_back({{"image", target.source_id},
                         {"target", target_path},
                         {"reconstruction", recon_path},
                         {"final_objective", result.final_objective}});

    // Objective trace as its own artifact.
    std::string trace = "iteration,objective\n";
    for (std::size_t t = 0; t < result.trace.size(); ++t)
      trace += std::to_string(t) + "," + fmt_double(result.trace[t]) + "\n";
    const std::string trace_path = (fs::path(dir) / ("trace_" + std::to_string(i) + ".csv")).string();
    write_text_file(trace_path, trace);
    add_artifact(rec, trace_path);
  }

  if (!report.rows.empty()) {
    double mean = 0.0;
    for (const auto& row : report.rows) mean += row.distance;
    report.encoder_means.emplace_back(encoder_name, mean / static_cast<double>(report.rows.size()));
    const std::string report_path = (fs::path(dir) / "report.csv").string();
    write_text_file(report_path, report.to_csv());
    add_artifact(rec, report_path);
    rec.final_evals["mean_perceptual_distance"] = report.encoder_means.back().second;
  }
  manifest["images"] = per_image;
  const std::string manifest_path = (fs::path(dir) / "inversion_manifest.json").string();
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  add_artifact(rec, manifest_path);
}

void run_diagnose(const ExperimentConfig& cfg, std::uint64_t, const std::string& dir,
                  RunRecord& rec) {
  const auto dets = diagnose::load_detections_csv(cfg.diagnose.detections);
  const auto gts = diagnose::load_ground_truth_csv(cfg.diagnose.ground_truth);
  diagnose::SimilarityMap sim;
  if (!cfg.diagnose.similarity.empty()) sim = diagnose::SimilarityMap::load(cfg.diagnose.similarity);
  const diagnose::DiagnoseThresholds thresholds{cfg.diagnose.weak_iou, cfg.diagnose.correct_iou};
  const auto dist = diagnose::top_fp_distribution(dets, gts, sim, thresholds);

  const std::string csv_path = (fs::path(dir) / "fp_fractions.csv").string();
  write_text_file(csv_path, diagnose::distributions_to_csv(dist));
  add_artifact(rec, csv_path);

  const char* names[] = {"loc", "sim", "oth", "bg"};
  for (const auto& [cat, d] : dist) {
    for (int k = 0; k < 4; ++k)
      rec.metrics.push_back({0, cat, std::string("fp_") + names[k], d.fractions[static_cast<std::size_t>(k)]});
    if (!d.empty()) {
      const Image pie = plot::pie_chart(
          {"Loc", "Sim", "Oth", "BG"},
          {d.fractions[0], d.fractions[1], d.fractions[2], d.fractions[3]},
          "FP types category " + std::to_string(cat));
      const std::string pie_path =
          (fs::path(dir) / ("fp_pie_cat" + std::to_string(cat) + ".png")).string();
      write_image(pie_path, pie);
      add_artifact(rec, pie_path);
    }
  }
}

void run_ablate_augmentations(const ExperimentConfig& cfg, std::uint64_t seed,
                              const std::string& dir, RunRecord& rec) {
  const auto train = make_train_set(cfg.data, seed);
  const auto test = make_test_set(cfg.data, seed);
  std::string table = "level,probe_acc,final_train_loss\n";
  for (int level : cfg.ablate.levels) {
    ExperimentConfig sub = cfg;
    sub.data.pipeline_level = level;
    RunRecord scratch;
    auto state = pretrain_once(sub, seed, train, scratch);
    const double acc = probe_accuracy(state.query, train, test, cfg.probe);
    const double final_loss = scratch.metrics.empty() ? 0.0 : scratch.metrics.back().value;
    rec.metrics.push_back({level, 0, "probe_acc", acc});
    rec.metrics.push_back({level, 0, "final_train_loss", final_loss});
    table += std::to_string(level) + "," + fmt_double(acc) + "," + fmt_double(final_loss) + "\n";
  }
  const std::string table_path = (fs::path(dir) / "augmentation_ablation.csv").string();
  write_text_file(table_path, table);
  add_artifact(rec, table_path);
}

void run_ablate_tau_k(const ExperimentConfig& cfg, std::uint64_t seed, const std::string& dir,
                      RunRecord& rec) {
  const auto train = make_train_set(cfg.data, seed);
  const auto test = make_test_set(cfg.data, seed);
  std::string table = "tau,queue_capacity,probe_acc\n";
  int row = 0;
  for (double tau : cfg.ablate.taus) {
    for (int k : cfg.ablate.queue_capacities) {
      ExperimentConfig sub = cfg;
      sub.contrast.tau = tau;
      sub.contrast.queue_capacity = k;
      RunRecord scratch;
      auto state = pretrain_once(sub, seed, train, scratch);
      const double acc = probe_accuracy(state.query, train, test, cfg.probe);
      char metric[96];
      std::snprintf(metric, sizeof(metric), "probe_acc tau=%g k=%d", tau, k);
      rec.metrics.push_back({row, 0, metric, acc});
      table += fmt_double(tau) + "," + std::to_string(k) + "," + fmt_double(acc) + "\n";
      ++row;
    }
  }
  const std::string table_path = (fs::path(dir) / "tau_k_ablation.csv").string();
  write_text_file(table_path, table);
  add_artifact(rec, table_path);
}

}  // namespace

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const IniFile* source) {
  config.validate(source);
  const std::string out_root = resolve_output_dir(config.output);
  fs::create_directories(out_root);

  std::vector<RunRecord> records;
  for (std::uint64_t seed : config.seeds) {
    const std::string dir = (fs::path(out_root) / ("seed_" + std::to_string(seed))).string();
    fs::create_directories(dir);

    RunRecord rec;
    rec.seed = seed;
    rec.run_dir = dir;
    rec.config_text = config.serialize();
    const auto t0 = std::chrono::steady_clock::now();

    switch (config.kind) {
      case ExperimentKind::Pretrain: run_pretrain(config, seed, dir, rec); break;
      case ExperimentKind::LinearProbe: run_linear_probe(config, seed, dir, rec); break;
      case ExperimentKind::FewShot: run_few_shot(config, seed, dir, rec); break;
      case ExperimentKind::Landmark: run_landmark(config, seed, dir, rec); break;
      case ExperimentKind::Invert: run_invert(config, seed, dir, rec); break;
      case ExperimentKind::Diagnose: run_diagnose(config, seed, dir, rec); break;
      case ExperimentKind::AblateAugmentations:
        run_ablate_augmentations(config, seed, dir, rec);
        break;
      case ExperimentKind::AblateTauK: run_ablate_tau_k(config, seed, dir, rec); break;
    }

    for (const auto& m : rec.metrics)
      if (!std::isfinite(m.value))
        throw contrast::NumericError("non-finite metric '" + m.metric + "' in run " + dir);

    rec.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.write(dir);
    rec.artifacts.push_back((fs::path(dir) / "metrics.csv").string());
    rec.artifacts.push_back((fs::path(dir) / "record.json").string());
    for (const auto& a : rec.artifacts)
      if (!fs::exists(a)) throw std::runtime_error("recorded artifact missing on disk: " + a);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ComparisonRow> compare_variants(const std::vector<ExperimentConfig>& configs,
                                            const std::vector<std::string>& names,
                                            const std::vector<std::uint64_t>& seeds,
                                            const std::string& output_dir) {
  if (configs.empty() || seeds.empty())
    throw ConfigError("compare_variants: need at least one config and one seed");
  if (names.size() != configs.size())
    throw ConfigError("compare_variants: name/config count mismatch");
  for (std::size_t i = 1; i < configs.size(); ++i) {
    if (!(configs[i].data == configs[0].data))
      throw ConfigError("compare_variants: dataset settings differ between configs");
    if (configs[i].contrast.epochs != configs[0].contrast.epochs ||
        configs[i].contrast.batch_size != configs[0].contrast.batch_size)
      throw ConfigError("compare_variants: training budgets differ between configs");
  }

  const std::string out = resolve_output_dir(output_dir);
  fs::create_directories(out);

  std::vector<ComparisonRow> rows;
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const ExperimentConfig& cfg = configs[ci];
    std::vector<double> accs;
    for (std::uint64_t seed : seeds) {
      const auto train = make_train_set(cfg.data, seed);
      const auto test = make_test_set(cfg.data, seed);
      RunRecord scratch;
      auto state = pretrain_once(cfg, seed, train, scratch);
      accs.push_back(probe_accuracy(state.query, train, test, cfg.probe));
    }
    ComparisonRow row;
    row.name = names[ci];
    row.variant = contrast::variant_name(cfg.contrast.variant);
    row.n_seeds = static_cast<int>(seeds.size());
    if (accs.size() >= 2) {
      const auto ci_res = eval::confidence_interval(accs);
      row.mean = ci_res.mean;
      row.half_width = ci_res.half_width;
    } else {
      row.mean = accs[0];
      row.half_width = 0.0;
    }
    rows.push_back(std::move(row));
  }

  // Ranked table, best first.
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rows[a].mean > rows[b].mean; });

  std::string csv = "name,variant,mean,half_width,n_seeds\n";
  std::vector<std::string> bar_names;
  std::vector<double> bar_values, bar_errors;
  for (std::size_t i : order) {
    csv += rows[i].name + "," + rows[i].variant + "," + fmt_double(rows[i].mean) + "," +
           fmt_double(rows[i].half_width) + "," + std::to_string(rows[i].n_seeds) + "\n";
    bar_names.push_back(rows[i].name);
    bar_values.push_back(rows[i].mean);
    bar_errors.push_back(rows[i].half_width);
  }
  write_text_file((fs::path(out) / "comparison.csv").string(), csv);
  write_image((fs::path(out) / "comparison.png").string(),
              plot::bar_chart(bar_names, bar_values, bar_errors, "Linear probe accuracy"));
  return rows;
}

std::vector<std::string> emit_plots(const std::string& run_dir) {
  std::vector<RunRecord> records;
  if (fs::exists(fs::path(run_dir) / "record.json"))
    records.push_back(RunRecord::load(run_dir));
  if (fs::exists(run_dir))
    for (const auto& e : fs::directory_iterator(run_dir))
      if (e.is_directory() && fs::exists(e.path() / "record.json"))
        records.push_back(RunRecord::load(e.path().string()));
  if (records.empty())
    throw std::runtime_error("emit_plots: no run records under " + run_dir);
  std::sort(records.begin(), records.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.seed < b.seed; });

  std::vector<std::string> written;
  auto save = [&](const std::string& name, const Image& img) {
    const std::string path = (fs::path(run_dir) / name).string();
    write_image(path, img);
    written.push_back(path);
  };

  // Training curves.
  std::vector<plot::Series> loss_series;
  for (const auto& rec : records) {
    plot::Series s;
    s.name = "seed " + std::to_string(rec.seed);
    for (const auto& m : rec.metrics)
      if (m.metric == "train_loss") {
        s.xs.push_back(m.epoch);
        s.ys.push_back(m.value);
      }
    if (!s.xs.empty()) loss_series.push_back(std::move(s));
  }
  if (!loss_series.empty())
    save("training_curve.png", plot::line_chart(loss_series, "Training loss", "epoch", "loss"));

  // Augmentation / tau-k ablation curves.
  std::vector<plot::Series> acc_series;
  for (const auto& rec : records) {
    plot::Series s;
    s.name = "seed " + std::to_string(rec.seed);
    for (const auto& m : rec.metrics)
      if (m.metric == "probe_acc" && records[0].metrics.size() > 1) {
        s.xs.push_back(m.epoch);
        s.ys.push_back(m.value);
      }
    if (s.xs.size() > 1) acc_series.push_back(std::move(s));
  }
  if (!acc_series.empty())
    save("ablation_curve.png",
         plot::line_chart(acc_series, "Probe accuracy", "stage", "accuracy"));

  // FP pies.
  for (const auto& rec : records) {
    std::map<int, std::array<double, 4>> per_cat;
    for (const auto& m : rec.metrics) {
      int idx = -1;
      if (m.metric == "fp_loc") idx = 0;
      else if (m.metric == "fp_sim") idx = 1;
      else if (m.metric == "fp_oth") idx = 2;
      else if (m.metric == "fp_bg") idx = 3;
      if (idx >= 0) per_cat[static_cast<int>(m.step)][static_cast<std::size_t>(idx)] = m.value;
    }
    for (const auto& [cat, f] : per_cat) {
      double total = f[0] + f[1] + f[2] + f[3];
      if (total <= 0.0) continue;
      save("fp_pie_cat" + std::to_string(cat) + "_seed" + std::to_string(rec.seed) + ".png",
           plot::pie_chart({"Loc", "Sim", "Oth", "BG"}, {f[0], f[1], f[2], f[3]},
                           "FP types category " + std::to_string(cat)));
    }
  }

  // Inversion scatter: per-image perceptual distance when present, otherwise
  // the final objective.
  std::vector<plot::Series> inv_series;
  for (const auto& rec : records) {
    plot::Series dist, obj;
    for (const auto& m : rec.metrics) {
      if (m.metric == "perceptual_distance") {
        dist.xs.push_back(static_cast<double>(m.step));
        dist.ys.push_back(m.value);
      } else if (m.metric == "final_objective") {
        obj.xs.push_back(static_cast<double>(m.step));
        obj.ys.push_back(m.value);
      }
    }
    plot::Series& chosen = dist.xs.empty() ? obj : dist;
    if (!chosen.xs.empty()) {
      chosen.name = "seed " + std::to_string(rec.seed);
      inv_series.push_back(std::move(chosen));
    }
  }
  if (!inv_series.empty())
    save("inversion_scatter.png",
         plot::scatter_chart(inv_series, "Reconstruction distances", "image", "distance"));

  if (written.empty())
    throw std::runtime_error("emit_plots: records contain no plottable figures");
  return written;
}

}  // namespace exemplar::harness
