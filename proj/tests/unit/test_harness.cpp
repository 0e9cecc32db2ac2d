#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "exemplar/harness.hpp"

namespace fs = std::filesystem;
using namespace exemplar;
using namespace exemplar::harness;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExperimentConfig tiny_pretrain(const std::string& out) {
  ExperimentConfig c;
  c.kind = ExperimentKind::Pretrain;
  c.seeds = {4};
  c.output = out;
  c.data.n_classes = 3;
  c.data.per_class = 6;
  c.data.test_per_class = 4;
  c.data.image_size = 16;
  c.data.pipeline_level = 2;
  c.backbone.channels = {8, 16};
  c.backbone.embed_dim = 8;
  c.backbone.proj_hidden = 8;
  c.contrast.epochs = 2;
  c.contrast.batch_size = 6;
  c.contrast.queue_capacity = 32;
  c.probe.epochs = 50;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("exemplar_harness_" + name);
  fs::remove_all(dir);
  return dir;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char ch : text)
    if (ch == '\n') ++n;
  return n;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("pretrain writes a checkpoint and one metrics row per epoch") {
  const fs::path dir = fresh_dir("pretrain");
  const auto cfg = tiny_pretrain(dir.string());
  const auto records = run_experiment(cfg);
  REQUIRE(records.size() == 1);
  const fs::path seed_dir = dir / "seed_4";
  CHECK(fs::exists(seed_dir / "checkpoint" / "manifest.json"));
  const std::string csv = slurp(seed_dir / "metrics.csv");
  CHECK(count_lines(csv) == 1 + cfg.contrast.epochs);  // header + 2 epochs
  CHECK(csv.rfind("epoch,step,metric,value\n", 0) == 0);
  for (const auto& a : records[0].artifacts) CHECK(fs::exists(a));
}

TEST_CASE("repeat runs reproduce metrics.csv bit-exactly") {
  const fs::path dir1 = fresh_dir("repro1");
  const fs::path dir2 = fresh_dir("repro2");
  auto c1 = tiny_pretrain(dir1.string());
  auto c2 = tiny_pretrain(dir2.string());
  run_experiment(c1);
  run_experiment(c2);
  CHECK(slurp(dir1 / "seed_4" / "metrics.csv") == slurp(dir2 / "seed_4" / "metrics.csv"));
}

TEST_CASE("record round-trips through record.json") {
  const fs::path dir = fresh_dir("record");
  const auto records = run_experiment(tiny_pretrain(dir.string()));
  const RunRecord loaded = RunRecord::load((dir / "seed_4").string());
  CHECK(loaded.seed == records[0].seed);
  CHECK(loaded.metrics.size() == records[0].metrics.size());
  CHECK(loaded.config_text == records[0].config_text);
}

TEST_CASE("seeds fan out into independent run directories") {
  const fs::path dir = fresh_dir("fanout");
  auto cfg = tiny_pretrain(dir.string());
  cfg.seeds = {1, 2};
  cfg.contrast.epochs = 1;
  const auto records = run_experiment(cfg);
  CHECK(records.size() == 2);
  CHECK(fs::exists(dir / "seed_1" / "metrics.csv"));
  CHECK(fs::exists(dir / "seed_2" / "metrics.csv"));
  CHECK(slurp(dir / "seed_1" / "metrics.csv") != slurp(dir / "seed_2" / "metrics.csv"));
}

TEST_CASE("linear probe consumes a pretraining checkpoint") {
  const fs::path dir = fresh_dir("probe");
  auto pre = tiny_pretrain((dir / "pre").string());
  run_experiment(pre);

  ExperimentConfig probe = pre;
  probe.kind = ExperimentKind::LinearProbe;
  probe.output = (dir / "probe").string();
  probe.probe.checkpoint = (dir / "pre" / "seed_4" / "checkpoint").string();
  const auto records = run_experiment(probe);
  REQUIRE(records.size() == 1);
  const double acc = records[0].final_evals.at("probe_acc");
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
}

TEST_CASE("few-shot experiment with a random frozen encoder") {
  const fs::path dir = fresh_dir("fewshot");
  auto cfg = tiny_pretrain(dir.string());
  cfg.kind = ExperimentKind::FewShot;
  cfg.data.n_classes = 6;
  cfg.data.per_class = 8;
  cfg.few_shot.n_way = 3;
  cfg.few_shot.k_shot = 1;
  cfg.few_shot.n_query = 4;
  cfg.few_shot.episodes = 6;
  cfg.few_shot.validation_episodes = 2;
  cfg.few_shot.lr_grid = {1.0};
  const auto records = run_experiment(cfg);
  const double mean = records[0].final_evals.at("fewshot_mean");
  CHECK(mean >= 0.0);
  CHECK(mean <= 1.0);
}

TEST_CASE("landmark experiment trains the head and reports the error") {
  const fs::path dir = fresh_dir("landmark");
  auto cfg = tiny_pretrain(dir.string());
  cfg.kind = ExperimentKind::Landmark;
  cfg.data.image_size = 16;
  cfg.landmark.n_images = 12;
  cfg.landmark.n_test_images = 4;
  cfg.landmark.epochs = 3;
  cfg.landmark.reduced_channels = 8;
  const auto records = run_experiment(cfg);
  CHECK(records[0].final_evals.count("landmark_error") == 1);
  CHECK(records[0].final_evals.at("landmark_error") >= 0.0);
}

TEST_CASE("invert experiment writes reconstructions, traces and a manifest") {
  const fs::path dir = fresh_dir("invert");
  auto cfg = tiny_pretrain(dir.string());
  cfg.kind = ExperimentKind::Invert;
  cfg.data.image_size = 16;
  cfg.invert.spec = "encoder: CD8^3-C8^3\ndecoder: C8^3-CU8^3";
  cfg.invert.iterations = 8;
  cfg.invert.n_images = 2;
  const auto records = run_experiment(cfg);
  const fs::path seed_dir = dir / "seed_4";
  CHECK(fs::exists(seed_dir / "recon_0.png"));
  CHECK(fs::exists(seed_dir / "recon_1.png"));
  CHECK(fs::exists(seed_dir / "trace_0.csv"));
  CHECK(fs::exists(seed_dir / "inversion_manifest.json"));
  for (const auto& a : records[0].artifacts) CHECK(fs::exists(a));
}

TEST_CASE("diagnose experiment emits fractions and pie charts") {
  const fs::path dir = fresh_dir("diagnose");
  const fs::path inputs = dir / "inputs";
  fs::create_directories(inputs);
  std::ofstream(inputs / "dets.csv") << "image_id,category,score,x_min,y_min,x_max,y_max\n"
                                     << "a,1,0.9,0,0,10,10\n"
                                     << "a,1,0.8,5,0,15,10\n"
                                     << "a,1,0.7,50,50,60,60\n";
  std::ofstream(inputs / "gts.csv") << "image_id,category,x_min,y_min,x_max,y_max\n"
                                    << "a,1,0,0,10,10\n"
                                    << "a,1,100,100,110,110\n"
                                    << "a,1,200,200,210,210\n";
  auto cfg = tiny_pretrain(dir.string());
  cfg.kind = ExperimentKind::Diagnose;
  cfg.diagnose.detections = (inputs / "dets.csv").string();
  cfg.diagnose.ground_truth = (inputs / "gts.csv").string();
  const auto records = run_experiment(cfg);
  const fs::path seed_dir = dir / "seed_4";
  CHECK(fs::exists(seed_dir / "fp_fractions.csv"));
  CHECK(fs::exists(seed_dir / "fp_pie_cat1.png"));
  CHECK(records[0].metrics.size() >= 4);
}

TEST_CASE("augmentation ablation runs each level") {
  const fs::path dir = fresh_dir("ablate_aug");
  auto cfg = tiny_pretrain(dir.string());
  cfg.kind = ExperimentKind::AblateAugmentations;
  cfg.contrast.epochs = 1;
  cfg.ablate.levels = {1, 3};
  const auto records = run_experiment(cfg);
  int probe_rows = 0;
  for (const auto& m : records[0].metrics)
    if (m.metric == "probe_acc") ++probe_rows;
  CHECK(probe_rows == 2);
  CHECK(fs::exists(dir / "seed_4" / "augmentation_ablation.csv"));
}

TEST_CASE("tau/k ablation emits one probe row per grid cell") {
  const fs::path dir = fresh_dir("ablate_tk");
  auto cfg = tiny_pretrain(dir.string());
  cfg.kind = ExperimentKind::AblateTauK;
  cfg.contrast.epochs = 1;
  cfg.ablate.taus = {0.07, 0.1, 0.2};
  cfg.ablate.queue_capacities = {16};
  const auto records = run_experiment(cfg);
  int rows = 0;
  for (const auto& m : records[0].metrics)
    if (m.metric.rfind("probe_acc", 0) == 0) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("emit_plots renders the figures present in the records") {
  const fs::path dir = fresh_dir("plots");
  run_experiment(tiny_pretrain(dir.string()));
  const auto written = emit_plots(dir.string());
  REQUIRE_FALSE(written.empty());
  CHECK(fs::exists(dir / "training_curve.png"));
  CHECK_THROWS(emit_plots((dir / "nothing_here").string()));
}

TEST_CASE("identical variants produce identical comparison metrics") {
  const fs::path dir = fresh_dir("compare");
  auto a = tiny_pretrain((dir / "a").string());
  auto b = a;
  a.contrast.epochs = 1;
  b.contrast.epochs = 1;
  const auto rows = compare_variants({a, b}, {"first", "second"}, {1, 2}, (dir / "cmp").string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].mean == rows[1].mean);
  CHECK(rows[0].half_width == rows[1].half_width);
  CHECK(fs::exists(dir / "cmp" / "comparison.csv"));
  CHECK(fs::exists(dir / "cmp" / "comparison.png"));
}

TEST_CASE("mismatched budgets are rejected in comparisons") {
  auto a = tiny_pretrain("unused_a");
  auto b = tiny_pretrain("unused_b");
  b.contrast.epochs = a.contrast.epochs + 1;
  CHECK_THROWS_AS(compare_variants({a, b}, {"a", "b"}, {1}, "unused_out"), ConfigError);
  auto c = tiny_pretrain("unused_c");
  c.data.n_classes += 1;
  CHECK_THROWS_AS(compare_variants({a, c}, {"a", "c"}, {1}, "unused_out"), ConfigError);
}

TEST_CASE("output root environment variable re-roots runs") {
  const fs::path root = fresh_dir("envroot");
  ::setenv(kOutputRootEnv, root.string().c_str(), 1);
  auto cfg = tiny_pretrain("relative/run");
  cfg.contrast.epochs = 1;
  run_experiment(cfg);
  ::unsetenv(kOutputRootEnv);
  CHECK(fs::exists(root / "relative/run" / "seed_4" / "metrics.csv"));
}

}  // TEST_SUITE
