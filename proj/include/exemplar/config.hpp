#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exemplar/augment.hpp"
#include "exemplar/diagnose.hpp"
#include "exemplar/encoder.hpp"
#include "exemplar/train.hpp"

namespace exemplar::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat INI-style text: [section] headers, key = value lines, '#' comments.
struct IniFile {
  struct Entry {
    std::string section, key, value;
    int line = 0;
  };
  std::vector<Entry> entries;
  std::string path;  // for diagnostics

  const Entry* find(const std::string& section, const std::string& key) const;
  std::string location(const std::string& section, const std::string& key) const;
};

IniFile parse_ini_text(const std::string& text, const std::string& path_for_errors = "<string>");
IniFile parse_ini_file(const std::string& path);

enum class ExperimentKind {
  Pretrain,
  LinearProbe,
  FewShot,
  Landmark,
  Invert,
  Diagnose,
  AblateAugmentations,
  AblateTauK,
};

std::string experiment_kind_name(ExperimentKind k);
ExperimentKind experiment_kind_from_name(const std::string& name);

struct DataConfig {
  std::string source = "synthetic";  // synthetic | directory | manifest
  std::string path;                  // for directory/manifest sources
  std::string test_path;             // optional held-out set for file sources
  int n_classes = 10;
  int per_class = 50;
  int test_per_class = 20;
  int image_size = 32;
  int pipeline_level = 5;
  data::PipelineMode pipeline_mode = data::PipelineMode::Unsupervised;

  bool operator==(const DataConfig&) const = default;
};

struct ProbeSettings {
  int epochs = 200;
  double lr = 0.5;
  std::string checkpoint;  // required by the linear_probe experiment

  bool operator==(const ProbeSettings&) const = default;
};

struct FewShotSettings {
  int n_way = 5;
  int k_shot = 1;
  int n_query = 15;
  int episodes = 200;
  int rounds = 100;
  std::vector<double> lr_grid = {0.1, 0.3, 1.0, 3.0};
  int validation_episodes = 20;
  std::string encoder = "random";  // random | checkpoint
  std::string checkpoint;

  bool operator==(const FewShotSettings&) const = default;
};

struct LandmarkSettings {
  int n_images = 200;
  int n_test_images = 50;
  int epochs = 60;
  double lr = 0.01;
  int reduced_channels = 128;
  std::string encoder = "random";  // random | checkpoint
  std::string checkpoint;

  bool operator==(const LandmarkSettings&) const = default;
};

struct InvertSettings {
  std::string spec = "small";  // default | small | inline block notation
  int iterations = 3000;
  double lr = 0.001;
  double noise_low = 0.0;
  double noise_high = 0.1;
  int n_images = 1;
  std::string encoder = "identity";  // identity | random | checkpoint
  std::string checkpoint;

  bool operator==(const InvertSettings&) const = default;
};

struct DiagnoseSettings {
  std::string detections;
  std::string ground_truth;
  std::string similarity;  // optional; empty means identity-only similarity
  double weak_iou = 0.1;
  double correct_iou = 0.5;

  bool operator==(const DiagnoseSettings&) const = default;
};

struct AblateSettings {
  std::vector<double> taus = {0.07, 0.1, 0.2};
  std::vector<int> queue_capacities = {1024};
  std::vector<int> levels = {1, 2, 3, 4, 5};

  bool operator==(const AblateSettings&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Pretrain;
  std::vector<std::uint64_t> seeds = {1};
  std::string output = "runs/experiment";

  DataConfig data;
  contrast::BackboneSpec backbone{.channels = {16, 32, 64, 64},
                                  .embed_dim = 64,
                                  .proj_hidden = 64};
  contrast::ContrastConfig contrast;
  ProbeSettings probe;
  FewShotSettings few_shot;
  LandmarkSettings landmark;
  InvertSettings invert;
  DiagnoseSettings diagnose;
  AblateSettings ablate;

  bool operator==(const ExperimentConfig&) const = default;

  // Canonical text form; parse(serialize(c)) == c.
  std::string serialize() const;
  static ExperimentConfig from_ini(const IniFile& ini);
  static ExperimentConfig from_file(const std::string& path);

  // Semantic checks (referenced files exist, seed list non-empty, ...);
  // throws ConfigError with file:line diagnostics where available.
  void validate(const IniFile* source = nullptr) const;
};

}  // namespace exemplar::harness
