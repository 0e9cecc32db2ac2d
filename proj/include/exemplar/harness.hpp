#pragma once

#include <map>
#include <string>
#include <vector>

#include "exemplar/config.hpp"

namespace exemplar::harness {

// Name of the environment variable that re-roots experiment output.
inline constexpr const char* kOutputRootEnv = "EXEMPLAR_OUTPUT_ROOT";

struct MetricRow {
  int epoch = 0;
  long step = 0;
  std::string metric;
  double value = 0.0;
};

// Append-only log of one seed's run. Everything in metrics is deterministic
// given (config, seed); wall clock lives only here, never in metrics.csv.
struct RunRecord {
  std::uint64_t seed = 0;
  std::string run_dir;
  std::string config_text;
  std::vector<MetricRow> metrics;
  std::map<std::string, double> final_evals;
  double wall_clock_seconds = 0.0;
  std::vector<std::string> artifacts;

  void write(const std::string& dir) const;  // record.json + metrics.csv
  static RunRecord load(const std::string& dir);
};

// "epoch,step,metric,value" long format, full double precision.
std::string metrics_to_csv(const std::vector<MetricRow>& rows);

// Executes the configured experiment once per seed under
// <output>/seed_<seed>/. Returns one record per seed.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config,
                                      const IniFile* source = nullptr);

// Resolved output directory honoring EXEMPLAR_OUTPUT_ROOT.
std::string resolve_output_dir(const std::string& configured);

struct ComparisonRow {
  std::string name;
  std::string variant;
  double mean = 0.0;
  double half_width = 0.0;
  int n_seeds = 0;
};

// Pretrain + linear probe for every (config, seed); aggregates probe accuracy
// per config. All configs must share dataset settings and training budget.
std::vector<ComparisonRow> compare_variants(const std::vector<ExperimentConfig>& configs,
                                            const std::vector<std::string>& names,
                                            const std::vector<std::uint64_t>& seeds,
                                            const std::string& output_dir);

// Renders the figures present in a run directory's records (training curves,
// FP pies, inversion scatter, ablation curves). Errors if no records exist.
// Returns the written image paths.
std::vector<std::string> emit_plots(const std::string& run_dir);

// Shared protocol pieces (also used by the acceptance suite).
data::LabeledImageSet make_train_set(const DataConfig& data, std::uint64_t seed);
data::LabeledImageSet make_test_set(const DataConfig& data, std::uint64_t seed);
double probe_accuracy(contrast::Encoder& encoder, const data::LabeledImageSet& train,
                      const data::LabeledImageSet& test, const ProbeSettings& settings);

}  // namespace exemplar::harness
