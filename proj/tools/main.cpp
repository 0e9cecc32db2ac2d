#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <sstream>

#include "exemplar/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericAbort = 3;

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::string part;
  std::istringstream ss(text);
  while (std::getline(ss, part, ',')) {
    if (!part.empty()) seeds.push_back(std::stoull(part));
  }
  return seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exemplar-based contrastive pretraining toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "experiment config (INI)")->required();

  std::vector<std::string> compare_paths;
  std::string seeds_arg = "1,2,3";
  std::string compare_out = "runs/comparison";
  auto* compare = app.add_subcommand("compare", "Compare pretraining variants by linear probe");
  compare->add_option("configs", compare_paths, "one config per variant")->required();
  compare->add_option("--seeds", seeds_arg, "comma-separated seed list");
  compare->add_option("--output", compare_out, "comparison output directory");

  std::string plot_dir;
  auto* plot = app.add_subcommand("plot", "Render figures from a run directory");
  plot->add_option("run_dir", plot_dir, "directory written by 'run'")->required();

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate a config file");
  validate->add_option("config", validate_path, "experiment config (INI)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto ini = exemplar::harness::parse_ini_file(config_path);
      const auto config = exemplar::harness::ExperimentConfig::from_ini(ini);
      const auto records = exemplar::harness::run_experiment(config, &ini);
      for (const auto& rec : records) {
        std::cout << "run seed=" << rec.seed << " dir=" << rec.run_dir;
        for (const auto& [k, v] : rec.final_evals) std::cout << " " << k << "=" << v;
        std::cout << "\n";
      }
    } else if (*compare) {
      std::vector<exemplar::harness::ExperimentConfig> configs;
      std::vector<std::string> names;
      for (const auto& path : compare_paths) {
        const auto ini = exemplar::harness::parse_ini_file(path);
        configs.push_back(exemplar::harness::ExperimentConfig::from_ini(ini));
        auto stem = std::filesystem::path(path).stem().string();
        names.push_back(stem);
      }
      const auto seeds = parse_seeds(seeds_arg);
      const auto rows =
          exemplar::harness::compare_variants(configs, names, seeds, compare_out);
      std::cout << "name,variant,mean,half_width,n_seeds\n";
      for (const auto& r : rows)
        std::cout << r.name << "," << r.variant << "," << r.mean << "," << r.half_width << ","
                  << r.n_seeds << "\n";
    } else if (*plot) {
      const auto written = exemplar::harness::emit_plots(plot_dir);
      for (const auto& p : written) std::cout << p << "\n";
    } else if (*validate) {
      const auto ini = exemplar::harness::parse_ini_file(validate_path);
      const auto config = exemplar::harness::ExperimentConfig::from_ini(ini);
      config.validate(&ini);
      std::cout << "ok: " << validate_path << "\n";
    }
  } catch (const exemplar::harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const exemplar::contrast::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumericAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
