#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "noisekit/errors.hpp"
#include "noisekit/harness.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::optional<std::string> features;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "Experiment config JSON")->required();
  cmd->add_option("--seed", flags.seed, "Override the master seed");
  cmd->add_option("--out", flags.out, "Override the output directory");
  cmd->add_option("--threads", flags.threads, "Worker threads (0 = hardware)");
  cmd->add_option("--features", flags.features, "Kept-feature list (one name per line)");
}

noisekit::ExperimentConfig load_config(const CommonFlags& flags) {
  noisekit::ExperimentConfig cfg = noisekit::ExperimentConfig::load(flags.config_path);
  if (flags.seed) cfg.master_seed = *flags.seed;
  if (flags.out) cfg.output_dir = *flags.out;
  if (flags.threads) cfg.threads = *flags.threads;
  if (flags.features) cfg.kept_features_path = *flags.features;
  cfg.validate();
  return cfg;
}

void print_written(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << "wrote " << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisekit: kNN noisy-feature detection, recoverability and correction sweeps"};
  app.require_subcommand(1);

  CommonFlags ingest_flags, baseline_flags, detect_flags, recover_flags, correct_flags;
  std::string report_in, report_out = "out";

  auto* ingest = app.add_subcommand("ingest", "Prune/select features, split 8:1:1, scale, write subsets");
  add_common(ingest, ingest_flags);
  auto* baseline = app.add_subcommand("baseline", "R^2 of per-feature kNN recovery across train sizes");
  add_common(baseline, baseline_flags);
  auto* detect = app.add_subcommand("detect-sweep", "Detectability over (sigma, train size, seed)");
  add_common(detect, detect_flags);
  auto* recover = app.add_subcommand("recover-sweep", "Recoverability over (feature, sigma, seed)");
  add_common(recover, recover_flags);
  auto* correct = app.add_subcommand("correct-eval", "Correction accuracy of recoverable samples");
  add_common(correct, correct_flags);
  auto* report = app.add_subcommand("report", "Re-emit CSVs from a sweep report JSON");
  report->add_option("--in", report_in, "Sweep report JSON")->required();
  report->add_option("--out", report_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      print_written(noisekit::run_ingest(load_config(ingest_flags)));
    } else if (baseline->parsed()) {
      const auto cfg = load_config(baseline_flags);
      print_written(noisekit::emit_report(noisekit::run_baseline_eval(cfg), cfg.output_dir));
      print_written(noisekit::emit_report(noisekit::correlation_vs_r2(cfg), cfg.output_dir));
    } else if (detect->parsed()) {
      const auto cfg = load_config(detect_flags);
      print_written(noisekit::emit_report(noisekit::run_detection_sweep(cfg), cfg.output_dir));
    } else if (recover->parsed()) {
      const auto cfg = load_config(recover_flags);
      print_written(noisekit::emit_report(noisekit::run_recoverability_sweep(cfg), cfg.output_dir));
    } else if (correct->parsed()) {
      const auto cfg = load_config(correct_flags);
      print_written(noisekit::emit_report(noisekit::run_correction_eval(cfg), cfg.output_dir));
    } else if (report->parsed()) {
      std::ifstream in(report_in);
      if (!in) throw noisekit::IoError("cannot open '" + report_in + "'");
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw noisekit::DataError("report is not valid JSON: " + std::string(e.what()));
      }
      print_written(noisekit::emit_report(noisekit::SweepReport::from_json(j), report_out));
    }
  } catch (const noisekit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const noisekit::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const noisekit::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
