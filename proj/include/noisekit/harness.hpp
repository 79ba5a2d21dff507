#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisekit/knn.hpp"
#include "noisekit/recover.hpp"

namespace noisekit {

inline constexpr const char* kVersion = "noisekit 0.1.0";

/// One config drives every experiment grid. Loaded from a JSON document that
/// mirrors these fields key-for-key; unknown keys are rejected.
struct ExperimentConfig {
  std::filesystem::path input_path;
  std::string target_column;
  std::optional<std::filesystem::path> kept_features_path;  // replaces importance-based selection
  double prune_threshold = 0.7;
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  KnnConfig knn;
  std::vector<double> sigma_ladder{0.015625, 0.03125, 0.0625, 0.125, 0.25};
  std::vector<Eigen::Index> train_sizes;                 // empty: full train split only
  std::optional<Eigen::Index> train_size_start;          // generates a doubling ladder instead
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};       // replicate seeds
  std::uint64_t master_seed = 0;
  RecoverabilityCriterion criterion;
  double correction_sigma = 0.25;
  bool clip_noise = false;
  bool emd_absolute = false;
  bool emit_per_sample = false;
  std::filesystem::path output_dir = "out";
  int threads = 0;  // 0: hardware concurrency

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Semantic config echo: everything that can change results. Execution
  /// knobs (threads, output_dir) are left out so identical experiments emit
  /// identical bytes no matter where or how wide they run.
  nlohmann::ordered_json to_json() const;
  void validate() const;
};

/// Doubling ladder of training-subset sizes: start, 2*start, 4*start, ...
/// with the final step clamped to `full` when doubling overshoots.
std::vector<Eigen::Index> train_size_ladder(Eigen::Index full, Eigen::Index start);

/// Grid of per-cell results from one experiment kind, plus everything needed
/// to re-emit its files: column layouts, aggregate rows and the config echo.
struct SweepReport {
  std::string kind;
  std::string version;
  std::string config_fingerprint;
  std::uint64_t master_seed = 0;
  nlohmann::ordered_json config_echo;
  std::vector<std::string> columns;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  std::vector<std::string> aggregate_columns;
  nlohmann::ordered_json aggregates = nlohmann::ordered_json::array();
  std::vector<std::string> sample_columns;
  nlohmann::ordered_json samples = nlohmann::ordered_json::array();

  nlohmann::ordered_json to_json() const;
  static SweepReport from_json(const nlohmann::json& j);
};

/// Baseline imputation accuracy: R^2 of each feature's kNN recovery on the
/// validation set, for every (feature, train_size, seed) cell.
SweepReport run_baseline_eval(const ExperimentConfig& config);

/// Feature mean |Pearson r| against all other features, paired with that
/// feature's R^2 at the smallest configured train size (seed averages).
SweepReport correlation_vs_r2(const ExperimentConfig& config);

/// Single-feature corruption trials over (sigma, train_size, seed, feature);
/// detectability per cell is the hit fraction across injected features.
SweepReport run_detection_sweep(const ExperimentConfig& config);

/// Recoverable-sample ratios over (feature, sigma, seed) at the full train
/// size, using the configured percentile criterion.
SweepReport run_recoverability_sweep(const ExperimentConfig& config);

/// Flags, corrects and scores recoverable samples per (feature, seed) at the
/// configured correction sigma; emits per-feature and pooled MAPE summaries.
SweepReport run_correction_eval(const ExperimentConfig& config);

/// Row ids of the size-z training subsample for one replicate, exactly as the
/// sweeps consume them: a prefix of that replicate's seeded permutation, so
/// the size-z subsample is always contained in the size-2z one.
std::vector<std::int64_t> subsample_row_ids(const ExperimentConfig& config,
                                            std::uint64_t replicate_seed, Eigen::Index size);

/// Writes <kind>-seed<master>.json plus tidy CSVs under `output_dir` and
/// returns the written paths. Re-running an identical config overwrites the
/// same files with byte-identical content.
std::vector<std::filesystem::path> emit_report(const SweepReport& report,
                                               const std::filesystem::path& output_dir);

/// Prunes/selects features, splits, scales and writes the subset CSVs plus
/// scaler parameters; returns the written paths.
std::vector<std::filesystem::path> run_ingest(const ExperimentConfig& config);

}  // namespace noisekit
