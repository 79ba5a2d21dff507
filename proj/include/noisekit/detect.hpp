#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisekit/feature_table.hpp"
#include "noisekit/knn.hpp"

namespace noisekit {

enum class DeltaSource { base, noise };

/// Per-feature distribution of signed (imputed - observed) errors, aligned
/// with the observed table's row order.
struct DeltaDistribution {
  std::string feature;
  DeltaSource source = DeltaSource::base;
  Eigen::ArrayXd deltas;
  std::vector<std::int64_t> row_ids;

  Eigen::Index n() const { return deltas.size(); }
};

struct DetectionReport {
  std::string injected_feature;  // empty when the truth is unknown
  std::vector<std::pair<std::string, double>> per_feature_emd;
  std::string detected_feature;
  bool hit = false;
};

/// Imputes the index's target feature for every row of `observed` from the
/// row's remaining columns and records imputed - observed.
DeltaDistribution compute_delta(const NeighborIndex& index, const FeatureTable& observed,
                                DeltaSource source);

/// compute_delta for every feature. `indices` holds one index per feature,
/// all built over the same training subset; `observed` is the validation
/// table for the base source or the (noisy) test table for the noise source.
std::vector<DeltaDistribution> compute_deltas(const std::vector<NeighborIndex>& indices,
                                              const FeatureTable& observed, DeltaSource source,
                                              int threads = 1);

/// Exact Wasserstein-1 distance between the empirical distributions of two
/// samples: the integral of |F_a - F_b| over the merged support, which for
/// equal sample sizes reduces to the mean absolute difference of sorted
/// values. Handles unequal sample sizes without resampling.
double emd_1d(std::vector<double> a, std::vector<double> b);
double emd_1d(const DeltaDistribution& a, const DeltaDistribution& b);

/// Pairs base and noise distributions feature by feature, scores each pair
/// with emd_1d and flags the argmax (ties: lowest feature index) as the
/// noisy feature. With `absolute_deltas` the comparison runs on |delta|.
DetectionReport detect_noisy_feature(const std::vector<DeltaDistribution>& base,
                                     const std::vector<DeltaDistribution>& noise,
                                     const std::optional<std::string>& injected_feature = std::nullopt,
                                     bool absolute_deltas = false);

/// Fraction of reports whose detected feature matches the injected one.
double detectability_rate(const std::vector<DetectionReport>& reports);

nlohmann::ordered_json to_json(const DetectionReport& report);

}  // namespace noisekit
