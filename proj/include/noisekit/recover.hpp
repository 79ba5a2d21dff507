#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "noisekit/detect.hpp"
#include "noisekit/knn.hpp"
#include "noisekit/stats.hpp"

namespace noisekit {

/// A sample is worth correcting when its noisy-imputation error exceeds this
/// percentile of the baseline error distribution.
struct RecoverabilityCriterion {
  double percentile = 95.0;
  bool on_absolute = true;  // threshold and comparison on |delta|
};

struct MapeResult {
  std::map<std::int64_t, double> per_sample;  // percentage per included row
  double aggregate = 0.0;                     // mean over included rows
  std::size_t excluded = 0;                   // rows dropped for |clean| < 1e-8
};

struct RecoveryReport {
  std::string feature;
  double sigma = 0.0;
  double threshold = 0.0;
  std::vector<std::int64_t> recoverable_ids;
  double recoverability = 0.0;  // |recoverable_ids| / n_test
  std::map<std::int64_t, double> per_sample_mape;
  double aggregate_mape = 0.0;
  double fraction_under_20pct = 0.0;  // over recoverable (included) samples
  std::size_t mape_excluded = 0;
};

/// criterion.percentile-th percentile of the baseline deltas (absolute
/// values under on_absolute), linearly interpolated between order statistics.
double baseline_threshold(const DeltaDistribution& base, const RecoverabilityCriterion& criterion);

/// Flags rows whose noise delta strictly exceeds the threshold; returns the
/// flagged row ids plus the flagged fraction of the test set.
std::pair<std::vector<std::int64_t>, double> flag_recoverable(const DeltaDistribution& noise,
                                                              double threshold,
                                                              const RecoverabilityCriterion& criterion);

/// Re-imputes `feature` for the flagged rows of the noisy test table from
/// their remaining (clean) columns. Returns row id -> corrected value.
std::map<std::int64_t, double> correct_samples(const NeighborIndex& index, const FeatureTable& noisy_test,
                                               const std::string& feature,
                                               const std::vector<std::int64_t>& ids);

/// Mean absolute percentage error, 100*|corrected - clean| / |clean| per
/// sample; rows with |clean| < 1e-8 are excluded from both maps and counted.
MapeResult mape(const std::map<std::int64_t, double>& corrected,
                const std::map<std::int64_t, double>& clean);

nlohmann::ordered_json to_json(const RecoveryReport& report);

}  // namespace noisekit
