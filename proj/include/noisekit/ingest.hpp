#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "noisekit/feature_table.hpp"

namespace noisekit {

/// Per-column min/max fitted on one subset. Applying the transform to the
/// fitted subset maps every non-degenerate column onto [0, 1]; degenerate
/// columns (max == min) map to 0.
struct ScalerParams {
  std::vector<std::string> column_names;
  Eigen::VectorXd per_column_min;
  Eigen::VectorXd per_column_max;

  Eigen::MatrixXd transform(const Eigen::MatrixXd& values) const;
  Eigen::MatrixXd inverse_transform(const Eigen::MatrixXd& scaled) const;
};

struct DataSplit {
  FeatureTable train;
  FeatureTable validation;
  FeatureTable test;
  std::uint64_t seed = 0;
};

struct DroppedFeature {
  std::string name;     // feature removed
  std::string against;  // retained feature whose correlation triggered the drop
};

/// Pearson correlation matrix over the table's feature columns (target
/// excluded), ordered as FeatureTable::feature_names().
Eigen::MatrixXd pearson_matrix(const FeatureTable& table);

/// Greedy left-to-right correlation pruning: scanning feature columns in
/// table order, a feature is dropped iff |r| > threshold against any
/// already-retained feature. Returns the pruned table and the drop record.
std::pair<FeatureTable, std::vector<DroppedFeature>> prune_correlated(const FeatureTable& table,
                                                                      double threshold);

/// Seeded shuffle, then partition into train/validation/test. Sizes are
/// floor(r_train*n) and floor(r_val*n) with the remainder going to test,
/// which reproduces an 8:1:1 split of 71,571 rows as 57,256/7,157/7,158.
DataSplit split_dataset(const FeatureTable& table, const std::array<double, 3>& ratios,
                        std::uint64_t seed);

/// Min-max scales every column (target included) to [0, 1], fitted on and
/// applied to this same table.
std::pair<FeatureTable, ScalerParams> minmax_scale(const FeatureTable& table);

}  // namespace noisekit
