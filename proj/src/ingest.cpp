#include "noisekit/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "noisekit/errors.hpp"
#include "noisekit/stats.hpp"

namespace noisekit {

Eigen::MatrixXd ScalerParams::transform(const Eigen::MatrixXd& values) const {
  if (values.cols() != per_column_min.size()) throw DataError("scaler/table width mismatch");
  Eigen::MatrixXd out(values.rows(), values.cols());
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const double span = per_column_max(j) - per_column_min(j);
    if (span == 0.0)
      out.col(j).setZero();
    else
      out.col(j) = (values.col(j).array() - per_column_min(j)) / span;
  }
  return out;
}

Eigen::MatrixXd ScalerParams::inverse_transform(const Eigen::MatrixXd& scaled) const {
  if (scaled.cols() != per_column_min.size()) throw DataError("scaler/table width mismatch");
  Eigen::MatrixXd out(scaled.rows(), scaled.cols());
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
    const double span = per_column_max(j) - per_column_min(j);
    out.col(j) = scaled.col(j).array() * span + per_column_min(j);
  }
  return out;
}

Eigen::MatrixXd pearson_matrix(const FeatureTable& table) {
  const auto idx = table.feature_indices();
  Eigen::MatrixXd features(table.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j)
    features.col(static_cast<Eigen::Index>(j)) = table.values().col(idx[j]);
  return pearson_matrix(features);
}

std::pair<FeatureTable, std::vector<DroppedFeature>> prune_correlated(const FeatureTable& table,
                                                                      double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("prune threshold must lie in (0, 1]");
  const Eigen::MatrixXd corr = pearson_matrix(table);
  const auto names = table.feature_names();

  std::vector<std::size_t> retained;
  std::vector<DroppedFeature> dropped;
  for (std::size_t j = 0; j < names.size(); ++j) {
    bool keep = true;
    for (std::size_t r : retained) {
      if (std::abs(corr(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j))) > threshold) {
        dropped.push_back({names[j], names[r]});
        keep = false;
        break;
      }
    }
    if (keep) retained.push_back(j);
  }

  std::vector<std::string> kept_names;
  kept_names.reserve(retained.size());
  for (std::size_t r : retained) kept_names.push_back(names[r]);
  return {table.select_features(kept_names), std::move(dropped)};
}

DataSplit split_dataset(const FeatureTable& table, const std::array<double, 3>& ratios,
                        std::uint64_t seed) {
  for (double r : ratios)
    if (!(r > 0.0)) throw ConfigError("split ratios must be positive");
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");

  const Eigen::Index n = table.rows();
  const auto n_train = static_cast<Eigen::Index>(std::floor(ratios[0] * static_cast<double>(n)));
  const auto n_val = static_cast<Eigen::Index>(std::floor(ratios[1] * static_cast<double>(n)));
  const Eigen::Index n_test = n - n_train - n_val;
  if (n_train < 1 || n_val < 1 || n_test < 1) throw DataError("split would leave an empty subset");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto slice = [&](Eigen::Index begin, Eigen::Index count) {
    std::vector<Eigen::Index> positions(order.begin() + begin, order.begin() + begin + count);
    std::sort(positions.begin(), positions.end());  // keep original row order inside subsets
    return table.take_rows(positions);
  };
  DataSplit split;
  split.train = slice(0, n_train);
  split.validation = slice(n_train, n_val);
  split.test = slice(n_train + n_val, n_test);
  split.seed = seed;
  return split;
}

std::pair<FeatureTable, ScalerParams> minmax_scale(const FeatureTable& table) {
  if (table.rows() == 0) throw DataError("cannot scale an empty table");
  ScalerParams params;
  params.column_names = table.column_names();
  params.per_column_min = table.values().colwise().minCoeff();
  params.per_column_max = table.values().colwise().maxCoeff();
  FeatureTable scaled(table.column_names(), params.transform(table.values()), table.row_ids(),
                      table.target_column());
  return {std::move(scaled), std::move(params)};
}

}  // namespace noisekit
