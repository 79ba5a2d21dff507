#include "noisekit/noise.hpp"

#include <random>

#include "noisekit/errors.hpp"

namespace noisekit {

FeatureTable inject_gaussian(const FeatureTable& table, const NoiseSpec& spec, bool clip_to_unit) {
  if (spec.sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
  const Eigen::Index col = table.column_index(spec.feature);
  Eigen::MatrixXd values = table.values();
  if (spec.sigma > 0.0) {
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, spec.sigma);
    for (Eigen::Index i = 0; i < values.rows(); ++i) values(i, col) += noise(rng);
    if (clip_to_unit) values.col(col) = values.col(col).cwiseMax(0.0).cwiseMin(1.0);
  }
  return FeatureTable(table.column_names(), std::move(values), table.row_ids(), table.target_column());
}

std::vector<double> sigma_ladder(double min_sigma, double max_sigma) {
  if (!(min_sigma > 0.0) || !(min_sigma <= max_sigma))
    throw ConfigError("sigma ladder needs 0 < min <= max");
  std::vector<double> ladder;
  for (double sigma = min_sigma; sigma <= max_sigma * (1.0 + 1e-12); sigma *= 2.0)
    ladder.push_back(sigma);
  return ladder;
}

}  // namespace noisekit
