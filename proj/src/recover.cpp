#include "noisekit/recover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "noisekit/errors.hpp"

namespace noisekit {

double baseline_threshold(const DeltaDistribution& base, const RecoverabilityCriterion& criterion) {
  if (base.n() == 0) throw DataError("baseline threshold of empty distribution");
  std::vector<double> values(base.deltas.data(), base.deltas.data() + base.deltas.size());
  if (criterion.on_absolute)
    for (double& v : values) v = std::abs(v);
  return percentile_linear(std::move(values), criterion.percentile);
}

std::pair<std::vector<std::int64_t>, double> flag_recoverable(const DeltaDistribution& noise,
                                                              double threshold,
                                                              const RecoverabilityCriterion& criterion) {
  if (criterion.on_absolute && threshold < 0.0)
    throw ConfigError("absolute-mode threshold must be >= 0");
  std::vector<std::int64_t> ids;
  for (Eigen::Index i = 0; i < noise.n(); ++i) {
    const double delta = criterion.on_absolute ? std::abs(noise.deltas(i)) : noise.deltas(i);
    if (delta > threshold) ids.push_back(noise.row_ids[static_cast<std::size_t>(i)]);
  }
  const double ratio = noise.n() == 0 ? 0.0 : static_cast<double>(ids.size()) / static_cast<double>(noise.n());
  return {std::move(ids), ratio};
}

std::map<std::int64_t, double> correct_samples(const NeighborIndex& index, const FeatureTable& noisy_test,
                                               const std::string& feature,
                                               const std::vector<std::int64_t>& ids) {
  if (index.target_feature() != feature)
    throw DataError("index targets '" + index.target_feature() + "', not '" + feature + "'");
  std::map<std::int64_t, double> corrected;
  if (ids.empty()) return corrected;

  const auto inputs = index.input_features();
  std::vector<Eigen::Index> input_cols;
  input_cols.reserve(inputs.size());
  for (const auto& name : inputs) input_cols.push_back(noisy_test.column_index(name));
  std::unordered_map<std::int64_t, Eigen::Index> position_of;
  position_of.reserve(noisy_test.row_ids().size());
  for (std::size_t i = 0; i < noisy_test.row_ids().size(); ++i)
    position_of.emplace(noisy_test.row_ids()[i], static_cast<Eigen::Index>(i));

  Eigen::MatrixXd queries(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto it = position_of.find(ids[r]);
    if (it == position_of.end()) throw DataError("unknown row id " + std::to_string(ids[r]));
    for (std::size_t j = 0; j < input_cols.size(); ++j)
      queries(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          noisy_test.values()(it->second, input_cols[j]);
  }
  const Eigen::VectorXd imputed = impute_feature(index, queries);
  for (std::size_t r = 0; r < ids.size(); ++r) corrected[ids[r]] = imputed(static_cast<Eigen::Index>(r));
  return corrected;
}

MapeResult mape(const std::map<std::int64_t, double>& corrected,
                const std::map<std::int64_t, double>& clean) {
  if (corrected.size() != clean.size()) throw DataError("mape key sets differ in size");
  MapeResult result;
  double sum = 0.0;
  for (const auto& [id, value] : corrected) {
    const auto it = clean.find(id);
    if (it == clean.end()) throw DataError("mape key mismatch at row id " + std::to_string(id));
    if (std::abs(it->second) < 1e-8) {
      ++result.excluded;
      continue;
    }
    const double pct = 100.0 * std::abs(value - it->second) / std::abs(it->second);
    result.per_sample[id] = pct;
    sum += pct;
  }
  result.aggregate = result.per_sample.empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : sum / static_cast<double>(result.per_sample.size());
  return result;
}

nlohmann::ordered_json to_json(const RecoveryReport& report) {
  nlohmann::ordered_json j;
  j["feature"] = report.feature;
  j["sigma"] = report.sigma;
  j["threshold"] = report.threshold;
  j["recoverability"] = report.recoverability;
  j["n_recoverable"] = report.recoverable_ids.size();
  j["aggregate_mape"] = report.aggregate_mape;
  j["fraction_under_20pct"] = report.fraction_under_20pct;
  return j;
}

}  // namespace noisekit
