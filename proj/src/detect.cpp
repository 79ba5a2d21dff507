#include "noisekit/detect.hpp"

#include <algorithm>
#include <cmath>

#include "noisekit/errors.hpp"
#include "noisekit/parallel.hpp"

namespace noisekit {

DeltaDistribution compute_delta(const NeighborIndex& index, const FeatureTable& observed,
                                DeltaSource source) {
  const auto inputs = index.input_features();
  {
    // The index must have been built over exactly this feature set.
    std::vector<std::string> dims = inputs;
    dims.push_back(index.target_feature());
    std::sort(dims.begin(), dims.end());
    std::vector<std::string> have = observed.feature_names();
    std::sort(have.begin(), have.end());
    if (dims != have)
      throw DataError("feature set mismatch between index for '" + index.target_feature() +
                      "' and observed table");
  }

  Eigen::MatrixXd queries(observed.rows(), static_cast<Eigen::Index>(inputs.size()));
  for (std::size_t j = 0; j < inputs.size(); ++j)
    queries.col(static_cast<Eigen::Index>(j)) = observed.column(inputs[j]);

  DeltaDistribution dist;
  dist.feature = index.target_feature();
  dist.source = source;
  dist.row_ids = observed.row_ids();
  dist.deltas = (impute_feature(index, queries) - observed.column(index.target_feature())).array();
  return dist;
}

std::vector<DeltaDistribution> compute_deltas(const std::vector<NeighborIndex>& indices,
                                              const FeatureTable& observed, DeltaSource source,
                                              int threads) {
  std::vector<DeltaDistribution> out(indices.size());
  parallel_for(indices.size(), threads,
               [&](std::size_t slot) { out[slot] = compute_delta(indices[slot], observed, source); });
  return out;
}

double emd_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw DataError("emd_1d needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double step_a = 1.0 / static_cast<double>(a.size());
  const double step_b = 1.0 / static_cast<double>(b.size());

  // Integrate |F_a(x) - F_b(x)| dx by sweeping the merged sorted support.
  double emd = 0.0;
  double cdf_a = 0.0, cdf_b = 0.0;
  std::size_t i = 0, j = 0;
  double prev = 0.0;
  bool started = false;
  while (i < a.size() || j < b.size()) {
    const double x = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
    if (started) emd += std::abs(cdf_a - cdf_b) * (x - prev);
    while (i < a.size() && a[i] == x) {
      cdf_a += step_a;
      ++i;
    }
    while (j < b.size() && b[j] == x) {
      cdf_b += step_b;
      ++j;
    }
    prev = x;
    started = true;
  }
  return emd;
}

double emd_1d(const DeltaDistribution& a, const DeltaDistribution& b) {
  return emd_1d(std::vector<double>(a.deltas.data(), a.deltas.data() + a.deltas.size()),
                std::vector<double>(b.deltas.data(), b.deltas.data() + b.deltas.size()));
}

DetectionReport detect_noisy_feature(const std::vector<DeltaDistribution>& base,
                                     const std::vector<DeltaDistribution>& noise,
                                     const std::optional<std::string>& injected_feature,
                                     bool absolute_deltas) {
  if (base.size() != noise.size() || base.empty())
    throw DataError("base/noise delta lists must be non-empty and equally sized");
  for (std::size_t f = 0; f < base.size(); ++f)
    if (base[f].feature != noise[f].feature)
      throw DataError("delta feature mismatch at position " + std::to_string(f) + ": '" +
                      base[f].feature + "' vs '" + noise[f].feature + "'");

  DetectionReport report;
  report.injected_feature = injected_feature.value_or("");
  report.per_feature_emd.reserve(base.size());
  std::size_t best = 0;
  double best_emd = -1.0;
  for (std::size_t f = 0; f < base.size(); ++f) {
    auto values = [&](const DeltaDistribution& d) {
      std::vector<double> v(d.deltas.data(), d.deltas.data() + d.deltas.size());
      if (absolute_deltas)
        for (double& x : v) x = std::abs(x);
      return v;
    };
    const double emd = emd_1d(values(base[f]), values(noise[f]));
    report.per_feature_emd.emplace_back(base[f].feature, emd);
    if (emd > best_emd) {
      best_emd = emd;
      best = f;
    }
  }
  report.detected_feature = base[best].feature;
  report.hit = injected_feature.has_value() && report.detected_feature == *injected_feature;
  return report;
}

double detectability_rate(const std::vector<DetectionReport>& reports) {
  if (reports.empty()) throw DataError("detectability of zero reports");
  std::size_t hits = 0;
  for (const auto& r : reports) hits += r.hit ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(reports.size());
}

nlohmann::ordered_json to_json(const DetectionReport& report) {
  nlohmann::ordered_json j;
  j["injected_feature"] = report.injected_feature;
  j["detected_feature"] = report.detected_feature;
  j["hit"] = report.hit;
  nlohmann::ordered_json emds;
  for (const auto& [feature, emd] : report.per_feature_emd) emds[feature] = emd;
  j["per_feature_emd"] = std::move(emds);
  return j;
}

}  // namespace noisekit
