#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisekit/feature_table.hpp"

namespace noisekit {

/// One corruption event: which feature, what intensity (in scaled [0,1]
/// units), which seed.
struct NoiseSpec {
  enum class Kind { gaussian_additive };

  std::string feature;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  Kind kind = Kind::gaussian_additive;
};

/// Returns a copy of `table` whose `spec.feature` column becomes x + eps with
/// eps ~ Normal(0, sigma^2) drawn from a generator seeded by spec.seed. All
/// other columns are bit-identical and the input is untouched. Values are not
/// clipped to [0,1] unless `clip_to_unit` is set: a drifted meter can report
/// out-of-range readings.
FeatureTable inject_gaussian(const FeatureTable& table, const NoiseSpec& spec, bool clip_to_unit = false);

/// Geometric doubling ladder min, 2*min, 4*min, ... truncated at max (max is
/// included iff it is a power-of-two multiple of min).
std::vector<double> sigma_ladder(double min_sigma, double max_sigma);

}  // namespace noisekit
