#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <vector>

#include "noisekit/errors.hpp"

namespace noisekit {

/// Pearson correlation matrix of the columns of `x` (any dense expression).
/// Zero-variance columns correlate to 0 with every other column while the
/// diagonal stays 1, so constant columns never trip correlation pruning.
template <typename Derived>
Eigen::MatrixXd pearson_matrix(const Eigen::MatrixBase<Derived>& x) {
  const Eigen::MatrixXd m = x.derived();
  if (m.rows() < 2) throw DataError("pearson_matrix needs at least 2 rows");
  const Eigen::RowVectorXd mean = m.colwise().mean();
  const Eigen::MatrixXd centered = m.rowwise() - mean;
  const Eigen::VectorXd norm = centered.colwise().norm();
  Eigen::MatrixXd corr = centered.transpose() * centered;
  for (Eigen::Index i = 0; i < corr.rows(); ++i) {
    for (Eigen::Index j = 0; j < corr.cols(); ++j) {
      if (i == j) {
        corr(i, j) = 1.0;
      } else if (norm(i) == 0.0 || norm(j) == 0.0) {
        corr(i, j) = 0.0;
      } else {
        corr(i, j) /= norm(i) * norm(j);
      }
    }
  }
  return corr;
}

/// Percentile with linear interpolation between order statistics: rank q
/// maps to position q*(n-1)/100. `values` is consumed and sorted in place.
inline double percentile_linear(std::vector<double> values, double percentile) {
  if (values.empty()) throw DataError("percentile of empty sample");
  if (!(percentile > 0.0 && percentile < 100.0)) throw ConfigError("percentile must lie strictly in (0,100)");
  std::sort(values.begin(), values.end());
  const double pos = percentile * static_cast<double>(values.size() - 1) / 100.0;
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

/// Coefficient of determination, 1 - SS_res / SS_tot.
template <typename DerivedP, typename DerivedA>
double r_squared(const Eigen::MatrixBase<DerivedP>& predicted, const Eigen::MatrixBase<DerivedA>& actual) {
  if (predicted.size() != actual.size() || actual.size() == 0)
    throw DataError("r_squared needs equal, non-zero lengths");
  const Eigen::VectorXd p = predicted.derived();
  const Eigen::VectorXd a = actual.derived();
  const double mean = a.mean();
  const double ss_tot = (a.array() - mean).square().sum();
  if (ss_tot == 0.0) throw DataError("r_squared undefined for constant actual values");
  const double ss_res = (a - p).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

/// Pearson correlation of two equally sized vectors.
template <typename DerivedX, typename DerivedY>
double pearson(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  Eigen::MatrixXd m(x.size(), 2);
  m.col(0) = x.derived();
  m.col(1) = y.derived();
  return pearson_matrix(m)(0, 1);
}

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation (n-1 denominator); 0 for fewer than 2 values.
inline double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = sample_mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace noisekit
