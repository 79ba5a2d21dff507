#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace noisekit {

/// Dense rows x columns numeric table with named columns and stable row ids.
///
/// One column may be designated the prediction target (e.g. formation
/// energy); it travels with the table but is excluded from the feature mask
/// that drives correlation pruning, neighbor search and noise injection.
/// Tables are immutable after construction; subset operations return new
/// tables that keep the original row ids.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::vector<std::string> column_names, Eigen::MatrixXd values,
               std::vector<std::int64_t> row_ids, std::string target_column = {});

  /// Builds a table with row ids 0..n-1.
  static FeatureTable with_fresh_ids(std::vector<std::string> column_names, Eigen::MatrixXd values,
                                     std::string target_column = {});

  Eigen::Index rows() const { return values_.rows(); }
  Eigen::Index cols() const { return values_.cols(); }

  const std::vector<std::string>& column_names() const { return column_names_; }
  const std::string& target_column() const { return target_column_; }
  bool has_column(const std::string& name) const;
  Eigen::Index column_index(const std::string& name) const;

  /// Column names excluding the target column, in table order.
  std::vector<std::string> feature_names() const;
  std::vector<Eigen::Index> feature_indices() const;

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::VectorXd column(const std::string& name) const { return values_.col(column_index(name)); }
  const std::vector<std::int64_t>& row_ids() const { return row_ids_; }
  Eigen::Index row_position(std::int64_t row_id) const;

  /// New table holding the given row positions (not ids), keeping their ids.
  FeatureTable take_rows(const std::vector<Eigen::Index>& positions) const;

  /// New table restricted to the named feature columns (table order is
  /// preserved); the target column, when present, is always carried along.
  FeatureTable select_features(const std::vector<std::string>& keep) const;

 private:
  std::vector<std::string> column_names_;
  Eigen::MatrixXd values_;
  std::vector<std::int64_t> row_ids_;
  std::string target_column_;
};

/// Parses a CSV (one header row, decimal-point reals, no quoting) into a
/// FeatureTable. Rows with empty or non-finite cells are dropped; cells that
/// are not numbers at all raise DataError naming the row and column.
FeatureTable load_table(const std::filesystem::path& path, const std::string& target_column);

/// Writes the table back out as CSV with round-trip precision.
void write_csv(const FeatureTable& table, const std::filesystem::path& path);

/// Reads a kept-feature list: plain text, one feature name per line.
std::vector<std::string> read_feature_list(const std::filesystem::path& path);

}  // namespace noisekit
