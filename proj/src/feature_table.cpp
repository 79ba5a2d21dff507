#include "noisekit/feature_table.hpp"

#include "noisekit/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace noisekit {

namespace {

std::string strip_eol(std::string line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
  return line;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

void format_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

FeatureTable::FeatureTable(std::vector<std::string> column_names, Eigen::MatrixXd values,
                           std::vector<std::int64_t> row_ids, std::string target_column)
    : column_names_(std::move(column_names)),
      values_(std::move(values)),
      row_ids_(std::move(row_ids)),
      target_column_(std::move(target_column)) {
  if (static_cast<Eigen::Index>(column_names_.size()) != values_.cols())
    throw DataError("column name count does not match matrix width");
  if (static_cast<Eigen::Index>(row_ids_.size()) != values_.rows())
    throw DataError("row id count does not match matrix height");
  std::unordered_set<std::string> names(column_names_.begin(), column_names_.end());
  if (names.size() != column_names_.size()) throw DataError("duplicate column names");
  std::unordered_set<std::int64_t> ids(row_ids_.begin(), row_ids_.end());
  if (ids.size() != row_ids_.size()) throw DataError("duplicate row ids");
  if (!values_.allFinite()) throw DataError("table contains non-finite values");
  if (!target_column_.empty() && names.count(target_column_) == 0)
    throw DataError("target column '" + target_column_ + "' not in table");
}

FeatureTable FeatureTable::with_fresh_ids(std::vector<std::string> column_names, Eigen::MatrixXd values,
                                          std::string target_column) {
  std::vector<std::int64_t> ids(static_cast<std::size_t>(values.rows()));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::int64_t>(i);
  return FeatureTable(std::move(column_names), std::move(values), std::move(ids), std::move(target_column));
}

bool FeatureTable::has_column(const std::string& name) const {
  return std::find(column_names_.begin(), column_names_.end(), name) != column_names_.end();
}

Eigen::Index FeatureTable::column_index(const std::string& name) const {
  const auto it = std::find(column_names_.begin(), column_names_.end(), name);
  if (it == column_names_.end()) throw DataError("unknown column '" + name + "'");
  return static_cast<Eigen::Index>(it - column_names_.begin());
}

std::vector<std::string> FeatureTable::feature_names() const {
  std::vector<std::string> out;
  out.reserve(column_names_.size());
  for (const auto& name : column_names_)
    if (name != target_column_) out.push_back(name);
  return out;
}

std::vector<Eigen::Index> FeatureTable::feature_indices() const {
  std::vector<Eigen::Index> out;
  out.reserve(column_names_.size());
  for (Eigen::Index j = 0; j < cols(); ++j)
    if (column_names_[static_cast<std::size_t>(j)] != target_column_) out.push_back(j);
  return out;
}

Eigen::Index FeatureTable::row_position(std::int64_t row_id) const {
  const auto it = std::find(row_ids_.begin(), row_ids_.end(), row_id);
  if (it == row_ids_.end()) throw DataError("unknown row id " + std::to_string(row_id));
  return static_cast<Eigen::Index>(it - row_ids_.begin());
}

FeatureTable FeatureTable::take_rows(const std::vector<Eigen::Index>& positions) const {
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(positions.size()), cols());
  std::vector<std::int64_t> ids(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const Eigen::Index p = positions[i];
    if (p < 0 || p >= rows()) throw DataError("row position out of range");
    sub.row(static_cast<Eigen::Index>(i)) = values_.row(p);
    ids[i] = row_ids_[static_cast<std::size_t>(p)];
  }
  return FeatureTable(column_names_, std::move(sub), std::move(ids), target_column_);
}

FeatureTable FeatureTable::select_features(const std::vector<std::string>& keep) const {
  std::unordered_set<std::string> wanted(keep.begin(), keep.end());
  for (const auto& name : keep)
    if (!has_column(name)) throw DataError("kept feature '" + name + "' not in table");
  std::vector<Eigen::Index> cols_to_keep;
  for (Eigen::Index j = 0; j < cols(); ++j) {
    const auto& name = column_names_[static_cast<std::size_t>(j)];
    if (name == target_column_ || wanted.count(name)) cols_to_keep.push_back(j);
  }
  std::vector<std::string> names;
  Eigen::MatrixXd sub(rows(), static_cast<Eigen::Index>(cols_to_keep.size()));
  for (std::size_t i = 0; i < cols_to_keep.size(); ++i) {
    names.push_back(column_names_[static_cast<std::size_t>(cols_to_keep[i])]);
    sub.col(static_cast<Eigen::Index>(i)) = values_.col(cols_to_keep[i]);
  }
  return FeatureTable(std::move(names), std::move(sub), row_ids_, target_column_);
}

FeatureTable load_table(const std::filesystem::path& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file '" + path.string() + "'");
  std::vector<std::string> header;
  for (auto& name : split_csv_line(strip_eol(line))) header.push_back(trim(name));
  {
    std::unordered_set<std::string> names(header.begin(), header.end());
    if (names.size() != header.size()) throw DataError("duplicate header names in '" + path.string() + "'");
    if (names.count(target_column) == 0)
      throw DataError("target column '" + target_column + "' missing from '" + path.string() + "'");
  }
  const std::size_t width = header.size();

  std::vector<double> data;
  std::vector<double> row(width);
  Eigen::Index kept = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_eol(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != width)
      throw DataError("row " + std::to_string(line_no - 1) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(width));
    bool reject = false;
    for (std::size_t j = 0; j < width; ++j) {
      const std::string cell = trim(cells[j]);
      if (cell.empty()) {  // missing cell: drop the row
        reject = true;
        break;
      }
      double v = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      const auto res = std::from_chars(begin, end, v);
      if (res.ec != std::errc() || res.ptr != end)
        throw DataError("non-numeric cell '" + cell + "' at row " + std::to_string(line_no - 1) +
                        ", column '" + header[j] + "'");
      if (!std::isfinite(v)) {  // nan/inf cell: drop the row
        reject = true;
        break;
      }
      row[j] = v;
    }
    if (reject) continue;
    data.insert(data.end(), row.begin(), row.end());
    ++kept;
  }

  Eigen::MatrixXd values(kept, static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < kept; ++i)
    for (std::size_t j = 0; j < width; ++j)
      values(i, static_cast<Eigen::Index>(j)) = data[static_cast<std::size_t>(i) * width + j];
  return FeatureTable::with_fresh_ids(std::move(header), std::move(values), target_column);
}

void write_csv(const FeatureTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  std::string buf;
  for (std::size_t j = 0; j < table.column_names().size(); ++j) {
    if (j) buf.push_back(',');
    buf += table.column_names()[j];
  }
  buf.push_back('\n');
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      if (j) buf.push_back(',');
      format_double(buf, table.values()(i, j));
    }
    buf.push_back('\n');
  }
  out << buf;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<std::string> read_feature_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    const std::string name = trim(strip_eol(line));
    if (!name.empty()) names.push_back(name);
  }
  return names;
}

}  // namespace noisekit
