#include "noisekit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <unordered_map>

#include "noisekit/detect.hpp"
#include "noisekit/errors.hpp"
#include "noisekit/ingest.hpp"
#include "noisekit/noise.hpp"
#include "noisekit/parallel.hpp"
#include "noisekit/seeding.hpp"
#include "noisekit/stats.hpp"

namespace noisekit {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (known.count(key) == 0) throw ConfigError("unknown config key '" + key + "' in " + where);
}

Weighting weighting_from_string(const std::string& s) {
  if (s == "inverse_distance") return Weighting::inverse_distance;
  if (s == "uniform") return Weighting::uniform;
  throw ConfigError("unknown knn weighting '" + s + "'");
}

KnnAlgorithm algorithm_from_string(const std::string& s) {
  if (s == "kd_tree") return KnnAlgorithm::kd_tree;
  if (s == "brute_force") return KnnAlgorithm::brute_force;
  throw ConfigError("unknown knn algorithm '" + s + "'");
}

std::string to_string(Weighting w) {
  return w == Weighting::inverse_distance ? "inverse_distance" : "uniform";
}

std::string to_string(KnnAlgorithm a) { return a == KnnAlgorithm::kd_tree ? "kd_tree" : "brute_force"; }

std::string fingerprint_of(const ordered_json& echo) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(echo.dump())));
  return buf;
}

double json_double(const ordered_json& v) {
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

ordered_json double_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

std::string format_csv_value(const ordered_json& v) {
  if (v.is_null()) return "nan";
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isnan(d)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", d);
    return buf;
  }
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.get<std::string>();
}

double mean_skipping_nan(const std::vector<double>& v, std::size_t* n_valid = nullptr) {
  std::vector<double> kept;
  kept.reserve(v.size());
  for (double x : v)
    if (!std::isnan(x)) kept.push_back(x);
  if (n_valid) *n_valid = kept.size();
  if (kept.empty()) return std::numeric_limits<double>::quiet_NaN();
  return sample_mean(kept);
}

double std_skipping_nan(const std::vector<double>& v) {
  std::vector<double> kept;
  for (double x : v)
    if (!std::isnan(x)) kept.push_back(x);
  if (kept.empty()) return std::numeric_limits<double>::quiet_NaN();
  return sample_std(kept);
}

// ---------------------------------------------------------------------------
// Workspace: shared data plumbing behind every sweep. Loads the table once,
// applies feature selection, and materializes per-replicate splits with the
// permuted training pool all indices of that replicate share.
// ---------------------------------------------------------------------------
class Workspace {
 public:
  explicit Workspace(const ExperimentConfig& config) : cfg_(config) {
    cfg_.validate();
    selected_ = load_table(cfg_.input_path, cfg_.target_column);
    if (cfg_.kept_features_path) {
      selected_ = selected_.select_features(read_feature_list(*cfg_.kept_features_path));
    } else {
      auto [pruned, dropped] = prune_correlated(selected_, cfg_.prune_threshold);
      selected_ = std::move(pruned);
      dropped_ = std::move(dropped);
    }
    if (selected_.feature_names().size() < 2)
      throw DataError("need at least 2 feature columns after selection");
    full_train_ = static_cast<Eigen::Index>(
        std::floor(cfg_.split_ratios[0] * static_cast<double>(selected_.rows())));
    if (full_train_ < cfg_.knn.k)
      throw ConfigError("train split smaller than knn k");
  }

  struct Replicate {
    FeatureTable train, validation, test;
    ScalerParams train_scaler, validation_scaler, test_scaler;
    std::shared_ptr<Eigen::MatrixXd> points;  // dims x n_train, columns in subsample order
    std::vector<std::string> dim_names;
    std::vector<std::int64_t> permuted_ids;
  };

  Replicate prepare(std::uint64_t replicate_seed) const {
    const DataSplit split =
        split_dataset(selected_, cfg_.split_ratios, derive_seed(cfg_.master_seed, "split", replicate_seed));
    Replicate rep;
    std::tie(rep.train, rep.train_scaler) = minmax_scale(split.train);
    std::tie(rep.validation, rep.validation_scaler) = minmax_scale(split.validation);
    std::tie(rep.test, rep.test_scaler) = minmax_scale(split.test);

    // One seeded permutation per replicate; a size-z subsample is its prefix,
    // so growing the size axis only ever adds training data.
    const Eigen::Index n_train = rep.train.rows();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n_train));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::mt19937_64 rng(derive_seed(cfg_.master_seed, "subsample", replicate_seed));
    std::shuffle(perm.begin(), perm.end(), rng);

    rep.dim_names = rep.train.feature_names();
    const auto dims = rep.train.feature_indices();
    auto points = std::make_shared<Eigen::MatrixXd>(static_cast<Eigen::Index>(dims.size()), n_train);
    rep.permuted_ids.resize(static_cast<std::size_t>(n_train));
    for (Eigen::Index c = 0; c < n_train; ++c) {
      const Eigen::Index src = perm[static_cast<std::size_t>(c)];
      for (std::size_t j = 0; j < dims.size(); ++j)
        (*points)(static_cast<Eigen::Index>(j), c) = rep.train.values()(src, dims[j]);
      rep.permuted_ids[static_cast<std::size_t>(c)] = rep.train.row_ids()[static_cast<std::size_t>(src)];
    }
    rep.points = std::move(points);
    return rep;
  }

  std::vector<NeighborIndex> make_indices(const Replicate& rep, Eigen::Index train_size) const {
    if (train_size < cfg_.knn.k || train_size > rep.points->cols())
      throw ConfigError("train size " + std::to_string(train_size) + " out of range");
    const std::vector<std::int64_t> ids(rep.permuted_ids.begin(),
                                        rep.permuted_ids.begin() + train_size);
    const std::size_t n_features = rep.dim_names.size();
    std::vector<std::optional<NeighborIndex>> slots(n_features);
    parallel_for(n_features, cfg_.threads, [&](std::size_t f) {
      slots[f] = NeighborIndex::over_points(rep.points, rep.dim_names, static_cast<Eigen::Index>(f), ids,
                                            train_size, cfg_.knn);
    });
    std::vector<NeighborIndex> indices;
    indices.reserve(n_features);
    for (auto& slot : slots) indices.push_back(std::move(*slot));
    return indices;
  }

  std::vector<Eigen::Index> resolved_train_sizes() const {
    std::vector<Eigen::Index> sizes;
    if (!cfg_.train_sizes.empty())
      sizes = cfg_.train_sizes;
    else if (cfg_.train_size_start)
      sizes = train_size_ladder(full_train_, *cfg_.train_size_start);
    else
      sizes = {full_train_};
    for (Eigen::Index z : sizes) {
      if (z > full_train_)
        throw ConfigError("train size " + std::to_string(z) + " exceeds the train split (" +
                          std::to_string(full_train_) + ")");
      if (z < cfg_.knn.k) throw ConfigError("train size " + std::to_string(z) + " smaller than knn k");
    }
    return sizes;
  }

  const ExperimentConfig& cfg() const { return cfg_; }
  const FeatureTable& selected() const { return selected_; }
  const std::vector<DroppedFeature>& dropped() const { return dropped_; }
  Eigen::Index full_train_size() const { return full_train_; }

 private:
  ExperimentConfig cfg_;
  FeatureTable selected_;
  std::vector<DroppedFeature> dropped_;
  Eigen::Index full_train_ = 0;
};

SweepReport make_report(std::string kind, const ExperimentConfig& cfg) {
  SweepReport report;
  report.kind = std::move(kind);
  report.version = kVersion;
  report.config_echo = cfg.to_json();
  report.config_fingerprint = fingerprint_of(report.config_echo);
  report.master_seed = cfg.master_seed;
  return report;
}

}  // namespace

// ---------------------------------------------------------------------------
// ExperimentConfig
// ---------------------------------------------------------------------------

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  static const std::set<std::string> root_keys{
      "input_path",     "target_column", "kept_features_path", "prune_threshold",  "split_ratios",
      "knn",            "sigma_ladder",  "train_sizes",        "train_size_start", "seeds",
      "master_seed",    "criterion",     "correction_sigma",   "clip_noise",       "emd_absolute",
      "emit_per_sample", "output_dir",   "threads"};
  static const std::set<std::string> knn_keys{"k", "minkowski_p", "leaf_size", "weighting", "algorithm"};
  static const std::set<std::string> criterion_keys{"percentile", "on_absolute"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown_keys(j, root_keys, "config");

  ExperimentConfig cfg;
  try {
    if (j.contains("input_path")) cfg.input_path = j.at("input_path").get<std::string>();
    if (j.contains("target_column")) cfg.target_column = j.at("target_column").get<std::string>();
    if (j.contains("kept_features_path") && !j.at("kept_features_path").is_null())
      cfg.kept_features_path = j.at("kept_features_path").get<std::string>();
    if (j.contains("prune_threshold")) cfg.prune_threshold = j.at("prune_threshold").get<double>();
    if (j.contains("split_ratios")) {
      const auto r = j.at("split_ratios").get<std::vector<double>>();
      if (r.size() != 3) throw ConfigError("split_ratios must have 3 entries");
      cfg.split_ratios = {r[0], r[1], r[2]};
    }
    if (j.contains("knn")) {
      const auto& k = j.at("knn");
      reject_unknown_keys(k, knn_keys, "knn");
      if (k.contains("k")) cfg.knn.k = k.at("k").get<int>();
      if (k.contains("minkowski_p")) cfg.knn.minkowski_p = k.at("minkowski_p").get<int>();
      if (k.contains("leaf_size")) cfg.knn.leaf_size = k.at("leaf_size").get<int>();
      if (k.contains("weighting")) cfg.knn.weighting = weighting_from_string(k.at("weighting").get<std::string>());
      if (k.contains("algorithm")) cfg.knn.algorithm = algorithm_from_string(k.at("algorithm").get<std::string>());
    }
    if (j.contains("sigma_ladder")) cfg.sigma_ladder = j.at("sigma_ladder").get<std::vector<double>>();
    if (j.contains("train_sizes")) {
      cfg.train_sizes.clear();
      for (const auto& v : j.at("train_sizes")) cfg.train_sizes.push_back(v.get<long long>());
    }
    if (j.contains("train_size_start") && !j.at("train_size_start").is_null())
      cfg.train_size_start = j.at("train_size_start").get<long long>();
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("master_seed")) cfg.master_seed = j.at("master_seed").get<std::uint64_t>();
    if (j.contains("criterion")) {
      const auto& c = j.at("criterion");
      reject_unknown_keys(c, criterion_keys, "criterion");
      if (c.contains("percentile")) cfg.criterion.percentile = c.at("percentile").get<double>();
      if (c.contains("on_absolute")) cfg.criterion.on_absolute = c.at("on_absolute").get<bool>();
    }
    if (j.contains("correction_sigma")) cfg.correction_sigma = j.at("correction_sigma").get<double>();
    if (j.contains("clip_noise")) cfg.clip_noise = j.at("clip_noise").get<bool>();
    if (j.contains("emd_absolute")) cfg.emd_absolute = j.at("emd_absolute").get<bool>();
    if (j.contains("emit_per_sample")) cfg.emit_per_sample = j.at("emit_per_sample").get<bool>();
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  ExperimentConfig cfg = from_json(j);
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  ordered_json j;
  j["input_path"] = input_path.string();
  j["target_column"] = target_column;
  j["kept_features_path"] =
      kept_features_path ? ordered_json(kept_features_path->string()) : ordered_json(nullptr);
  j["prune_threshold"] = prune_threshold;
  j["split_ratios"] = split_ratios;
  j["knn"] = {{"k", knn.k},
              {"minkowski_p", knn.minkowski_p},
              {"leaf_size", knn.leaf_size},
              {"weighting", to_string(knn.weighting)},
              {"algorithm", to_string(knn.algorithm)}};
  j["sigma_ladder"] = sigma_ladder;
  ordered_json sizes = ordered_json::array();
  for (Eigen::Index z : train_sizes) sizes.push_back(static_cast<long long>(z));
  j["train_sizes"] = std::move(sizes);
  j["train_size_start"] = train_size_start ? ordered_json(static_cast<long long>(*train_size_start))
                                           : ordered_json(nullptr);
  j["seeds"] = seeds;
  j["master_seed"] = master_seed;
  j["criterion"] = {{"percentile", criterion.percentile}, {"on_absolute", criterion.on_absolute}};
  j["correction_sigma"] = correction_sigma;
  j["clip_noise"] = clip_noise;
  j["emd_absolute"] = emd_absolute;
  j["emit_per_sample"] = emit_per_sample;
  return j;
}

void ExperimentConfig::validate() const {
  if (input_path.empty()) throw ConfigError("input_path is required");
  if (target_column.empty()) throw ConfigError("target_column is required");
  if (!(prune_threshold > 0.0 && prune_threshold <= 1.0))
    throw ConfigError("prune_threshold must lie in (0, 1]");
  for (double r : split_ratios)
    if (!(r > 0.0)) throw ConfigError("split_ratios must be positive");
  if (std::abs(split_ratios[0] + split_ratios[1] + split_ratios[2] - 1.0) > 1e-9)
    throw ConfigError("split_ratios must sum to 1");
  if (knn.k < 1) throw ConfigError("knn.k must be >= 1");
  if (knn.minkowski_p < 1) throw ConfigError("knn.minkowski_p must be >= 1");
  if (knn.leaf_size < 1) throw ConfigError("knn.leaf_size must be >= 1");
  if (sigma_ladder.empty()) throw ConfigError("sigma_ladder must not be empty");
  for (std::size_t i = 0; i < sigma_ladder.size(); ++i) {
    if (sigma_ladder[i] < 0.0) throw ConfigError("sigma values must be >= 0");
    if (i > 0 && !(sigma_ladder[i] > sigma_ladder[i - 1]))
      throw ConfigError("sigma_ladder must be strictly increasing");
  }
  for (std::size_t i = 0; i < train_sizes.size(); ++i) {
    if (train_sizes[i] < 1) throw ConfigError("train_sizes must be positive");
    if (i > 0 && train_sizes[i] < train_sizes[i - 1])
      throw ConfigError("train_sizes must be non-decreasing");
  }
  if (!train_sizes.empty() && train_size_start)
    throw ConfigError("give train_sizes or train_size_start, not both");
  if (train_size_start && *train_size_start < 1) throw ConfigError("train_size_start must be positive");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (!(criterion.percentile > 0.0 && criterion.percentile < 100.0))
    throw ConfigError("criterion.percentile must lie strictly in (0,100)");
  if (correction_sigma < 0.0) throw ConfigError("correction_sigma must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

std::vector<Eigen::Index> train_size_ladder(Eigen::Index full, Eigen::Index start) {
  if (start < 1) throw ConfigError("train size ladder start must be positive");
  if (start > full) throw ConfigError("train size ladder start exceeds the full train size");
  std::vector<Eigen::Index> ladder{start};
  while (ladder.back() < full) ladder.push_back(std::min<Eigen::Index>(ladder.back() * 2, full));
  return ladder;
}

// ---------------------------------------------------------------------------
// SweepReport plumbing
// ---------------------------------------------------------------------------

nlohmann::ordered_json SweepReport::to_json() const {
  ordered_json j;
  j["kind"] = kind;
  j["version"] = version;
  j["config_fingerprint"] = config_fingerprint;
  j["master_seed"] = master_seed;
  j["config"] = config_echo;
  j["columns"] = columns;
  j["cells"] = cells;
  j["aggregate_columns"] = aggregate_columns;
  j["aggregates"] = aggregates;
  if (!samples.empty()) {
    j["sample_columns"] = sample_columns;
    j["samples"] = samples;
  }
  return j;
}

SweepReport SweepReport::from_json(const json& j) {
  SweepReport report;
  try {
    report.kind = j.at("kind").get<std::string>();
    report.version = j.at("version").get<std::string>();
    report.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    report.master_seed = j.at("master_seed").get<std::uint64_t>();
    report.config_echo = j.at("config");
    report.columns = j.at("columns").get<std::vector<std::string>>();
    report.cells = j.at("cells");
    report.aggregate_columns = j.at("aggregate_columns").get<std::vector<std::string>>();
    report.aggregates = j.at("aggregates");
    if (j.contains("samples")) {
      report.sample_columns = j.at("sample_columns").get<std::vector<std::string>>();
      report.samples = j.at("samples");
    }
  } catch (const json::exception& e) {
    throw DataError("malformed sweep report: " + std::string(e.what()));
  }
  return report;
}

std::vector<std::filesystem::path> emit_report(const SweepReport& report,
                                               const std::filesystem::path& output_dir) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create output dir '" + output_dir.string() + "': " + ec.message());

  const std::string stem = report.kind + "-seed" + std::to_string(report.master_seed);
  std::vector<std::filesystem::path> written;

  const auto write_file = [&](const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    written.push_back(path);
  };

  write_file(output_dir / (stem + ".json"), report.to_json().dump(2) + "\n");

  // Tidy CSV: trial cells first, aggregate rows after, under the union of
  // both column sets.
  std::vector<std::string> all_columns = report.columns;
  for (const auto& col : report.aggregate_columns)
    if (std::find(all_columns.begin(), all_columns.end(), col) == all_columns.end())
      all_columns.push_back(col);
  std::string csv = "row_type";
  for (const auto& col : all_columns) csv += "," + col;
  csv += "\n";
  const auto append_rows = [&](const ordered_json& rows, const char* row_type) {
    for (const auto& row : rows) {
      csv += row_type;
      for (const auto& col : all_columns) {
        csv += ",";
        if (row.contains(col)) csv += format_csv_value(row.at(col));
      }
      csv += "\n";
    }
  };
  append_rows(report.cells, "cell");
  append_rows(report.aggregates, "aggregate");
  write_file(output_dir / (stem + ".csv"), csv);

  if (!report.samples.empty()) {
    std::string sample_csv;
    for (std::size_t i = 0; i < report.sample_columns.size(); ++i) {
      if (i) sample_csv += ",";
      sample_csv += report.sample_columns[i];
    }
    sample_csv += "\n";
    for (const auto& row : report.samples) {
      for (std::size_t i = 0; i < report.sample_columns.size(); ++i) {
        if (i) sample_csv += ",";
        sample_csv += format_csv_value(row.at(report.sample_columns[i]));
      }
      sample_csv += "\n";
    }
    write_file(output_dir / (stem + "-samples.csv"), sample_csv);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Sweep runners
// ---------------------------------------------------------------------------

SweepReport run_baseline_eval(const ExperimentConfig& config) {
  const Workspace ws(config);
  const auto& cfg = ws.cfg();
  const auto sizes = ws.resolved_train_sizes();
  const auto features = ws.selected().feature_names();
  const std::size_t F = features.size(), Z = sizes.size(), R = cfg.seeds.size();

  std::vector<double> r2_cells(F * Z * R, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < R; ++r) {
    const auto rep = ws.prepare(cfg.seeds[r]);
    for (std::size_t z = 0; z < Z; ++z) {
      const auto indices = ws.make_indices(rep, sizes[z]);
      const auto base = compute_deltas(indices, rep.validation, DeltaSource::base, cfg.threads);
      for (std::size_t f = 0; f < F; ++f) {
        const Eigen::VectorXd actual = rep.validation.column(features[f]);
        const Eigen::VectorXd predicted = actual + base[f].deltas.matrix();
        double r2 = std::numeric_limits<double>::quiet_NaN();
        try {
          r2 = r_squared(predicted, actual);
        } catch (const DataError&) {
          // constant actual on this replicate: leave the cell as nan
        }
        r2_cells[(f * Z + z) * R + r] = r2;
      }
    }
  }

  SweepReport report = make_report("baseline", cfg);
  report.columns = {"feature", "train_size", "seed", "r2"};
  report.aggregate_columns = {"feature", "train_size", "mean_r2", "std_r2", "n_seeds"};
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t z = 0; z < Z; ++z) {
      std::vector<double> across_seeds;
      for (std::size_t r = 0; r < R; ++r) {
        const double r2 = r2_cells[(f * Z + z) * R + r];
        across_seeds.push_back(r2);
        ordered_json cell;
        cell["feature"] = features[f];
        cell["train_size"] = static_cast<long long>(sizes[z]);
        cell["seed"] = cfg.seeds[r];
        cell["r2"] = double_or_null(r2);
        report.cells.push_back(std::move(cell));
      }
      std::size_t n_valid = 0;
      ordered_json agg;
      agg["feature"] = features[f];
      agg["train_size"] = static_cast<long long>(sizes[z]);
      agg["mean_r2"] = double_or_null(mean_skipping_nan(across_seeds, &n_valid));
      agg["std_r2"] = double_or_null(std_skipping_nan(across_seeds));
      agg["n_seeds"] = n_valid;
      report.aggregates.push_back(std::move(agg));
    }
  return report;
}

SweepReport correlation_vs_r2(const ExperimentConfig& config) {
  const Workspace ws(config);
  const auto& cfg = ws.cfg();
  const auto sizes = ws.resolved_train_sizes();
  const Eigen::Index min_size = *std::min_element(sizes.begin(), sizes.end());
  const auto features = ws.selected().feature_names();
  const std::size_t F = features.size(), R = cfg.seeds.size();

  std::vector<double> mean_abs_corr(F * R, 0.0);
  std::vector<double> r2_at_min(F * R, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t r = 0; r < R; ++r) {
    const auto rep = ws.prepare(cfg.seeds[r]);
    const Eigen::MatrixXd corr = pearson_matrix(rep.train);
    for (std::size_t f = 0; f < F; ++f) {
      double sum = 0.0;
      for (std::size_t g = 0; g < F; ++g)
        if (g != f)
          sum += std::abs(corr(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(g)));
      mean_abs_corr[f * R + r] = sum / static_cast<double>(F - 1);
    }
    const auto indices = ws.make_indices(rep, min_size);
    const auto base = compute_deltas(indices, rep.validation, DeltaSource::base, cfg.threads);
    for (std::size_t f = 0; f < F; ++f) {
      const Eigen::VectorXd actual = rep.validation.column(features[f]);
      const Eigen::VectorXd predicted = actual + base[f].deltas.matrix();
      try {
        r2_at_min[f * R + r] = r_squared(predicted, actual);
      } catch (const DataError&) {
      }
    }
  }

  SweepReport report = make_report("baseline-correlation", cfg);
  report.columns = {"feature", "train_size", "mean_abs_correlation", "r2_at_min_size"};
  report.aggregate_columns = {};
  for (std::size_t f = 0; f < F; ++f) {
    std::vector<double> corr_seeds(mean_abs_corr.begin() + f * R, mean_abs_corr.begin() + (f + 1) * R);
    std::vector<double> r2_seeds(r2_at_min.begin() + f * R, r2_at_min.begin() + (f + 1) * R);
    ordered_json cell;
    cell["feature"] = features[f];
    cell["train_size"] = static_cast<long long>(min_size);
    cell["mean_abs_correlation"] = double_or_null(mean_skipping_nan(corr_seeds));
    cell["r2_at_min_size"] = double_or_null(mean_skipping_nan(r2_seeds));
    report.cells.push_back(std::move(cell));
  }
  return report;
}

SweepReport run_detection_sweep(const ExperimentConfig& config) {
  const Workspace ws(config);
  const auto& cfg = ws.cfg();
  const auto sizes = ws.resolved_train_sizes();
  const auto& sigmas = cfg.sigma_ladder;
  const auto features = ws.selected().feature_names();
  const std::size_t F = features.size(), Z = sizes.size(), R = cfg.seeds.size(), S = sigmas.size();

  struct Trial {
    std::string detected;
    bool hit = false;
    double emd_injected = 0.0, emd_detected = 0.0;
  };
  std::vector<Trial> trials(S * Z * R * F);

  for (std::size_t r = 0; r < R; ++r) {
    const auto rep = ws.prepare(cfg.seeds[r]);
    for (std::size_t z = 0; z < Z; ++z) {
      const auto indices = ws.make_indices(rep, sizes[z]);
      const auto base = compute_deltas(indices, rep.validation, DeltaSource::base, cfg.threads);
      parallel_for(S * F, cfg.threads, [&](std::size_t t) {
        const std::size_t s = t / F, f = t % F;
        NoiseSpec spec;
        spec.feature = features[f];
        spec.sigma = sigmas[s];
        spec.seed = derive_seed(cfg.master_seed, "noise", features[f], sigmas[s],
                                static_cast<std::int64_t>(sizes[z]), cfg.seeds[r]);
        const FeatureTable noisy = inject_gaussian(rep.test, spec, cfg.clip_noise);
        const auto noise_deltas = compute_deltas(indices, noisy, DeltaSource::noise, 1);
        const DetectionReport det = detect_noisy_feature(base, noise_deltas, features[f], cfg.emd_absolute);
        Trial& out = trials[((s * Z + z) * R + r) * F + f];
        out.detected = det.detected_feature;
        out.hit = det.hit;
        out.emd_injected = det.per_feature_emd[f].second;
        for (const auto& [name, emd] : det.per_feature_emd)
          if (name == det.detected_feature) out.emd_detected = emd;
      });
    }
  }

  SweepReport report = make_report("detect-sweep", cfg);
  report.columns = {"sigma",  "train_size",       "seed", "injected_feature", "detected_feature",
                    "hit",    "emd_injected",     "emd_detected"};
  report.aggregate_columns = {"sigma", "train_size", "mean_detectability", "std_detectability", "n_seeds"};
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t z = 0; z < Z; ++z) {
      std::vector<double> per_seed;
      for (std::size_t r = 0; r < R; ++r) {
        std::size_t hits = 0;
        for (std::size_t f = 0; f < F; ++f) {
          const Trial& trial = trials[((s * Z + z) * R + r) * F + f];
          hits += trial.hit ? 1 : 0;
          ordered_json cell;
          cell["sigma"] = sigmas[s];
          cell["train_size"] = static_cast<long long>(sizes[z]);
          cell["seed"] = cfg.seeds[r];
          cell["injected_feature"] = features[f];
          cell["detected_feature"] = trial.detected;
          cell["hit"] = trial.hit;
          cell["emd_injected"] = trial.emd_injected;
          cell["emd_detected"] = trial.emd_detected;
          report.cells.push_back(std::move(cell));
        }
        per_seed.push_back(static_cast<double>(hits) / static_cast<double>(F));
      }
      ordered_json agg;
      agg["sigma"] = sigmas[s];
      agg["train_size"] = static_cast<long long>(sizes[z]);
      agg["mean_detectability"] = sample_mean(per_seed);
      agg["std_detectability"] = sample_std(per_seed);
      agg["n_seeds"] = per_seed.size();
      report.aggregates.push_back(std::move(agg));
    }
  return report;
}

SweepReport run_recoverability_sweep(const ExperimentConfig& config) {
  const Workspace ws(config);
  const auto& cfg = ws.cfg();
  const auto& sigmas = cfg.sigma_ladder;
  const auto features = ws.selected().feature_names();
  const Eigen::Index full = ws.full_train_size();
  const std::size_t F = features.size(), R = cfg.seeds.size(), S = sigmas.size();

  struct Cell {
    double threshold = 0.0;
    std::size_t n_recoverable = 0;
    std::size_t n_test = 0;
    double recoverability = 0.0;
  };
  std::vector<Cell> cells(F * S * R);

  for (std::size_t r = 0; r < R; ++r) {
    const auto rep = ws.prepare(cfg.seeds[r]);
    const auto indices = ws.make_indices(rep, full);
    const auto base = compute_deltas(indices, rep.validation, DeltaSource::base, cfg.threads);
    std::vector<double> thresholds(F);
    for (std::size_t f = 0; f < F; ++f) thresholds[f] = baseline_threshold(base[f], cfg.criterion);

    parallel_for(F * S, cfg.threads, [&](std::size_t t) {
      const std::size_t f = t / S, s = t % S;
      NoiseSpec spec;
      spec.feature = features[f];
      spec.sigma = sigmas[s];
      spec.seed = derive_seed(cfg.master_seed, "noise", features[f], sigmas[s],
                              static_cast<std::int64_t>(full), cfg.seeds[r]);
      const FeatureTable noisy = inject_gaussian(rep.test, spec, cfg.clip_noise);
      const DeltaDistribution noise_delta = compute_delta(indices[f], noisy, DeltaSource::noise);
      const auto [ids, ratio] = flag_recoverable(noise_delta, thresholds[f], cfg.criterion);
      Cell& cell = cells[(f * S + s) * R + r];
      cell.threshold = thresholds[f];
      cell.n_recoverable = ids.size();
      cell.n_test = static_cast<std::size_t>(rep.test.rows());
      cell.recoverability = ratio;
    });
  }

  SweepReport report = make_report("recover-sweep", cfg);
  report.columns = {"feature", "sigma", "seed", "threshold", "n_test", "n_recoverable", "recoverability"};
  report.aggregate_columns = {"feature", "sigma", "mean_recoverability", "std_recoverability", "n_seeds"};
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t s = 0; s < S; ++s) {
      std::vector<double> per_seed;
      for (std::size_t r = 0; r < R; ++r) {
        const Cell& cell = cells[(f * S + s) * R + r];
        per_seed.push_back(cell.recoverability);
        ordered_json row;
        row["feature"] = features[f];
        row["sigma"] = sigmas[s];
        row["seed"] = cfg.seeds[r];
        row["threshold"] = cell.threshold;
        row["n_test"] = cell.n_test;
        row["n_recoverable"] = cell.n_recoverable;
        row["recoverability"] = cell.recoverability;
        report.cells.push_back(std::move(row));
      }
      ordered_json agg;
      agg["feature"] = features[f];
      agg["sigma"] = sigmas[s];
      agg["mean_recoverability"] = sample_mean(per_seed);
      agg["std_recoverability"] = sample_std(per_seed);
      agg["n_seeds"] = per_seed.size();
      report.aggregates.push_back(std::move(agg));
    }
  return report;
}

SweepReport run_correction_eval(const ExperimentConfig& config) {
  const Workspace ws(config);
  const auto& cfg = ws.cfg();
  const auto features = ws.selected().feature_names();
  const Eigen::Index full = ws.full_train_size();
  const double sigma = cfg.correction_sigma;
  const std::size_t F = features.size(), R = cfg.seeds.size();

  struct SampleRow {
    std::int64_t row_id;
    double clean, noisy, corrected, mape_pct;
  };
  struct Cell {
    double threshold = 0.0;
    std::size_t n_recoverable = 0;
    double recoverability = 0.0;
    double aggregate_mape = std::numeric_limits<double>::quiet_NaN();
    double fraction_under_20pct = std::numeric_limits<double>::quiet_NaN();
    std::size_t excluded = 0;
    std::size_t n_included = 0;
    std::size_t n_under_20 = 0;
    double sum_mape = 0.0;
    std::vector<SampleRow> samples;
  };
  std::vector<Cell> cells(F * R);

  for (std::size_t r = 0; r < R; ++r) {
    const auto rep = ws.prepare(cfg.seeds[r]);
    const auto indices = ws.make_indices(rep, full);
    const auto base = compute_deltas(indices, rep.validation, DeltaSource::base, cfg.threads);
    std::vector<double> thresholds(F);
    for (std::size_t f = 0; f < F; ++f) thresholds[f] = baseline_threshold(base[f], cfg.criterion);

    parallel_for(F, cfg.threads, [&](std::size_t f) {
      NoiseSpec spec;
      spec.feature = features[f];
      spec.sigma = sigma;
      spec.seed = derive_seed(cfg.master_seed, "noise", features[f], sigma,
                              static_cast<std::int64_t>(full), cfg.seeds[r]);
      const FeatureTable noisy = inject_gaussian(rep.test, spec, cfg.clip_noise);
      const DeltaDistribution noise_delta = compute_delta(indices[f], noisy, DeltaSource::noise);
      const auto [ids, ratio] = flag_recoverable(noise_delta, thresholds[f], cfg.criterion);
      const auto corrected = correct_samples(indices[f], noisy, features[f], ids);

      std::unordered_map<std::int64_t, Eigen::Index> position_of;
      position_of.reserve(rep.test.row_ids().size());
      for (std::size_t i = 0; i < rep.test.row_ids().size(); ++i)
        position_of.emplace(rep.test.row_ids()[i], static_cast<Eigen::Index>(i));

      std::map<std::int64_t, double> clean;
      const Eigen::Index clean_col = rep.test.column_index(features[f]);
      for (std::int64_t id : ids) clean[id] = rep.test.values()(position_of.at(id), clean_col);
      const MapeResult scores = mape(corrected, clean);

      Cell& cell = cells[f * R + r];
      cell.threshold = thresholds[f];
      cell.n_recoverable = ids.size();
      cell.recoverability = ratio;
      cell.excluded = scores.excluded;
      cell.n_included = scores.per_sample.size();
      cell.aggregate_mape = scores.aggregate;
      for (const auto& [id, pct] : scores.per_sample) {
        cell.sum_mape += pct;
        if (pct < 20.0) ++cell.n_under_20;
      }
      cell.fraction_under_20pct =
          cell.n_included == 0 ? std::numeric_limits<double>::quiet_NaN()
                               : static_cast<double>(cell.n_under_20) / static_cast<double>(cell.n_included);
      if (cfg.emit_per_sample) {
        const Eigen::Index noisy_col = noisy.column_index(features[f]);
        for (const auto& [id, pct] : scores.per_sample) {
          const Eigen::Index pos = position_of.at(id);
          cell.samples.push_back({id, rep.test.values()(pos, clean_col), noisy.values()(pos, noisy_col),
                                  corrected.at(id), pct});
        }
      }
    });
  }

  SweepReport report = make_report("correct-eval", cfg);
  report.columns = {"feature",        "sigma",          "seed",     "threshold", "n_recoverable",
                    "recoverability", "n_mape_excluded", "aggregate_mape", "fraction_under_20pct"};
  report.aggregate_columns = {"feature", "sigma",          "n_seeds", "mean_recoverability",
                              "mape_mean", "fraction_under_20pct"};
  report.sample_columns = {"feature", "seed", "row_id", "clean", "noisy", "corrected", "mape_pct"};

  std::size_t pooled_included = 0, pooled_under = 0;
  double pooled_sum = 0.0;
  for (std::size_t f = 0; f < F; ++f) {
    std::vector<double> recov, mapes, fractions;
    for (std::size_t r = 0; r < R; ++r) {
      const Cell& cell = cells[f * R + r];
      recov.push_back(cell.recoverability);
      mapes.push_back(cell.aggregate_mape);
      fractions.push_back(cell.fraction_under_20pct);
      pooled_included += cell.n_included;
      pooled_under += cell.n_under_20;
      pooled_sum += cell.sum_mape;
      ordered_json row;
      row["feature"] = features[f];
      row["sigma"] = sigma;
      row["seed"] = cfg.seeds[r];
      row["threshold"] = cell.threshold;
      row["n_recoverable"] = cell.n_recoverable;
      row["recoverability"] = cell.recoverability;
      row["n_mape_excluded"] = cell.excluded;
      row["aggregate_mape"] = double_or_null(cell.aggregate_mape);
      row["fraction_under_20pct"] = double_or_null(cell.fraction_under_20pct);
      report.cells.push_back(std::move(row));
      if (cfg.emit_per_sample)
        for (const auto& s : cell.samples) {
          ordered_json sample;
          sample["feature"] = features[f];
          sample["seed"] = cfg.seeds[r];
          sample["row_id"] = s.row_id;
          sample["clean"] = s.clean;
          sample["noisy"] = s.noisy;
          sample["corrected"] = s.corrected;
          sample["mape_pct"] = s.mape_pct;
          report.samples.push_back(std::move(sample));
        }
    }
    ordered_json agg;
    agg["feature"] = features[f];
    agg["sigma"] = sigma;
    agg["n_seeds"] = R;
    agg["mean_recoverability"] = sample_mean(recov);
    agg["mape_mean"] = double_or_null(mean_skipping_nan(mapes));
    agg["fraction_under_20pct"] = double_or_null(mean_skipping_nan(fractions));
    report.aggregates.push_back(std::move(agg));
  }
  // Pooled row: sample-weighted across every feature and seed.
  ordered_json pooled;
  pooled["feature"] = "(pooled)";
  pooled["sigma"] = sigma;
  pooled["n_seeds"] = R;
  pooled["mean_recoverability"] = nullptr;
  pooled["mape_mean"] = pooled_included == 0
                            ? ordered_json(nullptr)
                            : ordered_json(pooled_sum / static_cast<double>(pooled_included));
  pooled["fraction_under_20pct"] =
      pooled_included == 0
          ? ordered_json(nullptr)
          : ordered_json(static_cast<double>(pooled_under) / static_cast<double>(pooled_included));
  report.aggregates.push_back(std::move(pooled));
  return report;
}

std::vector<std::int64_t> subsample_row_ids(const ExperimentConfig& config,
                                            std::uint64_t replicate_seed, Eigen::Index size) {
  const Workspace ws(config);
  const auto rep = ws.prepare(replicate_seed);
  if (size < 1 || size > static_cast<Eigen::Index>(rep.permuted_ids.size()))
    throw ConfigError("subsample size out of range");
  return {rep.permuted_ids.begin(), rep.permuted_ids.begin() + size};
}

// ---------------------------------------------------------------------------
// Ingest
// ---------------------------------------------------------------------------

std::vector<std::filesystem::path> run_ingest(const ExperimentConfig& config) {
  const Workspace ws(config);
  const auto& cfg = ws.cfg();
  const DataSplit split = split_dataset(ws.selected(), cfg.split_ratios,
                                        derive_seed(cfg.master_seed, "split", cfg.seeds.front()));
  const auto [train, train_scaler] = minmax_scale(split.train);
  const auto [validation, validation_scaler] = minmax_scale(split.validation);
  const auto [test, test_scaler] = minmax_scale(split.test);

  const std::filesystem::path dir = cfg.output_dir / "ingest";
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output dir '" + dir.string() + "': " + ec.message());

  std::vector<std::filesystem::path> written;
  const auto emit_subset = [&](const FeatureTable& table, const std::string& name) {
    const auto path = dir / (name + ".csv");
    write_csv(table, path);
    written.push_back(path);
  };
  emit_subset(train, "train");
  emit_subset(validation, "validation");
  emit_subset(test, "test");

  const auto scaler_json = [](const ScalerParams& params) {
    ordered_json j;
    j["column_names"] = params.column_names;
    j["min"] = std::vector<double>(params.per_column_min.data(),
                                   params.per_column_min.data() + params.per_column_min.size());
    j["max"] = std::vector<double>(params.per_column_max.data(),
                                   params.per_column_max.data() + params.per_column_max.size());
    return j;
  };
  ordered_json scalers;
  scalers["train"] = scaler_json(train_scaler);
  scalers["validation"] = scaler_json(validation_scaler);
  scalers["test"] = scaler_json(test_scaler);
  {
    const auto path = dir / "scalers.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << scalers.dump(2) << "\n";
    written.push_back(path);
  }
  {
    const auto path = dir / "features_kept.txt";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    for (const auto& name : ws.selected().feature_names()) out << name << "\n";
    written.push_back(path);
  }
  if (!ws.dropped().empty()) {
    const auto path = dir / "features_dropped.csv";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << "dropped,against\n";
    for (const auto& d : ws.dropped()) out << d.name << "," << d.against << "\n";
    written.push_back(path);
  }
  return written;
}

}  // namespace noisekit
