#pragma once

// Executable form of every module invariant. Each check throws
// std::runtime_error naming the violated property; the unit suite wraps them
// in test cases and the acceptance runner executes the lot as one criterion.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "noisekit/detect.hpp"
#include "noisekit/harness.hpp"
#include "noisekit/ingest.hpp"
#include "noisekit/knn.hpp"
#include "noisekit/noise.hpp"
#include "noisekit/recover.hpp"
#include "noisekit/seeding.hpp"
#include "noisekit/stats.hpp"

#include "test_support.hpp"

namespace testkit {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error("property violated: " + what);
}

// --- data ingest -----------------------------------------------------------

inline void prop_scale_roundtrip() {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 20; ++round) {
    auto table = random_table(rng, 40, 6);
    const auto [scaled, params] = noisekit::minmax_scale(table);
    const Eigen::MatrixXd back = params.inverse_transform(scaled.values());
    require((back - table.values()).cwiseAbs().maxCoeff() <= 1e-12,
            "scale/inverse-scale round trip within 1e-12");
    require(scaled.values().minCoeff() >= 0.0 && scaled.values().maxCoeff() <= 1.0,
            "scaled values inside [0,1]");
  }
}

inline void prop_prune_idempotent() {
  std::mt19937_64 rng(12);
  for (int round = 0; round < 10; ++round) {
    auto table = random_table(rng, 60, 8);
    // Manufacture correlated pairs so pruning has real work to do.
    Eigen::MatrixXd values = table.values();
    values.col(3) = values.col(0) * 2.0;
    values.col(6) = -values.col(1);
    table = noisekit::FeatureTable::with_fresh_ids(table.column_names(), std::move(values));
    const auto [pruned, dropped] = noisekit::prune_correlated(table, 0.7);
    const auto [pruned_again, dropped_again] = noisekit::prune_correlated(pruned, 0.7);
    require(dropped_again.empty(), "pruning an already-pruned table drops nothing");
    require(pruned_again.column_names() == pruned.column_names(), "idempotent pruning keeps columns");
  }
}

inline void prop_split_partition() {
  std::mt19937_64 rng(13);
  for (int round = 0; round < 10; ++round) {
    const Eigen::Index rows = 30 + static_cast<Eigen::Index>(rng() % 500);
    auto table = random_table(rng, rows, 4);
    const auto split = noisekit::split_dataset(table, {0.8, 0.1, 0.1}, rng());
    std::set<std::int64_t> seen;
    for (const auto* subset : {&split.train, &split.validation, &split.test})
      for (auto id : subset->row_ids()) {
        require(seen.insert(id).second, "row id appears in exactly one subset");
      }
    require(static_cast<Eigen::Index>(seen.size()) == rows, "subsets cover every row id");
  }
}

inline void prop_pearson_affine_invariance() {
  std::mt19937_64 rng(14);
  for (int round = 0; round < 10; ++round) {
    auto table = random_table(rng, 50, 5);
    const Eigen::MatrixXd base = noisekit::pearson_matrix(table);
    Eigen::MatrixXd values = table.values();
    const double slope = 0.5 + std::uniform_real_distribution<double>(0.0, 3.0)(rng);
    const double offset = std::uniform_real_distribution<double>(-5.0, 5.0)(rng);
    values.col(2) = values.col(2).array() * slope + offset;
    const auto scaled = noisekit::FeatureTable::with_fresh_ids(table.column_names(), std::move(values));
    const Eigen::MatrixXd after = noisekit::pearson_matrix(scaled);
    require((after - base).cwiseAbs().maxCoeff() <= 1e-9,
            "pearson invariant under positive affine transform of one column");
  }
}

// --- knn core ---------------------------------------------------------------

inline void prop_knn_oracle_equivalence(int cases = 120, Eigen::Index max_rows = 400,
                                        Eigen::Index max_dims = 46, std::uint64_t seed = 15) {
  std::mt19937_64 rng(seed);
  for (int round = 0; round < cases; ++round) {
    const Eigen::Index rows = 1 + static_cast<Eigen::Index>(rng() % max_rows);
    const Eigen::Index cols = 2 + static_cast<Eigen::Index>(rng() % (max_dims - 1));
    const int grid = (rng() % 2 == 0) ? 4 : 0;  // half the cases force exact ties
    const auto table = random_table(rng, rows, cols, grid);
    noisekit::KnnConfig config;
    config.k = 1 + static_cast<int>(rng() % std::min<Eigen::Index>(10, rows));
    config.minkowski_p = (rng() % 4 == 0) ? 2 : 1;
    config.leaf_size = 1 + static_cast<int>(rng() % 40);
    const std::string target = "f" + std::to_string(rng() % cols);
    const auto index = noisekit::build_index(table, target, config);

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    for (int q = 0; q < 5; ++q) {
      Eigen::VectorXd query(cols - 1);
      if (q == 0 && rows > 0) {
        // exact copy of a training row
        const Eigen::Index row = static_cast<Eigen::Index>(rng() % rows);
        Eigen::Index at = 0;
        for (Eigen::Index j = 0; j < cols; ++j)
          if (table.column_names()[static_cast<std::size_t>(j)] != target)
            query(at++) = table.values()(row, j);
      } else {
        for (Eigen::Index j = 0; j < cols - 1; ++j) {
          double v = uniform(rng);
          if (grid > 0 && q % 2 == 0) v = std::floor(v * grid) / grid;
          query(j) = v;
        }
      }
      const auto fast = noisekit::query_neighbors(index, query, config.k);
      const auto slow = noisekit::brute_force_neighbors(table, target, query, config.k, config);
      require(fast.size() == slow.size(), "kd-tree and brute force return the same count");
      for (std::size_t i = 0; i < fast.size(); ++i) {
        require(fast[i].row_id == slow[i].row_id, "kd-tree and brute force agree on ids and tie-breaks");
        require(std::abs(fast[i].distance - slow[i].distance) <= 1e-12,
                "kd-tree and brute force distances agree within 1e-12");
      }
    }
  }
}

inline void prop_impute_convexity() {
  std::mt19937_64 rng(16);
  for (int round = 0; round < 40; ++round) {
    const Eigen::Index rows = 10 + static_cast<Eigen::Index>(rng() % 100);
    const auto table = random_table(rng, rows, 5, round % 2 == 0 ? 3 : 0);
    noisekit::KnnConfig config;
    config.k = 1 + static_cast<int>(rng() % 5);
    config.weighting = (rng() % 2 == 0) ? noisekit::Weighting::inverse_distance
                                        : noisekit::Weighting::uniform;
    const std::string target = "f4";
    const auto index = noisekit::build_index(table, target, config);
    const Eigen::Index target_col = table.column_index(target);

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::MatrixXd queries(8, 4);
    for (Eigen::Index r = 0; r < queries.rows(); ++r)
      for (Eigen::Index c = 0; c < queries.cols(); ++c) queries(r, c) = uniform(rng);
    const Eigen::VectorXd imputed = noisekit::impute_feature(index, queries);
    for (Eigen::Index r = 0; r < queries.rows(); ++r) {
      const auto neighbors = noisekit::query_neighbors(index, queries.row(r).transpose(), config.k);
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& nb : neighbors) {
        const double t = table.values()(table.row_position(nb.row_id), target_col);
        lo = std::min(lo, t);
        hi = std::max(hi, t);
      }
      require(imputed(r) >= lo - 1e-12 && imputed(r) <= hi + 1e-12,
              "imputed value lies within the neighbor target envelope");
    }
  }
}

inline void prop_knn_translation_invariance() {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 20; ++round) {
    const Eigen::Index rows = 20 + static_cast<Eigen::Index>(rng() % 80);
    // Grid-valued table and integer shift keep the arithmetic exact, so the
    // semantic invariance is observable bit-for-bit.
    const auto table = random_table(rng, rows, 5, 64);
    noisekit::KnnConfig config;
    config.k = 3;
    const std::string target = "f0";
    const Eigen::Index shifted_col = 2;  // an input feature, not the target
    const double shift = 1.0 + static_cast<double>(rng() % 3);

    Eigen::MatrixXd moved = table.values();
    moved.col(shifted_col).array() += shift;
    const auto moved_table = noisekit::FeatureTable::with_fresh_ids(table.column_names(), std::move(moved));

    const auto index = noisekit::build_index(table, target, config);
    const auto moved_index = noisekit::build_index(moved_table, target, config);

    std::uniform_int_distribution<int> grid(0, 63);
    for (int q = 0; q < 6; ++q) {
      Eigen::VectorXd query(4);
      for (Eigen::Index j = 0; j < 4; ++j) query(j) = grid(rng) / 64.0;
      Eigen::VectorXd moved_query = query;
      moved_query(shifted_col - 1) += shift;  // query dims skip the target column f0

      const auto a = noisekit::query_neighbors(index, query, config.k);
      const auto b = noisekit::query_neighbors(moved_index, moved_query, config.k);
      for (std::size_t i = 0; i < a.size(); ++i) {
        require(a[i].row_id == b[i].row_id, "translation leaves neighbor sets unchanged");
        require(a[i].distance == b[i].distance, "translation leaves distances unchanged");
      }
      const double u = noisekit::impute_feature(index, query.transpose())(0);
      const double v = noisekit::impute_feature(moved_index, moved_query.transpose())(0);
      require(u == v, "translation leaves imputed values unchanged");
    }
  }
}

inline void prop_knn_monotone_refinement() {
  std::mt19937_64 rng(18);
  for (int round = 0; round < 20; ++round) {
    const Eigen::Index rows = 12 + static_cast<Eigen::Index>(rng() % 60);
    const auto table = random_table(rng, rows, 4, round % 2 == 0 ? 4 : 0);
    noisekit::KnnConfig config;
    const auto index = noisekit::build_index(table, "f0", config);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Eigen::VectorXd query(3);
    for (Eigen::Index j = 0; j < 3; ++j) query(j) = uniform(rng);
    for (int k = 1; k + 1 <= static_cast<int>(rows); k = k * 2 + 1) {
      const auto small = noisekit::query_neighbors(index, query, k);
      const auto large = noisekit::query_neighbors(index, query, k + 1);
      for (int i = 0; i < k; ++i)
        require(small[static_cast<std::size_t>(i)].row_id == large[static_cast<std::size_t>(i)].row_id,
                "top-k neighbors are a prefix of top-(k+1)");
    }
  }
}

// --- noise lab ---------------------------------------------------------------

inline void prop_noise_single_column() {
  std::mt19937_64 rng(19);
  for (int round = 0; round < 10; ++round) {
    const auto table = random_table(rng, 50, 6);
    noisekit::NoiseSpec spec;
    spec.feature = "f" + std::to_string(rng() % 6);
    spec.sigma = 0.25;
    spec.seed = rng();
    const auto noisy = noisekit::inject_gaussian(table, spec);
    const Eigen::Index corrupted = table.column_index(spec.feature);
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
      if (j == corrupted) continue;
      require((noisy.values().col(j).array() == table.values().col(j).array()).all(),
              "columns other than the corrupted one stay bit-identical");
    }
    require((noisy.values().col(corrupted).array() != table.values().col(corrupted).array()).any(),
            "the corrupted column actually changes");
  }
}

inline void prop_noise_seed_independence() {
  const auto table = [] {
    std::mt19937_64 rng(20);
    return random_table(rng, 2000, 2);
  }();
  struct Cell {
    const char* feature;
    double sigma;
    std::uint64_t replicate;
  };
  const Cell cells[] = {{"f0", 0.125, 1}, {"f1", 0.125, 1}, {"f0", 0.25, 1}, {"f0", 0.125, 2}};
  std::vector<std::uint64_t> derived;
  std::vector<Eigen::ArrayXd> streams;
  for (const auto& cell : cells) {
    const std::uint64_t seed = noisekit::derive_seed(0, "noise", std::string_view(cell.feature),
                                                     cell.sigma, std::int64_t{100}, cell.replicate);
    derived.push_back(seed);
    noisekit::NoiseSpec spec{cell.feature, cell.sigma, seed};
    streams.push_back(noisekit::inject_gaussian(table, spec).column(cell.feature).array() -
                      table.column(cell.feature).array());
  }
  std::set<std::uint64_t> unique(derived.begin(), derived.end());
  require(unique.size() == derived.size(), "distinct cells derive distinct seeds");
  for (std::size_t i = 0; i < streams.size(); ++i)
    for (std::size_t j = i + 1; j < streams.size(); ++j) {
      const double r = noisekit::pearson(streams[i].matrix(), streams[j].matrix());
      require(std::abs(r) < 0.1, "noise streams from distinct cells are uncorrelated");
    }
}

inline void prop_noise_sigma_continuity() {
  std::mt19937_64 rng(21);
  const auto table = random_table(rng, 500, 3);
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma : {1e-2, 1e-4, 1e-6, 1e-9, 1e-12}) {
    noisekit::NoiseSpec spec{"f1", sigma, 7};
    const auto noisy = noisekit::inject_gaussian(table, spec);
    const double max_dev = (noisy.column("f1") - table.column("f1")).cwiseAbs().maxCoeff();
    require(max_dev < prev, "max deviation shrinks with sigma");
    require(max_dev <= 8.0 * sigma, "max deviation is O(sigma)");
    prev = max_dev;
  }
}

// --- detect -------------------------------------------------------------------

inline std::vector<double> random_sample(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = gauss(rng);
  return v;
}

inline void prop_emd_metric_axioms() {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<std::size_t> size(1, 40);
  for (int round = 0; round < 200; ++round) {
    auto a = random_sample(rng, size(rng));
    auto b = random_sample(rng, size(rng));
    auto c = random_sample(rng, size(rng));
    const double ab = noisekit::emd_1d(a, b);
    const double ba = noisekit::emd_1d(b, a);
    const double ac = noisekit::emd_1d(a, c);
    const double cb = noisekit::emd_1d(c, b);
    require(ab >= 0.0, "emd nonnegative");
    require(std::abs(ab - ba) <= 1e-12, "emd symmetric");
    require(ab <= ac + cb + 1e-9, "emd triangle inequality");
    require(noisekit::emd_1d(a, a) == 0.0, "emd identity of indiscernibles");

    // zero iff equal sorted multisets (equal n)
    auto shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    require(noisekit::emd_1d(a, shuffled) == 0.0, "emd zero on permuted copies");
    if (a.size() == b.size()) {
      auto sa = a, sb = b;
      std::sort(sa.begin(), sa.end());
      std::sort(sb.begin(), sb.end());
      if (sa != sb) require(ab > 0.0, "emd positive for distinct multisets");
    }
  }
}

inline void prop_emd_shift_invariance() {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> size(1, 40);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  for (int round = 0; round < 100; ++round) {
    auto a = random_sample(rng, size(rng));
    auto b = random_sample(rng, size(rng));
    const double base = noisekit::emd_1d(a, b);
    const double c = shift(rng);
    for (auto& x : a) x += c;
    for (auto& x : b) x += c;
    require(std::abs(noisekit::emd_1d(a, b) - base) <= 1e-9, "emd invariant under common shift");
  }
}

inline void prop_emd_equal_n_consistency() {
  std::mt19937_64 rng(24);
  std::uniform_int_distribution<std::size_t> size(1, 60);
  for (int round = 0; round < 100; ++round) {
    const std::size_t n = size(rng);
    auto a = random_sample(rng, n);
    auto b = random_sample(rng, n);
    const double emd = noisekit::emd_1d(a, b);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double mean_abs = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean_abs += std::abs(a[i] - b[i]);
    mean_abs /= static_cast<double>(n);
    require(std::abs(emd - mean_abs) <= 1e-9, "equal-n emd equals mean sorted absolute difference");
  }
}

inline void prop_emd_monotone_shift() {
  std::mt19937_64 rng(25);
  for (int round = 0; round < 50; ++round) {
    const auto base = random_sample(rng, 80);
    double prev = -1.0;
    for (double c : {0.0, 0.05, 0.1, 0.5, 1.0, 2.0}) {
      auto shifted = base;
      for (auto& x : shifted) x += c;
      const double emd = noisekit::emd_1d(base, shifted);
      require(emd >= prev - 1e-12, "larger location shift never decreases emd");
      require(std::abs(emd - c) <= 1e-9, "shift of a sample against itself transports exactly c");
      prev = emd;
    }
  }
}

inline void prop_detect_argmax_scale_invariance() {
  std::mt19937_64 rng(26);
  for (int round = 0; round < 50; ++round) {
    std::vector<noisekit::DeltaDistribution> base(5), noise(5);
    for (int f = 0; f < 5; ++f) {
      const auto a = random_sample(rng, 30);
      auto b = random_sample(rng, 30);
      if (f == round % 5)
        for (auto& x : b) x += 3.0;  // one feature clearly shifted
      base[f].feature = noise[f].feature = "f" + std::to_string(f);
      base[f].deltas = Eigen::Map<const Eigen::ArrayXd>(a.data(), 30);
      noise[f].deltas = Eigen::Map<const Eigen::ArrayXd>(b.data(), 30);
      noise[f].source = noisekit::DeltaSource::noise;
    }
    const auto report = noisekit::detect_noisy_feature(base, noise);
    // Scaling every delta by the same positive constant scales every EMD by
    // it, so the argmax feature must not move.
    const double scale = std::uniform_real_distribution<double>(0.1, 9.0)(rng);
    auto scaled_base = base;
    auto scaled_noise = noise;
    for (int f = 0; f < 5; ++f) {
      scaled_base[f].deltas *= scale;
      scaled_noise[f].deltas *= scale;
    }
    const auto scaled_report = noisekit::detect_noisy_feature(scaled_base, scaled_noise);
    require(report.detected_feature == scaled_report.detected_feature,
            "argmax emd feature invariant under positive scaling");
    for (std::size_t f = 0; f < 5; ++f)
      require(std::abs(scaled_report.per_feature_emd[f].second -
                       scale * report.per_feature_emd[f].second) <= 1e-9,
              "emd scales linearly with the deltas");
  }
}

// --- recover ------------------------------------------------------------------

inline void prop_threshold_monotone_percentile() {
  std::mt19937_64 rng(27);
  for (int round = 0; round < 30; ++round) {
    noisekit::DeltaDistribution base;
    const auto values = random_sample(rng, 200);
    base.deltas = Eigen::Map<const Eigen::ArrayXd>(values.data(), 200);
    double prev = -std::numeric_limits<double>::infinity();
    for (double p : {5.0, 25.0, 50.0, 75.0, 90.0, 95.0, 99.0}) {
      const double threshold = noisekit::baseline_threshold(base, {p, true});
      require(threshold >= prev, "baseline threshold monotone in percentile");
      prev = threshold;
    }
  }
}

inline void prop_mape_scale_invariance() {
  std::mt19937_64 rng(28);
  for (int round = 0; round < 30; ++round) {
    std::map<std::int64_t, double> corrected, clean;
    std::uniform_real_distribution<double> uniform(0.5, 2.0);
    for (std::int64_t id = 0; id < 20; ++id) {
      clean[id] = uniform(rng);
      corrected[id] = clean[id] + 0.2 * uniform(rng);
    }
    const auto base = noisekit::mape(corrected, clean);
    const double scale = uniform(rng) * 10.0;
    std::map<std::int64_t, double> corrected2, clean2;
    for (const auto& [id, v] : corrected) corrected2[id] = v * scale;
    for (const auto& [id, v] : clean) clean2[id] = v * scale;
    const auto scaled = noisekit::mape(corrected2, clean2);
    for (const auto& [id, pct] : base.per_sample)
      require(std::abs(scaled.per_sample.at(id) - pct) <= 1e-9, "mape scale invariant per sample");
  }
}

inline void prop_correction_envelope() {
  std::mt19937_64 rng(29);
  const auto table = make_latent_table(400, 5, 2, 0.05, 30);
  const auto [scaled, params] = noisekit::minmax_scale(table);
  noisekit::KnnConfig config;
  const std::string feature = "f2";
  const auto index = noisekit::build_index(scaled, feature, config);

  noisekit::NoiseSpec spec{feature, 0.25, 31};
  const auto noisy = noisekit::inject_gaussian(scaled, spec);
  std::vector<std::int64_t> ids;
  for (std::int64_t id = 0; id < 50; ++id) ids.push_back(id);
  const auto corrected = noisekit::correct_samples(index, noisy, feature, ids);

  const auto inputs = index.input_features();
  for (const auto& [id, value] : corrected) {
    Eigen::VectorXd query(static_cast<Eigen::Index>(inputs.size()));
    const Eigen::Index pos = noisy.row_position(id);
    for (std::size_t j = 0; j < inputs.size(); ++j)
      query(static_cast<Eigen::Index>(j)) = noisy.values()(pos, noisy.column_index(inputs[j]));
    const auto neighbors = noisekit::brute_force_neighbors(scaled, feature, query, config.k, config);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& nb : neighbors) {
      const double t = scaled.values()(scaled.row_position(nb.row_id), scaled.column_index(feature));
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
    require(value >= lo - 1e-12 && value <= hi + 1e-12,
            "corrected values stay inside the neighbor target envelope");
  }
}

inline void prop_flag_monotone_sigma_expectation() {
  const auto table = make_latent_table(1000, 6, 3, 0.03, 32);
  noisekit::KnnConfig config;
  const std::string feature = "f1";
  const std::vector<double> sigmas{0.02, 0.05, 0.1, 0.2, 0.4};
  std::vector<double> mean_recoverability(sigmas.size(), 0.0);
  const int n_seeds = 5;
  for (int seed = 0; seed < n_seeds; ++seed) {
    const auto split = noisekit::split_dataset(table, {0.8, 0.1, 0.1}, 100 + seed);
    const auto [train, tp] = noisekit::minmax_scale(split.train);
    const auto [validation, vp] = noisekit::minmax_scale(split.validation);
    const auto [test, sp] = noisekit::minmax_scale(split.test);
    const auto index = noisekit::build_index(train, feature, config);
    const auto base = noisekit::compute_delta(index, validation, noisekit::DeltaSource::base);
    const double threshold = noisekit::baseline_threshold(base, {});
    for (std::size_t s = 0; s < sigmas.size(); ++s) {
      noisekit::NoiseSpec spec{feature, sigmas[s], 500 + static_cast<std::uint64_t>(seed) * 7 + s};
      const auto noisy = noisekit::inject_gaussian(test, spec);
      const auto noise = noisekit::compute_delta(index, noisy, noisekit::DeltaSource::noise);
      mean_recoverability[s] += noisekit::flag_recoverable(noise, threshold, {}).second / n_seeds;
    }
  }
  for (std::size_t s = 1; s < sigmas.size(); ++s)
    require(mean_recoverability[s] + 1e-9 >= mean_recoverability[s - 1],
            "average recoverability non-decreasing in sigma");
}

// --- harness -------------------------------------------------------------------

inline noisekit::ExperimentConfig tiny_config(const TempDir& dir, const std::filesystem::path& csv) {
  noisekit::ExperimentConfig cfg;
  cfg.input_path = csv;
  cfg.target_column = "target";
  cfg.prune_threshold = 1.0;
  cfg.sigma_ladder = {0.0625, 0.25};
  cfg.seeds = {1, 2};
  cfg.master_seed = 5;
  cfg.output_dir = dir.path() / "out";
  cfg.threads = 2;
  return cfg;
}

inline void prop_seed_axis_isolation() {
  const std::uint64_t base =
      noisekit::derive_seed(9, "noise", std::string_view("f0"), 0.125, std::int64_t{100}, std::uint64_t{1});
  require(base == noisekit::derive_seed(9, "noise", std::string_view("f0"), 0.125, std::int64_t{100},
                                        std::uint64_t{1}),
          "seed derivation is deterministic");
  std::set<std::uint64_t> variants{base};
  variants.insert(noisekit::derive_seed(9, "noise", std::string_view("f1"), 0.125, std::int64_t{100},
                                        std::uint64_t{1}));
  variants.insert(noisekit::derive_seed(9, "noise", std::string_view("f0"), 0.25, std::int64_t{100},
                                        std::uint64_t{1}));
  variants.insert(noisekit::derive_seed(9, "noise", std::string_view("f0"), 0.125, std::int64_t{200},
                                        std::uint64_t{1}));
  variants.insert(noisekit::derive_seed(9, "noise", std::string_view("f0"), 0.125, std::int64_t{100},
                                        std::uint64_t{2}));
  variants.insert(noisekit::derive_seed(8, "noise", std::string_view("f0"), 0.125, std::int64_t{100},
                                        std::uint64_t{1}));
  variants.insert(noisekit::derive_seed(9, "split", std::string_view("f0"), 0.125, std::int64_t{100},
                                        std::uint64_t{1}));
  require(variants.size() == 7, "changing any axis changes the derived seed");
}

inline void prop_subsample_nesting() {
  TempDir dir("nesting");
  const auto csv = write_latent_csv(dir, "data.csv", 400, 5, 2, 0.05, 33);
  auto cfg = tiny_config(dir, csv);
  for (std::uint64_t rep : {1ULL, 2ULL}) {
    const auto small = noisekit::subsample_row_ids(cfg, rep, 40);
    const auto large = noisekit::subsample_row_ids(cfg, rep, 80);
    require(small.size() == 40 && large.size() == 80, "subsample sizes honored");
    require(std::equal(small.begin(), small.end(), large.begin()),
            "size-z subsample is a prefix of the size-2z subsample");
  }
}

inline void prop_harness_determinism() {
  TempDir dir("determinism");
  const auto csv = write_latent_csv(dir, "data.csv", 300, 4, 2, 0.05, 34);
  auto cfg = tiny_config(dir, csv);
  cfg.sigma_ladder = {0.25};
  auto one = noisekit::run_detection_sweep(cfg);
  cfg.threads = 1;
  auto two = noisekit::run_detection_sweep(cfg);
  require(one.to_json().dump() == two.to_json().dump(),
          "detection sweep bytes identical across thread counts");
}

inline void prop_cross_experiment_consistency() {
  TempDir dir("consistency");
  const auto csv = write_latent_csv(dir, "data.csv", 300, 4, 2, 0.05, 35);
  auto cfg = tiny_config(dir, csv);
  const auto report = noisekit::run_detection_sweep(cfg);

  // Re-derive detectability from the emitted per-trial rows and compare with
  // the aggregate rows.
  std::map<std::pair<double, long long>, std::map<std::uint64_t, std::vector<bool>>> groups;
  for (const auto& cell : report.cells)
    groups[{cell.at("sigma").get<double>(), cell.at("train_size").get<long long>()}]
          [cell.at("seed").get<std::uint64_t>()]
              .push_back(cell.at("hit").get<bool>());
  for (const auto& agg : report.aggregates) {
    const auto key = std::make_pair(agg.at("sigma").get<double>(), agg.at("train_size").get<long long>());
    std::vector<double> per_seed;
    for (const auto& [seed, hits] : groups.at(key)) {
      std::vector<noisekit::DetectionReport> reports(hits.size());
      for (std::size_t i = 0; i < hits.size(); ++i) reports[i].hit = hits[i];
      per_seed.push_back(noisekit::detectability_rate(reports));
    }
    require(std::abs(noisekit::sample_mean(per_seed) - agg.at("mean_detectability").get<double>()) <= 1e-12,
            "sweep detectability equals detectability_rate over its own trial rows");
  }
}

inline void run_all_properties() {
  prop_scale_roundtrip();
  prop_prune_idempotent();
  prop_split_partition();
  prop_pearson_affine_invariance();
  prop_knn_oracle_equivalence();
  prop_impute_convexity();
  prop_knn_translation_invariance();
  prop_knn_monotone_refinement();
  prop_noise_single_column();
  prop_noise_seed_independence();
  prop_noise_sigma_continuity();
  prop_emd_metric_axioms();
  prop_emd_shift_invariance();
  prop_emd_equal_n_consistency();
  prop_emd_monotone_shift();
  prop_detect_argmax_scale_invariance();
  prop_threshold_monotone_percentile();
  prop_mape_scale_invariance();
  prop_correction_envelope();
  prop_flag_monotone_sigma_expectation();
  prop_seed_axis_isolation();
  prop_subsample_nesting();
  prop_harness_determinism();
  prop_cross_experiment_consistency();
}

}  // namespace testkit
